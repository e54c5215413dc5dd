#pragma once

#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "unicon/block.hpp"

namespace unicon {

// Ordered record of (tick, block name) leaf steps, for trace-based checks of
// the combinator semantics.
struct StepTrace {
  std::vector<std::pair<std::uint64_t, std::string>> entries;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& [t, n] : entries) out.push_back(n);
    return out;
  }

  // "tick,block_name" per line
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [tick, name] : entries) os << tick << ',' << name << '\n';
    return os.str();
  }
};

struct StepOptions {
  StepTrace* trace = nullptr;
  bool enforce_access = false;
};

// A node of the execution graph: a leaf block or a loop/zip/chain composite.
// The tree is stepped once per executor tick; each combinator dispatches one
// tick's worth of work to its children.
class GraphNode {
 public:
  enum class Kind { leaf, loop, zip, chain };
  using Ptr = std::unique_ptr<GraphNode>;

  Kind kind;
  ControlBlock block;              // leaf
  Predicate predicate;             // loop
  std::vector<Ptr> children;       // loop (1), zip, chain

  static Ptr leaf(ControlBlock b) {
    auto n = std::make_unique<GraphNode>();
    n->kind = Kind::leaf;
    n->block = std::move(b);
    return n;
  }

  static Ptr loop(Ptr child, Predicate p) {
    auto n = std::make_unique<GraphNode>();
    n->kind = Kind::loop;
    n->predicate = std::move(p);
    n->children.push_back(std::move(child));
    return n;
  }

  static Ptr zip(std::vector<Ptr> cs) {
    auto n = std::make_unique<GraphNode>();
    n->kind = Kind::zip;
    n->children = std::move(cs);
    return n;
  }

  static Ptr chain(std::vector<Ptr> cs) {
    auto n = std::make_unique<GraphNode>();
    n->kind = Kind::chain;
    n->children = std::move(cs);
    return n;
  }

  // One executor tick. Returns the node's done flag for this tick.
  bool step(StateSpace& space, const StepOptions& opts, std::uint64_t tick) {
    switch (kind) {
      case Kind::leaf: {
        if (opts.trace) opts.trace->entries.emplace_back(tick, block.name);
        Accessor acc(space, block, opts.enforce_access);
        try {
          return block.step(acc);
        } catch (const Error&) {
          throw;
        } catch (const std::exception& e) {
          throw BlockError(block.name, e.what());
        }
      }
      case Kind::loop: {
        // The child restarts when its own sequence ends; only the predicate
        // (evaluated after the child's step) ends the loop.
        if (children[0]->step(space, opts, tick)) children[0]->reset();
        return predicate(space);
      }
      case Kind::zip: {
        // Every child steps once per tick, in declaration order; done at the
        // first tick on which any child reports done.
        bool any_done = false;
        for (auto& c : children) any_done = c->step(space, opts, tick) || any_done;
        return any_done;
      }
      case Kind::chain: {
        // One step of the current child per tick; advance on the next tick
        // after it reports done.
        if (cursor_ >= children.size()) return true;
        if (children[cursor_]->step(space, opts, tick)) ++cursor_;
        return cursor_ >= children.size();
      }
    }
    return true;
  }

  void reset() {
    cursor_ = 0;
    if (kind == Kind::leaf) {
      if (block.reset) block.reset();
    } else {
      for (auto& c : children) c->reset();
    }
  }

  template <typename F>
  void for_each_leaf(F&& f) const {
    if (kind == Kind::leaf) {
      f(block);
    } else {
      for (const auto& c : children) c->for_each_leaf(f);
    }
  }

 private:
  std::size_t cursor_ = 0;  // chain progress
};

struct Issue {
  enum class Code { unknown_label, empty_composite, duplicate_writer };
  Code code;
  std::string subject;  // label or node kind
  std::string message;
};

namespace detail {

inline void collect_writes(const GraphNode& node, std::set<std::string>& out) {
  node.for_each_leaf([&](const ControlBlock& b) { out.insert(b.writes.begin(), b.writes.end()); });
}

inline void validate_node(const GraphNode& node, const StateSpace& space,
                          std::vector<Issue>& issues) {
  switch (node.kind) {
    case GraphNode::Kind::leaf: {
      auto check = [&](const std::vector<std::string>& labels) {
        for (const auto& l : labels)
          if (!space.has(l))
            issues.push_back({Issue::Code::unknown_label, l,
                              "block '" + node.block.name + "' references unregistered '" + l + "'"});
      };
      check(node.block.reads);
      check(node.block.writes);
      break;
    }
    case GraphNode::Kind::zip: {
      if (node.children.empty())
        issues.push_back({Issue::Code::empty_composite, "zip", "zip with no children"});
      // Two zip siblings writing the same label within one tick shadow each
      // other; flag every label claimed by more than one child subtree.
      std::set<std::string> seen, flagged;
      for (const auto& c : node.children) {
        std::set<std::string> w;
        collect_writes(*c, w);
        for (const auto& l : w) {
          if (seen.count(l) && !flagged.count(l)) {
            issues.push_back({Issue::Code::duplicate_writer, l,
                              "label '" + l + "' written by multiple zip children"});
            flagged.insert(l);
          }
          seen.insert(l);
        }
      }
      break;
    }
    case GraphNode::Kind::chain:
      if (node.children.empty())
        issues.push_back({Issue::Code::empty_composite, "chain", "chain with no children"});
      break;
    case GraphNode::Kind::loop:
      break;
  }
  for (const auto& c : node.children) validate_node(*c, space, issues);
}

}  // namespace detail

inline std::vector<Issue> validate(const GraphNode& root, const StateSpace& space) {
  std::vector<Issue> issues;
  detail::validate_node(root, space, issues);
  return issues;
}

}  // namespace unicon
