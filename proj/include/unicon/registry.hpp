#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "unicon/block.hpp"
#include "unicon/platform.hpp"

namespace unicon {

struct BlockContext {
  StateSpace& space;
  PlatformBlocks* platform = nullptr;  // null when the workflow has no platform
};

using BlockFactory =
    std::function<ControlBlock(const std::vector<std::string>& args, BlockContext& ctx)>;

// Name-addressed builtin blocks for textual workflows. Custom blocks register
// here programmatically.
class BlockRegistry {
 public:
  static BlockRegistry& global() {
    static BlockRegistry reg = make_default();
    return reg;
  }

  void add(const std::string& name, BlockFactory factory) { factories_[name] = std::move(factory); }

  bool has(const std::string& name) const { return factories_.count(name) != 0; }

  ControlBlock make(const std::string& name, const std::vector<std::string>& args,
                    BlockContext& ctx) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw SpecInvalid("unknown block: " + name);
    return it->second(args, ctx);
  }

  static BlockRegistry make_default() {
    BlockRegistry reg;

    // counter <label> [limit] : label += 1 each step, done once value >= limit
    reg.add("counter", [](const std::vector<std::string>& args, BlockContext& ctx) {
      if (args.empty()) throw SpecInvalid("counter needs a label argument");
      std::string label = args[0];
      double limit = args.size() > 1 ? std::stod(args[1]) : 0.0;
      bool has_limit = args.size() > 1;
      ControlBlock b;
      b.name = "counter";
      b.reads = {label};
      b.writes = {label};
      b.step = [label, limit, has_limit](Accessor& a) {
        auto v = a.read_f64(label);
        v[0] += 1.0;
        a.write_f64(label, v);
        return has_limit && v[0] >= limit;
      };
      (void)ctx;
      return b;
    });

    // identity_control : q_des := q
    reg.add("identity_control", [](const std::vector<std::string>&, BlockContext&) {
      ControlBlock b;
      b.name = "identity_control";
      b.reads = {"q"};
      b.writes = {"q_des"};
      b.step = [](Accessor& a) {
        a.write_f64("q_des", a.read_f64("q"));
        return false;
      };
      return b;
    });

    // noop : does nothing, never done
    reg.add("noop", [](const std::vector<std::string>&, BlockContext&) {
      ControlBlock b;
      b.name = "noop";
      b.step = [](Accessor&) { return false; };
      return b;
    });

    auto platform_block = [](const char* which) {
      return [which](const std::vector<std::string>&, BlockContext& ctx) -> ControlBlock {
        if (!ctx.platform)
          throw SpecInvalid(std::string("block '") + which + "' needs a platform in the workflow");
        if (std::string(which) == "recv") return ctx.platform->recv;
        if (std::string(which) == "send") return ctx.platform->send;
        return ctx.platform->close;
      };
    };
    reg.add("recv", platform_block("recv"));
    reg.add("send", platform_block("send"));
    reg.add("close", platform_block("close"));

    return reg;
  }

 private:
  std::map<std::string, BlockFactory> factories_;
};

}  // namespace unicon
