#pragma once

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "unicon/backends.hpp"
#include "unicon/graph.hpp"
#include "unicon/platform.hpp"
#include "unicon/registry.hpp"

namespace unicon {

// ---------------------------------------------------------------------------
// Predicates: "<label>" (truthy first element) or "<label> <op> <number>"

inline Predicate parse_predicate(const std::string& text) {
  std::istringstream is(text);
  std::string label, op;
  double rhs = 0.0;
  if (!(is >> label)) throw SpecInvalid("empty predicate");
  bool compare = bool(is >> op);
  if (compare && !(is >> rhs)) throw SpecInvalid("predicate '" + text + "': missing number");
  std::string extra;
  if (is >> extra) throw SpecInvalid("predicate '" + text + "': trailing tokens");

  std::function<bool(double)> cmp;
  if (!compare) cmp = [](double v) { return v != 0.0; };
  else if (op == "==") cmp = [rhs](double v) { return v == rhs; };
  else if (op == "!=") cmp = [rhs](double v) { return v != rhs; };
  else if (op == "<") cmp = [rhs](double v) { return v < rhs; };
  else if (op == "<=") cmp = [rhs](double v) { return v <= rhs; };
  else if (op == ">") cmp = [rhs](double v) { return v > rhs; };
  else if (op == ">=") cmp = [rhs](double v) { return v >= rhs; };
  else throw SpecInvalid("predicate '" + text + "': unknown operator '" + op + "'");

  Predicate p;
  p.text = text;
  p.fn = [label, cmp](StateSpace& s) { return cmp(s.read(label).at_f64(0)); };
  return p;
}

// ---------------------------------------------------------------------------
// Workflow config AST

struct StateDecl {
  std::string label;
  DType dtype{};
  std::vector<std::uint32_t> shape;
  std::vector<double> init;  // empty = zero fill; one value = scalar fill
  int line = 0;
};

struct GraphSpec {
  enum class Kind { block, loop, zip, chain };
  Kind kind = Kind::block;
  std::string block_name;
  std::vector<std::string> args;
  std::string predicate;  // loop
  std::vector<GraphSpec> children;
};

struct WorkflowConfig {
  std::vector<StateDecl> states;
  std::optional<GraphSpec> graph;
  std::string backend_text = "inproc";
  double rate_hz = 50.0;
  std::uint64_t max_ticks = 0;  // 0 = run until the graph is done
  std::string platform_file;
  std::vector<std::string> workflow_joints;
};

// ---------------------------------------------------------------------------
// Graph text grammar (s-expression-like):
//   node  := block( name args... )
//          | loop( node until "predicate" )
//          | zip( node... ) | chain( node... )

namespace detail {

struct Token {
  enum class Kind { ident, lparen, rparen, str, end };
  Kind kind;
  std::string text;
  int line, col;
};

class GraphLexer {
 public:
  // Each source piece carries its original line number.
  explicit GraphLexer(const std::vector<std::pair<int, std::string>>& lines) : lines_(lines) {}

  Token next() {
    for (;;) {
      if (li_ >= lines_.size()) return {Token::Kind::end, "", last_line(), 1};
      const std::string& s = lines_[li_].second;
      while (ci_ < s.size() && std::isspace(static_cast<unsigned char>(s[ci_]))) ++ci_;
      if (ci_ >= s.size()) {
        ++li_;
        ci_ = 0;
        continue;
      }
      int line = lines_[li_].first;
      int col = static_cast<int>(ci_) + 1;
      char c = s[ci_];
      if (c == '(') { ++ci_; return {Token::Kind::lparen, "(", line, col}; }
      if (c == ')') { ++ci_; return {Token::Kind::rparen, ")", line, col}; }
      if (c == '"') {
        std::size_t end = s.find('"', ci_ + 1);
        if (end == std::string::npos) throw ParseError(line, col, "unterminated string");
        std::string text = s.substr(ci_ + 1, end - ci_ - 1);
        ci_ = end + 1;
        return {Token::Kind::str, text, line, col};
      }
      std::size_t start = ci_;
      while (ci_ < s.size() && !std::isspace(static_cast<unsigned char>(s[ci_])) &&
             s[ci_] != '(' && s[ci_] != ')' && s[ci_] != '"')
        ++ci_;
      return {Token::Kind::ident, s.substr(start, ci_ - start), line, col};
    }
  }

 private:
  int last_line() const { return lines_.empty() ? 1 : lines_.back().first; }
  const std::vector<std::pair<int, std::string>>& lines_;
  std::size_t li_ = 0;
  std::size_t ci_ = 0;
};

class GraphParser {
 public:
  explicit GraphParser(GraphLexer lex) : lex_(std::move(lex)) { advance(); }

  GraphSpec parse_root() {
    GraphSpec g = parse_node();
    if (tok_.kind != Token::Kind::end)
      throw ParseError(tok_.line, tok_.col, "trailing input after graph root");
    return g;
  }

 private:
  void advance() { tok_ = lex_.next(); }

  Token expect(Token::Kind k, const char* what) {
    if (tok_.kind != k) throw ParseError(tok_.line, tok_.col, std::string("expected ") + what);
    Token t = tok_;
    advance();
    return t;
  }

  GraphSpec parse_node() {
    Token head = expect(Token::Kind::ident, "node kind");
    GraphSpec g;
    if (head.text == "block") g.kind = GraphSpec::Kind::block;
    else if (head.text == "loop") g.kind = GraphSpec::Kind::loop;
    else if (head.text == "zip") g.kind = GraphSpec::Kind::zip;
    else if (head.text == "chain") g.kind = GraphSpec::Kind::chain;
    else throw ParseError(head.line, head.col, "unknown node kind '" + head.text + "'");
    expect(Token::Kind::lparen, "'('");

    switch (g.kind) {
      case GraphSpec::Kind::block: {
        Token name = expect(Token::Kind::ident, "block name");
        g.block_name = name.text;
        while (tok_.kind == Token::Kind::ident) {
          g.args.push_back(tok_.text);
          advance();
        }
        expect(Token::Kind::rparen, "')'");
        break;
      }
      case GraphSpec::Kind::loop: {
        g.children.push_back(parse_node());
        Token kw = expect(Token::Kind::ident, "'until'");
        if (kw.text != "until") throw ParseError(kw.line, kw.col, "expected 'until'");
        Token pred = expect(Token::Kind::str, "quoted predicate");
        g.predicate = pred.text;
        expect(Token::Kind::rparen, "')'");
        break;
      }
      case GraphSpec::Kind::zip:
      case GraphSpec::Kind::chain: {
        while (tok_.kind == Token::Kind::ident) g.children.push_back(parse_node());
        expect(Token::Kind::rparen, "')'");
        break;
      }
    }
    return g;
  }

  GraphLexer lex_;
  Token tok_{Token::Kind::end, "", 0, 0};
};

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline std::string graph_to_text(const GraphSpec& g) {
  switch (g.kind) {
    case GraphSpec::Kind::block: {
      std::string s = "block( " + g.block_name;
      for (const auto& a : g.args) s += " " + a;
      return s + " )";
    }
    case GraphSpec::Kind::loop:
      return "loop( " + graph_to_text(g.children[0]) + " until \"" + g.predicate + "\" )";
    case GraphSpec::Kind::zip:
    case GraphSpec::Kind::chain: {
      std::string s = g.kind == GraphSpec::Kind::zip ? "zip(" : "chain(";
      for (const auto& c : g.children) s += " " + graph_to_text(c);
      return s + " )";
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// Workflow config: line-oriented sections [states], [graph], [run], [platform]

inline WorkflowConfig parse_workflow(const std::string& text) {
  WorkflowConfig cfg;
  std::vector<std::pair<int, std::string>> graph_lines;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  bool saw_ticks = false;

  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, 1, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "states" && section != "graph" && section != "run" && section != "platform")
        throw ParseError(lineno, 1, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) throw ParseError(lineno, 1, "content before any section header");

    if (section == "graph") {
      graph_lines.emplace_back(lineno, line);
      continue;
    }

    if (section == "states") {
      std::istringstream ls(line);
      StateDecl d;
      d.line = lineno;
      std::string dtype, dims;
      if (!(ls >> d.label >> dtype >> dims))
        throw ParseError(lineno, 1, "state line needs: <label> <dtype> <dims> [init=...]");
      try {
        d.dtype = parse_dtype(dtype);
      } catch (const Error& e) {
        throw ParseError(lineno, 1, e.what());
      }
      for (const auto& part : detail::split(dims, ',')) {
        int v;
        try {
          v = std::stoi(part);
        } catch (...) {
          throw ParseError(lineno, 1, "bad dimension '" + part + "'");
        }
        if (v < 1) throw ParseError(lineno, 1, "dimensions must be >= 1");
        d.shape.push_back(static_cast<std::uint32_t>(v));
      }
      std::string rest;
      if (ls >> rest) {
        if (rest.rfind("init=", 0) != 0)
          throw ParseError(lineno, 1, "unknown token '" + rest + "' (expected init=...)");
        for (const auto& part : detail::split(rest.substr(5), ',')) {
          try {
            d.init.push_back(std::stod(part));
          } catch (...) {
            throw ParseError(lineno, 1, "bad init value '" + part + "'");
          }
        }
        std::size_t n = shape_elem_count(d.shape);
        if (d.init.size() != 1 && d.init.size() != n)
          throw ParseError(lineno, 1, "init has " + std::to_string(d.init.size()) +
                                          " values, state has " + std::to_string(n));
      }
      std::string extra;
      if (ls >> extra) throw ParseError(lineno, 1, "trailing token '" + extra + "'");
      cfg.states.push_back(std::move(d));
      continue;
    }

    // key = value sections
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, 1, "expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    auto num = [&](const char* what) {
      try {
        return std::stod(value);
      } catch (...) {
        throw ParseError(lineno, 1, std::string("bad ") + what + " value '" + value + "'");
      }
    };
    if (section == "run") {
      if (key == "backend") cfg.backend_text = value;
      else if (key == "rate") cfg.rate_hz = num("rate");
      else if (key == "ticks") { cfg.max_ticks = static_cast<std::uint64_t>(num("ticks")); saw_ticks = true; }
      else throw ParseError(lineno, 1, "unknown key '" + key + "' in [run]");
    } else {  // platform
      if (key == "file") cfg.platform_file = value;
      else if (key == "joints") {
        for (const auto& j : detail::split(value, ','))
          cfg.workflow_joints.push_back(detail::trim(j));
      } else throw ParseError(lineno, 1, "unknown key '" + key + "' in [platform]");
    }
  }

  if (!graph_lines.empty()) {
    detail::GraphParser parser{detail::GraphLexer(graph_lines)};
    cfg.graph = parser.parse_root();
  }
  if (!saw_ticks) cfg.max_ticks = 0;
  return cfg;
}

inline std::string print_workflow(const WorkflowConfig& cfg) {
  std::ostringstream os;
  os << "[states]\n";
  for (const auto& d : cfg.states) {
    os << d.label << ' ' << dtype_name(d.dtype) << ' ';
    for (std::size_t i = 0; i < d.shape.size(); ++i) os << (i ? "," : "") << d.shape[i];
    if (!d.init.empty()) {
      os << " init=";
      for (std::size_t i = 0; i < d.init.size(); ++i) {
        if (i) os << ',';
        std::ostringstream v;
        v << d.init[i];
        os << v.str();
      }
    }
    os << '\n';
  }
  if (cfg.graph) {
    os << "\n[graph]\n" << graph_to_text(*cfg.graph) << '\n';
  }
  os << "\n[run]\n";
  os << "backend = " << cfg.backend_text << '\n';
  os << "rate = " << cfg.rate_hz << '\n';
  if (cfg.max_ticks) os << "ticks = " << cfg.max_ticks << '\n';
  if (!cfg.platform_file.empty() || !cfg.workflow_joints.empty()) {
    os << "\n[platform]\n";
    if (!cfg.platform_file.empty()) os << "file = " << cfg.platform_file << '\n';
    if (!cfg.workflow_joints.empty()) {
      os << "joints = ";
      for (std::size_t i = 0; i < cfg.workflow_joints.size(); ++i)
        os << (i ? "," : "") << cfg.workflow_joints[i];
      os << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Platform spec file: [platform] key = value, [joints] name kp kd tau_max lo hi

inline PlatformSpec parse_platform_spec(const std::string& text) {
  PlatformSpec spec;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, 1, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "platform" && section != "joints")
        throw ParseError(lineno, 1, "unknown section [" + section + "]");
      continue;
    }
    if (section == "joints") {
      std::istringstream ls(line);
      std::string name;
      double kp, kd, tau, lo, hi;
      if (!(ls >> name >> kp >> kd >> tau >> lo >> hi))
        throw ParseError(lineno, 1, "joint line needs: name kp kd tau_max lo hi");
      spec.joint_names.push_back(name);
      spec.kp.push_back(kp);
      spec.kd.push_back(kd);
      spec.torque_limit.push_back(tau);
      spec.position_limits.emplace_back(lo, hi);
      continue;
    }
    if (section != "platform") throw ParseError(lineno, 1, "content before any section header");
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, 1, "expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    auto num = [&] {
      try {
        return std::stod(value);
      } catch (...) {
        throw ParseError(lineno, 1, "bad numeric value '" + value + "'");
      }
    };
    if (key == "name") spec.name = value;
    else if (key == "kind") {
      if (value == "sim") spec.kind = PlatformSpec::Kind::sim;
      else if (value == "loopback") spec.kind = PlatformSpec::Kind::loopback;
      else throw ParseError(lineno, 1, "unknown platform kind '" + value + "'");
    } else if (key == "rate") spec.state_rate_hz = num();
    else if (key == "mode") {
      if (value == "thread") spec.threaded = true;
      else if (value == "stepped") spec.threaded = false;
      else throw ParseError(lineno, 1, "unknown mode '" + value + "' (thread|stepped)");
    } else if (key == "substeps") spec.substeps = static_cast<int>(num());
    else if (key == "inertia") spec.inertia = num();
    else if (key == "damping") spec.damping = num();
    else if (key == "echo_delay") spec.echo_delay = static_cast<int>(num());
    else throw ParseError(lineno, 1, "unknown key '" + key + "' in [platform]");
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ParseError(lineno, 1, e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Assembly: config -> space, platform, execution graph

inline void apply_states(const WorkflowConfig& cfg, StateSpace& space) {
  for (const auto& d : cfg.states) {
    if (d.init.empty()) {
      space.register_zeros(d.label, d.dtype, d.shape);
      continue;
    }
    std::size_t n = shape_elem_count(d.shape);
    std::vector<double> init = d.init;
    if (init.size() == 1) init.assign(n, init[0]);
    std::vector<std::byte> bytes(n * dtype_size(d.dtype));
    for (std::size_t i = 0; i < n; ++i) store_f64(d.dtype, bytes.data(), i, init[i]);
    space.register_bytes(d.label, d.dtype, d.shape, bytes);
  }
}

inline GraphNode::Ptr build_graph(const GraphSpec& g, BlockContext& ctx,
                                  const BlockRegistry& registry = BlockRegistry::global()) {
  switch (g.kind) {
    case GraphSpec::Kind::block:
      return GraphNode::leaf(registry.make(g.block_name, g.args, ctx));
    case GraphSpec::Kind::loop:
      return GraphNode::loop(build_graph(g.children[0], ctx, registry),
                             parse_predicate(g.predicate));
    case GraphSpec::Kind::zip:
    case GraphSpec::Kind::chain: {
      std::vector<GraphNode::Ptr> kids;
      for (const auto& c : g.children) kids.push_back(build_graph(c, ctx, registry));
      return g.kind == GraphSpec::Kind::zip ? GraphNode::zip(std::move(kids))
                                            : GraphNode::chain(std::move(kids));
    }
  }
  throw SpecInvalid("empty graph node");
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoFailure("cannot open '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace unicon
