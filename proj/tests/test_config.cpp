#include <catch2/catch_amalgamated.hpp>

#include "unicon/config.hpp"
#include "unicon/executor.hpp"

using namespace unicon;

TEST_CASE("minimal workflow parses") {
  auto cfg = parse_workflow(
      "[states]\n"
      "c f64 1\n"
      "\n"
      "[graph]\n"
      "block( counter c 3 )\n"
      "\n"
      "[run]\n"
      "backend = inproc\n"
      "rate = 100\n"
      "ticks = 10\n");
  REQUIRE(cfg.states.size() == 1);
  CHECK(cfg.states[0].label == "c");
  CHECK(cfg.states[0].dtype == DType::f64);
  CHECK(cfg.states[0].shape == std::vector<std::uint32_t>({1}));
  REQUIRE(cfg.graph.has_value());
  CHECK(cfg.graph->kind == GraphSpec::Kind::block);
  CHECK(cfg.graph->block_name == "counter");
  CHECK(cfg.graph->args == std::vector<std::string>({"c", "3"}));
  CHECK(cfg.rate_hz == 100.0);
  CHECK(cfg.max_ticks == 10);
}

TEST_CASE("state lines accept multi-dim shapes and init values") {
  auto cfg = parse_workflow(
      "[states]\n"
      "img u8 4,4\n"
      "kp f64 3 init=80\n"
      "quat f32 4 init=1,0,0,0\n");
  CHECK(cfg.states[0].shape == std::vector<std::uint32_t>({4, 4}));
  CHECK(cfg.states[1].init == std::vector<double>({80}));
  CHECK(cfg.states[2].init == std::vector<double>({1, 0, 0, 0}));

  StateSpace s;
  apply_states(cfg, s);
  CHECK(s.meta("img").elem_count == 16);
  CHECK(s.read_f64("kp") == std::vector<double>({80, 80, 80}));
  CHECK(s.read_values<float>("quat") == std::vector<float>({1, 0, 0, 0}));
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_workflow("[states]\nq f64 1\n\n[graph]\nlop( block( noop ) )\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 5);
    CHECK(std::string(e.what()).find("lop") != std::string::npos);
  }
}

TEST_CASE("unknown sections, keys and stray content are rejected") {
  CHECK_THROWS_AS(parse_workflow("[wormhole]\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[run]\ncolor = blue\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[platform]\nspeed = 9\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("stray line\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[states]\nq f64 0\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[states]\nq f99 1\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[states]\nq f64 2 init=1,2,3\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[run]\nrate\n"), ParseError);
}

TEST_CASE("graph grammar handles nesting and unbalanced input") {
  auto cfg = parse_workflow(
      "[graph]\n"
      "chain(\n"
      "  loop( zip( block(noop) block(counter c) ) until \"c >= 5\" )\n"
      "  block( close )\n"
      ")\n");
  REQUIRE(cfg.graph.has_value());
  CHECK(cfg.graph->kind == GraphSpec::Kind::chain);
  REQUIRE(cfg.graph->children.size() == 2);
  CHECK(cfg.graph->children[0].kind == GraphSpec::Kind::loop);
  CHECK(cfg.graph->children[0].predicate == "c >= 5");
  CHECK(cfg.graph->children[0].children[0].children.size() == 2);

  CHECK_THROWS_AS(parse_workflow("[graph]\nzip( block(noop)\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[graph]\nloop( block(noop) )\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[graph]\nloop( block(noop) until c )\n"), ParseError);
  CHECK_THROWS_AS(parse_workflow("[graph]\nblock(noop) block(noop)\n"), ParseError);
}

TEST_CASE("parse-print-parse is a fixpoint") {
  const char* text =
      "[states]\n"
      "q f64 6\n"
      "kp f64 6 init=80\n"
      "c i64 1\n"
      "\n"
      "[graph]\n"
      "chain( zip( block( noop ) loop( block( counter c ) until \"c >= 3\" ) ) block( noop ) )\n"
      "\n"
      "[run]\n"
      "backend = shm:demo\n"
      "rate = 50\n"
      "ticks = 20\n"
      "\n"
      "[platform]\n"
      "file = sim.plat\n"
      "joints = a,b,c,d,e,f\n";
  auto cfg = parse_workflow(text);
  auto printed = print_workflow(cfg);
  auto cfg2 = parse_workflow(printed);
  CHECK(print_workflow(cfg2) == printed);
  CHECK(graph_to_text(*cfg2.graph) == graph_to_text(*cfg.graph));
  CHECK(cfg2.backend_text == "shm:demo");
  CHECK(cfg2.platform_file == "sim.plat");
  CHECK(cfg2.workflow_joints.size() == 6);
}

TEST_CASE("predicate forms") {
  StateSpace s;
  s.register_zeros("flag", DType::f64, {1});
  auto truthy = parse_predicate("flag");
  CHECK_FALSE(truthy(s));
  s.write_f64("flag", {2.0});
  CHECK(truthy(s));

  auto ge = parse_predicate("flag >= 5");
  CHECK_FALSE(ge(s));
  s.write_f64("flag", {5.0});
  CHECK(ge(s));
  CHECK(parse_predicate("flag == 5")(s));
  CHECK(parse_predicate("flag != 4")(s));
  CHECK(parse_predicate("flag < 6")(s));
  CHECK_FALSE(parse_predicate("flag > 5")(s));

  CHECK_THROWS_AS(parse_predicate(""), SpecInvalid);
  CHECK_THROWS_AS(parse_predicate("flag ~= 5"), SpecInvalid);
  CHECK_THROWS_AS(parse_predicate("flag >= "), SpecInvalid);
  CHECK_THROWS_AS(parse_predicate("flag >= 5 extra"), SpecInvalid);
}

TEST_CASE("a parsed workflow builds and runs") {
  auto cfg = parse_workflow(
      "[states]\n"
      "c f64 1\n"
      "out f64 1\n"
      "\n"
      "[graph]\n"
      "loop( block( counter c ) until \"c >= 7\" )\n"
      "\n"
      "[run]\n"
      "rate = 2000\n"
      "ticks = 100\n");
  StateSpace s;
  apply_states(cfg, s);
  BlockContext ctx{s};
  auto g = build_graph(*cfg.graph, ctx);
  auto report = run(*g, s, cfg.rate_hz, cfg.max_ticks);
  CHECK(report.done);
  CHECK(report.ticks == 7);
  CHECK(s.read_f64("c")[0] == 7.0);
}

TEST_CASE("unknown block names fail at build time") {
  auto cfg = parse_workflow("[graph]\nblock( warp_drive )\n");
  StateSpace s;
  BlockContext ctx{s};
  CHECK_THROWS_AS(build_graph(*cfg.graph, ctx), SpecInvalid);
}

TEST_CASE("platform spec files parse with defaults and validation") {
  auto spec = parse_platform_spec(
      "[platform]\n"
      "name = rig\n"
      "kind = sim\n"
      "rate = 500\n"
      "mode = stepped\n"
      "substeps = 4\n"
      "inertia = 2\n"
      "damping = 0.5\n"
      "\n"
      "[joints]\n"
      "hip 80 2 30 -3.14 3.14\n"
      "knee 60 1 20 -1.5 1.5\n");
  CHECK(spec.name == "rig");
  CHECK(spec.kind == PlatformSpec::Kind::sim);
  CHECK_FALSE(spec.threaded);
  CHECK(spec.substeps == 4);
  CHECK(spec.inertia == 2.0);
  CHECK(spec.joint_names == std::vector<std::string>({"hip", "knee"}));
  CHECK(spec.kp == std::vector<double>({80, 60}));
  CHECK(spec.position_limits[1] == std::pair<double, double>({-1.5, 1.5}));

  CHECK_THROWS_AS(parse_platform_spec("[platform]\nkind = hologram\n"), ParseError);
  CHECK_THROWS_AS(parse_platform_spec("[platform]\nmode = sometimes\n"), ParseError);
  CHECK_THROWS_AS(parse_platform_spec("[joints]\nhip 80 2\n"), ParseError);
  CHECK_THROWS_AS(parse_platform_spec("[platform]\nname = rig\n"), ParseError);  // no joints
}

TEST_CASE("the bundled sample configs parse") {
  // samples/ sits next to the test binary's source tree root
  std::string root = UNICON_SAMPLES_DIR;
  auto cfg = parse_workflow(read_file(root + "/locomotion.cfg"));
  REQUIRE(cfg.graph.has_value());
  CHECK(cfg.platform_file == "sim.plat");
  CHECK(cfg.states.size() == 8);

  auto cfg2 = parse_workflow(read_file(root + "/locomotion_loopback.cfg"));
  CHECK(cfg2.platform_file == "loopback.plat");

  for (const char* p : {"/sim.plat", "/loopback.plat", "/sim_stepped.plat"}) {
    auto spec = parse_platform_spec(read_file(root + p));
    CHECK(spec.dof() == 6);
  }
}
