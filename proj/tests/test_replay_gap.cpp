#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "unicon/gap.hpp"
#include "unicon/graph.hpp"
#include "unicon/registry.hpp"
#include "unicon/replay.hpp"

using namespace unicon;

namespace {

std::string temp_path(const char* tag) {
  static int n = 0;
  return (std::filesystem::temp_directory_path() /
          (std::string("unicon_") + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(n++) + ".traj"))
      .string();
}

// Build an in-memory trajectory holding one f64 label from row-major values.
Trajectory make_traj(const std::string& label, std::uint32_t dim,
                     const std::vector<std::vector<double>>& rows) {
  Trajectory t;
  t.labels.push_back({label, DType::f64, {dim}});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Frame f;
    f.tick = i;
    f.timestamp_ns = i * 1000;
    f.payload.resize(dim * sizeof(double));
    std::memcpy(f.payload.data(), rows[i].data(), f.payload.size());
    t.frames.push_back(std::move(f));
  }
  return t;
}

Trajectory make_scalar_traj(const std::string& label, const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return make_traj(label, 1, rows);
}

// Reference implementation of the shift-tolerant loss: explicit loops over
// both shift directions, frames and elements.
double oracle_unfolded(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b, std::size_t max_shift,
                       bool squared) {
  auto term = [&](const std::vector<std::vector<double>>& x,
                  const std::vector<std::vector<double>>& y, std::size_t j) {
    std::size_t overlap = std::min(x.size() - j, y.size());
    double sum = 0;
    for (std::size_t i = 0; i < overlap; ++i) {
      double s2 = 0;
      for (std::size_t e = 0; e < x[i + j].size(); ++e) {
        double d = x[i + j][e] - y[i][e];
        s2 += d * d;
      }
      sum += squared ? s2 : std::sqrt(s2);
    }
    return sum / static_cast<double>(overlap);
  };
  double best_f = term(a, b, 0), best_b = term(b, a, 0);
  for (std::size_t j = 1; j <= max_shift; ++j) {
    best_f = std::min(best_f, term(a, b, j));
    best_b = std::min(best_b, term(b, a, j));
  }
  return best_f + best_b;
}

}  // namespace

TEST_CASE("recorder streams frames and the loader returns them") {
  std::string path = temp_path("rec");
  StateSpace s;
  s.register_zeros("c", DType::f64, {1});
  {
    auto [block, rec] = make_recorder(s, {"c"}, path);
    BlockContext ctx{s};
    auto counter = BlockRegistry::global().make("counter", {"c", "10"}, ctx);
    std::vector<GraphNode::Ptr> cs;
    cs.push_back(GraphNode::leaf(std::move(counter)));
    cs.push_back(GraphNode::leaf(std::move(block)));
    auto g = GraphNode::zip(std::move(cs));
    StepOptions o;
    std::uint64_t t = 0;
    while (!g->step(s, o, t)) ++t;
    rec->finalize();
    CHECK(rec->frames_written() == 10);
  }
  auto traj = Trajectory::load(path);
  REQUIRE(traj.labels.size() == 1);
  CHECK(traj.labels[0].label == "c");
  CHECK(traj.labels[0].dtype == DType::f64);
  REQUIRE(traj.frames.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(traj.frames[i].tick == i);
    CHECK(traj.values_f64(i, 0)[0] == static_cast<double>(i + 1));
    if (i) CHECK(traj.frames[i].timestamp_ns >= traj.frames[i - 1].timestamp_ns);
  }
  std::remove(path.c_str());
}

TEST_CASE("recorder refuses an empty label set and unknown labels") {
  StateSpace s;
  s.register_zeros("c", DType::f64, {1});
  CHECK_THROWS_AS(Recorder(s, {}, temp_path("bad")), SpecInvalid);
  CHECK_THROWS_AS(Recorder(s, {"ghost"}, temp_path("bad")), UnknownLabel);
}

TEST_CASE("save/load round trip is bit-identical") {
  std::mt19937_64 rng(42);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 17; ++i) {
    std::vector<double> r(5);
    for (auto& x : r) x = std::uniform_real_distribution<double>(-10, 10)(rng);
    rows.push_back(std::move(r));
  }
  auto t = make_traj("x", 5, rows);
  std::string p1 = temp_path("rt1"), p2 = temp_path("rt2");
  t.save(p1);
  auto loaded = Trajectory::load(p1);
  loaded.save(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  REQUIRE(loaded.frames.size() == t.frames.size());
  for (std::size_t i = 0; i < t.frames.size(); ++i)
    CHECK(loaded.frames[i].payload == t.frames[i].payload);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("replayer writes frame k on tick k and finishes after the last") {
  std::string path = temp_path("rep");
  make_scalar_traj("x", {10, 20, 30}).save(path);
  StateSpace s;
  s.register_zeros("x", DType::f64, {1});
  auto [block, rep] = make_replayer(path, s);
  auto g = GraphNode::leaf(std::move(block));
  StepOptions o;
  CHECK_FALSE(g->step(s, o, 0));
  CHECK(s.read_f64("x")[0] == 10);
  CHECK_FALSE(g->step(s, o, 1));
  CHECK(s.read_f64("x")[0] == 20);
  CHECK(g->step(s, o, 2));
  CHECK(s.read_f64("x")[0] == 30);
  CHECK(g->step(s, o, 3));  // stays done, no further writes
  CHECK(s.seq("x") == 3);
  std::remove(path.c_str());
}

TEST_CASE("replaying an empty recording is done immediately") {
  std::string path = temp_path("empty");
  make_scalar_traj("x", {}).save(path);
  StateSpace s;
  s.register_zeros("x", DType::f64, {1});
  auto [block, rep] = make_replayer(path, s);
  auto g = GraphNode::leaf(std::move(block));
  StepOptions o;
  CHECK(g->step(s, o, 0));
  CHECK(s.seq("x") == 0);
  std::remove(path.c_str());
}

TEST_CASE("replayer validates the target schema") {
  std::string path = temp_path("schema");
  make_scalar_traj("x", {1, 2}).save(path);

  StateSpace wrong_dtype;
  wrong_dtype.register_zeros("x", DType::f32, {1});
  CHECK_THROWS_AS(make_replayer(path, wrong_dtype), SchemaMismatch);

  StateSpace wrong_shape;
  wrong_shape.register_zeros("x", DType::f64, {2});
  CHECK_THROWS_AS(make_replayer(path, wrong_shape), SchemaMismatch);

  StateSpace missing;
  CHECK_THROWS_AS(make_replayer(path, missing), UnknownLabel);
  std::remove(path.c_str());
}

TEST_CASE("loader recovers a footer-less file and drops a torn frame") {
  std::string path = temp_path("torn");
  make_scalar_traj("x", {1, 2, 3, 4}).save(path);
  // strip the footer (5 + 8 bytes) and half of the last frame (24-byte frames)
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 13 - 12);
  auto t = Trajectory::load(path);
  REQUIRE(t.frames.size() == 3);
  CHECK(t.values_f64(2, 0)[0] == 3.0);
  std::remove(path.c_str());
}

TEST_CASE("loader rejects garbage and inconsistent footers") {
  std::string path = temp_path("garbage");
  {
    std::ofstream os(path, std::ios::binary);
    os << "definitely not a recording";
  }
  CHECK_THROWS_AS(Trajectory::load(path), FileCorrupt);
  CHECK_THROWS_AS(Trajectory::load(path + ".does_not_exist"), IoFailure);
  std::remove(path.c_str());
}

TEST_CASE("stepwise mse: zero on identical, c^2 on constant offset") {
  auto a = make_scalar_traj("x", {1, 2, 3, 4, 5});
  CHECK(stepwise_mse(a, a, "x").aggregate == 0.0);
  auto b = make_scalar_traj("x", {1.5, 2.5, 3.5, 4.5, 5.5});
  CHECK(stepwise_mse(a, b, "x").aggregate == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("stepwise mse matches an explicit loop on random data") {
  std::mt19937_64 rng(7);
  std::vector<std::vector<double>> ra, rb;
  for (int i = 0; i < 7; ++i) {
    std::vector<double> x(3), y(3);
    for (auto& v : x) v = std::normal_distribution<double>()(rng);
    for (auto& v : y) v = std::normal_distribution<double>()(rng);
    ra.push_back(x);
    rb.push_back(y);
  }
  auto m = stepwise_mse(make_traj("x", 3, ra), make_traj("x", 3, rb), "x");
  for (std::size_t e = 0; e < 3; ++e) {
    double sum = 0;
    for (std::size_t i = 0; i < 7; ++i) {
      double d = ra[i][e] - rb[i][e];
      sum += d * d;
    }
    CHECK(m.per_element[e] == Catch::Approx(sum / 7).epsilon(1e-14));
  }
  double agg = (m.per_element[0] + m.per_element[1] + m.per_element[2]) / 3;
  CHECK(m.aggregate == Catch::Approx(agg).epsilon(1e-14));
}

TEST_CASE("stepwise mse requires equal frame counts and matching schema") {
  auto a = make_scalar_traj("x", {1, 2, 3});
  auto b = make_scalar_traj("x", {1, 2});
  CHECK_THROWS_AS(stepwise_mse(a, b, "x"), LengthMismatch);
  CHECK_THROWS_AS(stepwise_mse(a, a, "y"), UnknownLabel);
}

TEST_CASE("unfolded loss on the worked scalar example") {
  auto t = make_scalar_traj("x", {0, 1, 2, 3});
  auto th = make_scalar_traj("x", {1, 2, 3, 4});
  auto r = unfolded_loss(t, th, "x", 1);
  // forward shift 1 aligns perfectly; backward stays at 0 with unit error
  CHECK(r.j_forward == 1);
  CHECK(r.j_backward == 0);
  CHECK(r.loss == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unfolded loss is zero for identical trajectories") {
  auto t = make_scalar_traj("x", {3, 1, 4, 1, 5, 9, 2, 6});
  auto r = unfolded_loss(t, t, "x", 2);
  CHECK(r.loss == 0.0);
  CHECK(r.j_forward == 0);
  CHECK(r.j_backward == 0);
}

TEST_CASE("unfolded loss recovers a known delay") {
  std::vector<double> base;
  for (int i = 0; i < 40; ++i) base.push_back(std::sin(0.3 * i));
  std::vector<double> delayed(base.begin() + 2, base.end());
  auto t = make_scalar_traj("x", base);
  auto th = make_scalar_traj("x", delayed);
  auto r = unfolded_loss(t, th, "x", 5);
  CHECK(r.j_forward == 2);
  // the forward term vanishes exactly at the true delay; the backward term
  // keeps a residual, so widening the window from zero still improves the sum
  CHECK(r.term_forward == 0.0);
  CHECK(r.loss == r.term_forward + r.term_backward);
  CHECK(r.loss < unfolded_loss(t, th, "x", 0).loss);
}

TEST_CASE("unfolded loss is symmetric and non-increasing in the window") {
  std::mt19937_64 rng(99);
  std::vector<double> a(20), b(20);
  for (auto& v : a) v = std::normal_distribution<double>()(rng);
  for (auto& v : b) v = std::normal_distribution<double>()(rng);
  auto ta = make_scalar_traj("x", a);
  auto tb = make_scalar_traj("x", b);
  CHECK(unfolded_loss(ta, tb, "x", 4).loss ==
        Catch::Approx(unfolded_loss(tb, ta, "x", 4).loss).epsilon(1e-15));
  double prev = unfolded_loss(ta, tb, "x", 0).loss;
  for (std::size_t j = 1; j <= 4; ++j) {
    double cur = unfolded_loss(ta, tb, "x", j).loss;
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
}

TEST_CASE("unfolded loss matches the explicit-loop oracle on random instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t na = std::uniform_int_distribution<std::size_t>(2, 16)(rng);
    std::size_t nb = std::uniform_int_distribution<std::size_t>(2, 16)(rng);
    std::uint32_t dim = std::uniform_int_distribution<std::uint32_t>(1, 4)(rng);
    std::size_t J = std::uniform_int_distribution<std::size_t>(0, std::min(na, nb) - 1)(rng);
    bool squared = trial % 2 == 0;
    std::vector<std::vector<double>> ra, rb;
    for (std::size_t i = 0; i < na; ++i) {
      std::vector<double> r(dim);
      for (auto& v : r) v = std::normal_distribution<double>()(rng);
      ra.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < nb; ++i) {
      std::vector<double> r(dim);
      for (auto& v : r) v = std::normal_distribution<double>()(rng);
      rb.push_back(std::move(r));
    }
    auto got = unfolded_loss(make_traj("x", dim, ra), make_traj("x", dim, rb), "x", J, squared);
    double want = oracle_unfolded(ra, rb, J, squared);
    REQUIRE(got.loss == Catch::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("unfolded loss rejects an oversized window") {
  auto t = make_scalar_traj("x", {1, 2, 3});
  CHECK_THROWS_AS(unfolded_loss(t, t, "x", 3), WindowTooLarge);
  CHECK(default_max_shift(8) == 2);
  CHECK(default_max_shift(1000) == 50);
}

TEST_CASE("analyze reports zero gap against itself") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) {
    std::vector<double> r(3);
    for (auto& v : r) v = std::normal_distribution<double>()(rng);
    rows.push_back(std::move(r));
  }
  auto t = make_traj("q", 3, rows);
  auto rep = analyze(t, t, 2);
  CHECK(rep.n_frames_compared == 12);
  CHECK(rep.per_label.at("q").stepwise.aggregate == 0.0);
  CHECK(rep.per_label.at("q").unfolded.loss == 0.0);
  for (const auto& row : rep.per_label.at("q").abs_error)
    for (double e : row) CHECK(e == 0.0);
}

TEST_CASE("analyze localizes a perturbed element") {
  std::vector<std::vector<double>> rows(10, std::vector<double>{1.0, 2.0, 3.0});
  auto t = make_traj("q", 3, rows);
  auto rows2 = rows;
  for (auto& r : rows2) r[1] += 0.5;  // only element 1 off
  auto th = make_traj("q", 3, rows2);
  auto rep = analyze(t, th, 2);
  const auto& mse = rep.per_label.at("q").stepwise.per_element;
  CHECK(mse[0] == 0.0);
  CHECK(mse[1] == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(mse[2] == 0.0);
  CHECK(rep.per_label.at("q").abs_error[4][1] == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("analyze requires common labels") {
  auto a = make_scalar_traj("x", {1});
  auto b = make_scalar_traj("y", {1});
  CHECK_THROWS_AS(analyze(a, b, 0), NoCommonLabels);
}

TEST_CASE("gap csv files carry one row per compared frame") {
  auto t = make_scalar_traj("x", {0, 1, 2});
  auto th = make_scalar_traj("x", {0, 1, 4});
  auto rep = analyze(t, th, 0);
  auto dir = std::filesystem::temp_directory_path() /
             ("unicon_csv_" + std::to_string(::getpid()));
  write_gap_csv(rep, dir.string());
  std::ifstream is(dir / "x.e0.csv");
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "tick,abs_error");
  std::getline(is, line);
  CHECK(line == "0,0");
  std::getline(is, line);
  std::getline(is, line);
  CHECK(line == "2,2");
  std::filesystem::remove_all(dir);
}
