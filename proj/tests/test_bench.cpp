#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "unicon/bench.hpp"
#include "unicon/bench_harness.hpp"

using namespace unicon;

TEST_CASE("compute_stats recomputes mean, std and percentiles") {
  std::vector<std::int64_t> s{5, 1, 9, 3, 7};
  auto st = compute_stats(s);
  CHECK(st.n == 5);
  CHECK(st.mean_ns == Catch::Approx(5.0));
  // population std of {1,3,5,7,9}
  CHECK(st.std_ns == Catch::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK(st.p50_ns == 5);
  CHECK(st.p50_ns <= st.p99_ns);
  CHECK_THROWS_AS(compute_stats({}), TooFewSamples);
}

TEST_CASE("percentiles bracket the sample range") {
  std::mt19937_64 rng(3);
  std::vector<std::int64_t> s(1000);
  for (auto& v : s) v = std::uniform_int_distribution<std::int64_t>(0, 100000)(rng);
  auto st = compute_stats(s);
  auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  CHECK(st.p50_ns >= *lo);
  CHECK(st.p99_ns <= *hi);
  CHECK(st.p50_ns <= st.p99_ns);
}

TEST_CASE("bench_recv needs a live producer") {
  StateSpace s;
  s.register_zeros("x", DType::f32, {4});
  CHECK_THROWS_AS(bench_recv(s, "x", 100, 10), ProducerSilent);

  std::atomic<bool> stop{false};
  std::thread producer([&] {
    std::vector<float> v(4, 0.0f);
    while (!stop.load(std::memory_order_relaxed)) {
      v[0] += 1.0f;
      s.write("x", v);
      std::this_thread::sleep_for(std::chrono::microseconds(50));
    }
  });
  while (s.seq("x") < 2) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  std::vector<std::int64_t> samples;
  std::exception_ptr err;
  try {
    samples = bench_recv(s, "x", 500, 100);
  } catch (...) {
    err = std::current_exception();
  }
  stop.store(true);
  producer.join();
  if (err) std::rethrow_exception(err);
  REQUIRE(samples.size() == 500);
  for (auto v : samples) CHECK(v >= 0);
}

TEST_CASE("bench_send times writes and rejects empty requests") {
  StateSpace s;
  s.register_zeros("x", DType::f32, {4});
  auto samples = bench_send(s, "x", 200, 50);
  REQUIRE(samples.size() == 200);
  for (auto v : samples) CHECK(v >= 0);
  CHECK(s.seq("x") == 250);
  CHECK_THROWS_AS(bench_send(s, "x", 0), TooFewSamples);
  CHECK_THROWS_AS(bench_send(s, "ghost", 10), UnknownLabel);
}

TEST_CASE("infer_offset recovers a constructed offset exactly") {
  // remote clock runs 5 ms behind local; delays 100..500 us with one
  // zero-delay pair so the minimum hits the true offset
  const std::int64_t offset = 5'000'000;
  std::mt19937_64 rng(17);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (int i = 0; i < 1000; ++i) {
    std::int64_t remote = i * 1'000'000;
    std::int64_t delay = std::uniform_int_distribution<std::int64_t>(100'000, 500'000)(rng);
    pairs.emplace_back(remote + offset + delay, remote);
  }
  pairs.emplace_back(123 + offset, 123);
  CHECK(infer_offset(pairs) == offset);
}

TEST_CASE("infer_offset bias is bounded by the minimum delay") {
  const std::int64_t offset = -2'000'000;  // remote ahead of local
  std::mt19937_64 rng(29);
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (int i = 0; i < 10000; ++i) {
    std::int64_t remote = i * 100'000;
    std::int64_t delay = std::uniform_int_distribution<std::int64_t>(100'000, 500'000)(rng);
    pairs.emplace_back(remote + offset + delay, remote);
  }
  std::int64_t est = infer_offset(pairs);
  CHECK(est >= offset + 100'000);
  CHECK(est <= offset + 100'000 + 10'000);  // dense sampling pins the minimum
}

TEST_CASE("infer_offset refuses thin data") {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs(10, {0, 0});
  CHECK_THROWS_AS(infer_offset(pairs), TooFewSamples);
  CHECK(infer_offset(pairs, 5) == 0);
}

TEST_CASE("send latency shows no strong drift across the run") {
  StateSpace s;
  s.register_zeros("x", DType::f32, {12});
  auto samples = bench_send(s, "x", 4000, 500);
  // compare block medians of the first and last quarter; a leak or growing
  // container would push the tail up
  auto median = [](std::vector<std::int64_t> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  auto head = median({samples.begin(), samples.begin() + 1000});
  auto tail = median({samples.end() - 1000, samples.end()});
  CHECK(tail <= head * 10 + 2000);
}

TEST_CASE("end-to-end bench on a loopback platform") {
  StateSpace sp;
  for (const char* l : {"q", "dq", "q_des", "dq_des", "tau_ff", "kp", "kd"})
    sp.register_zeros(l, DType::f64, {2});
  PlatformSpec spec;
  spec.name = "rig";
  spec.kind = PlatformSpec::Kind::loopback;
  spec.joint_names = {"j0", "j1"};
  spec.kp = {1, 1};
  spec.kd = {1, 1};
  spec.torque_limit = {1, 1};
  spec.position_limits = {{-1, 1}, {-1, 1}};
  spec.threaded = true;
  Platform platform(spec, sp);

  auto res = bench_e2e(sp, platform, 150, 500.0, 5);
  platform.close();
  REQUIRE(res.samples.size() == 150);
  for (auto v : res.samples) CHECK(v >= 0);
  auto st = compute_stats(res.samples);
  // at a 500 Hz producer the state is at most ~2 ms stale, plus control jitter
  CHECK(st.p50_ns < 10'000'000);
  CHECK_THROWS_AS(bench_e2e(sp, platform, 50), OffsetUnavailable);
}

TEST_CASE("backend bench harness produces full sample sets in-process") {
  auto res = run_backend_bench(BackendKind::in_process(), 300, 100);
  REQUIRE(res.recv.size() == 300);
  REQUIRE(res.send.size() == 300);
  auto recv = compute_stats(res.recv);
  auto send = compute_stats(res.send);
  CHECK(recv.p50_ns > 0);
  CHECK(send.p50_ns > 0);
  // in-process seqlock operations sit well under 10 us
  CHECK(send.p50_ns < 10'000);
}

TEST_CASE("sample csv dump is one row per sample") {
  auto path = (std::filesystem::temp_directory_path() /
               ("unicon_bench_" + std::to_string(::getpid()) + ".csv"))
                  .string();
  std::vector<std::int64_t> samples{10, 20, 30};
  dump_samples_csv(path, BenchOp::recv, samples);
  dump_samples_csv(path, BenchOp::send, samples, true);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "op,tick,value_ns");
  std::getline(is, line);
  CHECK(line == "recv,0,10");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);
  std::remove(path.c_str());
}

TEST_CASE("latency report renders a row per operation") {
  LatencyReport r;
  r.table["inproc"][BenchOp::recv] = LatencyStats{1500.0, 200.0, 1400, 2100, 100};
  r.table["inproc"][BenchOp::send] = LatencyStats{900.0, 100.0, 850, 1200, 100};
  auto text = format_latency_report(r);
  CHECK(text.find("Recv") != std::string::npos);
  CHECK(text.find("Send") != std::string::npos);
  CHECK(text.find("End-to-end") != std::string::npos);
  CHECK(text.find("1.5 +- 0.2 us") != std::string::npos);
}
