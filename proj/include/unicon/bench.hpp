#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "unicon/platform.hpp"
#include "unicon/state_space.hpp"

namespace unicon {

enum class BenchOp { recv, send, end_to_end };

inline const char* bench_op_name(BenchOp op) {
  switch (op) {
    case BenchOp::recv: return "recv";
    case BenchOp::send: return "send";
    case BenchOp::end_to_end: return "e2e";
  }
  return "?";
}

struct LatencyStats {
  double mean_ns = 0.0;
  double std_ns = 0.0;
  std::int64_t p50_ns = 0;
  std::int64_t p99_ns = 0;
  std::size_t n = 0;
};

inline LatencyStats compute_stats(std::span<const std::int64_t> samples) {
  if (samples.empty()) throw TooFewSamples(0, 1);
  LatencyStats s;
  s.n = samples.size();
  double sum = 0.0;
  for (auto v : samples) sum += static_cast<double>(v);
  s.mean_ns = sum / static_cast<double>(s.n);
  double var = 0.0;
  for (auto v : samples) {
    double d = static_cast<double>(v) - s.mean_ns;
    var += d * d;
  }
  s.std_ns = std::sqrt(var / static_cast<double>(s.n));
  std::vector<std::int64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double p) {
    std::size_t idx = static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
  };
  s.p50_ns = pct(0.50);
  s.p99_ns = pct(0.99);
  return s;
}

inline std::int64_t steady_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Wall time of one read call per sample. A producer must be advancing the
// label's seq while the bench runs.
inline std::vector<std::int64_t> bench_recv(StateSpace& space, const std::string& label,
                                            std::size_t n_samples, std::size_t warmup = 1000) {
  if (n_samples == 0) throw TooFewSamples(0, 1);
  const std::uint64_t seq_start = space.seq(label);
  std::vector<std::int64_t> samples;
  samples.reserve(n_samples);
  for (std::size_t i = 0; i < warmup + n_samples; ++i) {
    std::int64_t t0 = steady_now_ns();
    Snapshot s = space.read(label);
    std::int64_t t1 = steady_now_ns();
    (void)s;
    if (i >= warmup) samples.push_back(t1 - t0);
  }
  if (space.seq(label) == seq_start) {
    // a short bench can outpace a live producer; give it a moment to tick
    // before declaring it dead
    bool moved = false;
    for (int i = 0; i < 100 && !moved; ++i) {
      std::this_thread::sleep_for(std::chrono::microseconds(100));
      moved = space.seq(label) != seq_start;
    }
    if (!moved) throw ProducerSilent(label);
  }
  return samples;
}

// Wall time of one write call per sample.
inline std::vector<std::int64_t> bench_send(StateSpace& space, const std::string& label,
                                            std::size_t n_samples, std::size_t warmup = 1000) {
  if (n_samples == 0) throw TooFewSamples(0, 1);
  const ArrayMeta& m = space.meta(label);
  std::vector<std::byte> payload(m.nbytes, std::byte{0});
  std::vector<std::int64_t> samples;
  samples.reserve(n_samples);
  for (std::size_t i = 0; i < warmup + n_samples; ++i) {
    payload[0] = static_cast<std::byte>(i & 0xff);
    std::int64_t t0 = steady_now_ns();
    space.write_bytes(label, payload);
    std::int64_t t1 = steady_now_ns();
    if (i >= warmup) samples.push_back(t1 - t0);
  }
  return samples;
}

// Lower-bound (minimum-delta) clock offset estimator: with pairs of
// (local receive time, remote stamp), the pair with the smallest one-way
// delay approximates the true offset. Documented bias: the minimal delay.
inline std::int64_t infer_offset(std::span<const std::pair<std::int64_t, std::int64_t>> pairs,
                                 std::size_t min_pairs = 100) {
  if (pairs.size() < min_pairs) throw TooFewSamples(pairs.size(), min_pairs);
  std::int64_t best = pairs[0].first - pairs[0].second;
  for (const auto& [local, remote] : pairs) best = std::min(best, local - remote);
  return best;
}

struct E2eResult {
  std::vector<std::int64_t> samples;  // corrected: t_send - (t_state + offset)
  std::int64_t inferred_offset_ns = 0;
};

// End-to-end: identity joint position control (q_des = q) at control_rate_hz
// against a producing platform; per cycle the sample is the interval between
// issuing the command and the stamp of the state it depended on, corrected by
// the min-delta offset over the same run (so corrected samples are >= 0 by
// construction).
inline E2eResult bench_e2e(StateSpace& space, Platform& platform, std::size_t n_samples,
                           double control_rate_hz = 50.0, std::size_t warmup = 20) {
  if (n_samples < 100) throw OffsetUnavailable("need >= 100 cycles to infer the clock offset");
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / control_rate_hz));
  const std::string sensory = platform.sensory_label();
  ControlBlock recv = platform.recv_block();
  ControlBlock send = platform.send_block();
  Accessor recv_acc(space, recv, false), send_acc(space, send, false);

  struct Cycle {
    std::int64_t t_read, t_state, t_send;
  };
  std::vector<Cycle> cycles;
  cycles.reserve(n_samples);

  auto next = clock::now();
  for (std::size_t i = 0; i < warmup + n_samples; ++i) {
    std::int64_t t_read = steady_now_ns();
    Snapshot state = space.read(sensory);
    recv.step(recv_acc);
    auto q = space.read_f64("q");
    space.write_f64("q_des", q);
    send.step(send_acc);
    std::int64_t t_send = steady_now_ns();
    if (i >= warmup)
      cycles.push_back({t_read, static_cast<std::int64_t>(state.timestamp_ns), t_send});
    next += period;
    std::this_thread::sleep_until(next);
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  pairs.reserve(cycles.size());
  for (const auto& c : cycles) pairs.emplace_back(c.t_read, c.t_state);
  E2eResult out;
  out.inferred_offset_ns = infer_offset(pairs);
  out.samples.reserve(cycles.size());
  for (const auto& c : cycles)
    out.samples.push_back(c.t_send - (c.t_state + out.inferred_offset_ns));
  return out;
}

// Raw dump: "op,tick,value_ns" per sample.
inline void dump_samples_csv(const std::string& path, BenchOp op,
                             std::span<const std::int64_t> samples, bool append = false) {
  std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
  if (!os) throw IoFailure("cannot write '" + path + "'");
  if (!append) os << "op,tick,value_ns\n";
  for (std::size_t i = 0; i < samples.size(); ++i)
    os << bench_op_name(op) << ',' << i << ',' << samples[i] << '\n';
}

struct LatencyReport {
  // backend name -> op -> stats
  std::map<std::string, std::map<BenchOp, LatencyStats>> table;
  std::string config;
  std::int64_t inferred_offset_ns = 0;
};

inline std::string format_latency_report(const LatencyReport& r) {
  std::ostringstream os;
  if (!r.config.empty()) os << "# " << r.config << "\n";
  os << std::left << std::setw(12) << "Operation";
  for (const auto& [backend, ops] : r.table) os << std::setw(26) << backend;
  os << "\n";
  auto row = [&](const char* title, BenchOp op) {
    os << std::left << std::setw(12) << title;
    for (const auto& [backend, ops] : r.table) {
      auto it = ops.find(op);
      if (it == ops.end()) {
        os << std::setw(26) << "-";
        continue;
      }
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << it->second.mean_ns / 1000.0 << " +- "
           << it->second.std_ns / 1000.0 << " us (p50 " << it->second.p50_ns / 1000.0 << ")";
      os << std::setw(26) << cell.str();
    }
    os << "\n";
  };
  row("Recv", BenchOp::recv);
  row("Send", BenchOp::send);
  row("End-to-end", BenchOp::end_to_end);
  if (r.inferred_offset_ns != 0)
    os << "inferred clock offset: " << r.inferred_offset_ns << " ns\n";
  return os.str();
}

}  // namespace unicon
