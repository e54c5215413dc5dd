#pragma once

#include <chrono>
#include <sstream>
#include <thread>

#include "unicon/graph.hpp"

namespace unicon {

struct RunReport {
  std::uint64_t ticks = 0;
  double wall_s = 0.0;
  std::uint64_t overruns = 0;
  bool done = false;
};

struct RunOptions {
  StepTrace* trace = nullptr;
  bool enforce_access = false;
  bool validate_first = true;
  RunReport* partial = nullptr;  // filled before a block error propagates
};

// Fixed-rate, single-threaded executor. Deadlines are absolute
// (start + n * period) so jitter does not accumulate; an overrun tick is
// counted, not skipped, and subsequent deadlines compress.
inline RunReport run(GraphNode& root, StateSpace& space, double rate_hz, std::uint64_t max_ticks,
                     const RunOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  if (!(rate_hz > 0.0)) throw RateInvalid(rate_hz);
  if (opts.validate_first) {
    auto issues = validate(root, space);
    if (!issues.empty()) {
      std::ostringstream os;
      os << "graph validation failed:";
      for (const auto& i : issues) os << "\n  " << i.message;
      throw SpecInvalid(os.str());
    }
  }

  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / rate_hz));
  StepOptions step_opts{opts.trace, opts.enforce_access};

  RunReport report;
  const auto start = clock::now();
  auto finalize = [&] {
    report.wall_s = std::chrono::duration<double>(clock::now() - start).count();
    if (opts.partial) *opts.partial = report;
  };

  for (std::uint64_t tick = 0; tick < max_ticks; ++tick) {
    bool done;
    try {
      done = root.step(space, step_opts, tick);
    } catch (...) {
      finalize();
      throw;
    }
    ++report.ticks;
    const auto deadline = start + period * static_cast<std::int64_t>(tick + 1);
    if (clock::now() > deadline)
      ++report.overruns;
    else if (!done || tick + 1 < max_ticks)
      std::this_thread::sleep_until(deadline);
    if (done) {
      report.done = true;
      break;
    }
  }
  finalize();
  return report;
}

}  // namespace unicon
