#pragma once

#include <thread>

#include "unicon/backends.hpp"
#include "unicon/bench.hpp"

namespace unicon {

// Desk-scale Recv/Send measurement against one backend. A producer thread
// refreshes "bench.rx" while reads are timed; "bench.tx" is the label writes
// are timed on. For the socket backend a publisher/subscriber pair is wired
// over loopback: reads are timed on the subscriber's cache, writes on the
// publisher with the subscriber connected (so the fan-out cost is in the
// measured path).
struct BackendBenchResult {
  std::vector<std::int64_t> recv;
  std::vector<std::int64_t> send;
};

inline BackendBenchResult run_backend_bench(const BackendKind& kind, std::size_t n_samples,
                                            std::size_t warmup = 1000,
                                            std::size_t payload_elems = 12) {
  const std::vector<std::uint32_t> shape{static_cast<std::uint32_t>(payload_elems)};
  BackendBenchResult out;

  auto run_pair = [&](StateSpace& writer, StateSpace& reader) {
    std::atomic<bool> stop{false};
    std::thread producer([&] {
      std::vector<float> v(payload_elems, 0.0f);
      while (!stop.load(std::memory_order_relaxed)) {
        v[0] += 1.0f;
        writer.write("bench.rx", v);
        std::this_thread::sleep_for(std::chrono::microseconds(50));
      }
    });
    // let the first frames land in the reader's cache
    for (int i = 0; i < 1000 && reader.seq("bench.rx") == 0; ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    out.recv = bench_recv(reader, "bench.rx", n_samples, warmup);
    stop.store(true);
    producer.join();
    out.send = bench_send(writer, "bench.tx", n_samples, warmup);
  };

  switch (kind.variant) {
    case BackendKind::Variant::in_process:
    case BackendKind::Variant::shared_memory: {
      auto space = make_space(kind);
      space->register_zeros("bench.rx", DType::f32, shape);
      space->register_zeros("bench.tx", DType::f32, shape);
      run_pair(*space, *space);
      space->close();
      break;
    }
    case BackendKind::Variant::socket: {
      StateSpace pub(std::make_unique<SocketBackend>(kind.host, kind.port,
                                                     BackendKind::SocketRole::publish));
      pub.register_zeros("bench.rx", DType::f32, shape);
      pub.register_zeros("bench.tx", DType::f32, shape);
      StateSpace sub(std::make_unique<SocketBackend>(kind.host, kind.port,
                                                     BackendKind::SocketRole::subscribe));
      sub.register_zeros("bench.rx", DType::f32, shape);
      sub.register_zeros("bench.tx", DType::f32, shape);
      static_cast<SocketBackend&>(sub.backend()).wait_for_labels(2);
      run_pair(pub, sub);
      pub.close();
      sub.close();
      break;
    }
  }
  return out;
}

}  // namespace unicon
