#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>

#include "unicon/block.hpp"
#include "unicon/index_map.hpp"
#include "unicon/state_space.hpp"

namespace unicon {

struct PlatformSpec {
  enum class Kind { sim, loopback };

  std::string name = "platform";
  Kind kind = Kind::sim;
  std::vector<std::string> joint_names;
  std::vector<double> kp;
  std::vector<double> kd;
  std::vector<double> torque_limit;                      // N*m
  std::vector<std::pair<double, double>> position_limits;  // rad, (lo, hi)
  double state_rate_hz = 500.0;
  bool threaded = true;     // false = dynamics advance inside the recv block
  int substeps = 10;        // per recv call in stepped mode
  double inertia = 1.0;     // kg*m^2 per joint
  double damping = 0.1;     // N*m*s per joint
  int echo_delay = 0;       // loopback, in ticks of state_rate_hz

  std::size_t dof() const { return joint_names.size(); }

  void validate() const {
    std::size_t n = dof();
    if (n == 0) throw SpecInvalid("platform '" + name + "' has no joints");
    if (kp.size() != n || kd.size() != n || torque_limit.size() != n ||
        position_limits.size() != n)
      throw SpecInvalid("platform '" + name + "': per-joint list length != dof");
    for (std::size_t i = 0; i < n; ++i) {
      if (kp[i] < 0 || kd[i] < 0)
        throw SpecInvalid("platform '" + name + "': negative gain on " + joint_names[i]);
      if (!(torque_limit[i] > 0))
        throw SpecInvalid("platform '" + name + "': torque limit must be positive on " +
                          joint_names[i]);
      if (!(position_limits[i].first < position_limits[i].second))
        throw SpecInvalid("platform '" + name + "': empty position range on " + joint_names[i]);
    }
    if (!(state_rate_hz > 0)) throw SpecInvalid("platform '" + name + "': state rate must be > 0");
    if (substeps < 1) throw SpecInvalid("platform '" + name + "': substeps must be >= 1");
    if (echo_delay < 0) throw SpecInvalid("platform '" + name + "': negative echo delay");
  }
};

struct SimJointState {
  std::vector<double> q;
  std::vector<double> dq;
  std::vector<double> tau_applied;
  std::uint64_t sim_time_ns = 0;
};

// Independent-joint double integrator under PD control with feed-forward
// torque. Semi-implicit Euler; torque clamped to the limit, positions hard
// clamped to their range with velocity zeroed at the stop.
inline SimJointState sim_step(const SimJointState& state, const PlatformSpec& spec,
                              std::span<const double> q_des, std::span<const double> dq_des,
                              std::span<const double> tau_ff, std::span<const double> kp,
                              std::span<const double> kd, double dt) {
  const std::size_t n = spec.dof();
  if (!(dt > 0)) throw NonFiniteInput("sim_step: dt must be > 0");
  auto check = [&](std::span<const double> v, const char* what) {
    if (v.size() != n) throw LengthMismatch(what, n, v.size());
    for (double x : v)
      if (!std::isfinite(x)) throw NonFiniteInput(std::string("sim_step: non-finite ") + what);
  };
  check(q_des, "q_des");
  check(dq_des, "dq_des");
  check(tau_ff, "tau_ff");
  check(kp, "kp");
  check(kd, "kd");

  SimJointState out = state;
  out.tau_applied.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double tau = kp[i] * (q_des[i] - state.q[i]) + kd[i] * (dq_des[i] - state.dq[i]) + tau_ff[i];
    tau = std::clamp(tau, -spec.torque_limit[i], spec.torque_limit[i]);
    out.tau_applied[i] = tau;
    out.dq[i] = state.dq[i] + (tau - spec.damping * state.dq[i]) / spec.inertia * dt;
    out.q[i] = state.q[i] + out.dq[i] * dt;
    const auto [lo, hi] = spec.position_limits[i];
    if (out.q[i] <= lo) { out.q[i] = lo; out.dq[i] = std::max(out.dq[i], 0.0); }
    if (out.q[i] >= hi) { out.q[i] = hi; out.dq[i] = std::min(out.dq[i], 0.0); }
  }
  out.sim_time_ns = state.sim_time_ns + static_cast<std::uint64_t>(dt * 1e9);
  return out;
}

// Joint-name based alignment between a workflow's joint convention and a
// platform's native one.
struct Alignment {
  // to_workflow[i] = platform index of workflow joint i
  // (gather when producing workflow-ordered arrays from platform arrays)
  std::vector<std::size_t> to_workflow;
  // to_platform[j] = workflow index of platform joint j
  std::vector<std::size_t> to_platform;
  PlatformSpec aligned;  // platform params permuted into workflow order
};

inline Alignment align_params(const std::vector<std::string>& workflow_joints,
                              const PlatformSpec& platform) {
  std::vector<std::string> missing, extra;
  for (const auto& j : workflow_joints)
    if (std::find(platform.joint_names.begin(), platform.joint_names.end(), j) ==
        platform.joint_names.end())
      missing.push_back(j);
  for (const auto& j : platform.joint_names)
    if (std::find(workflow_joints.begin(), workflow_joints.end(), j) == workflow_joints.end())
      extra.push_back(j);
  if (!missing.empty() || !extra.empty()) throw JointMismatch(missing, extra);

  Alignment a;
  const std::size_t n = workflow_joints.size();
  a.to_workflow.resize(n);
  a.to_platform.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = std::find(platform.joint_names.begin(), platform.joint_names.end(),
                        workflow_joints[i]);
    std::size_t p = static_cast<std::size_t>(it - platform.joint_names.begin());
    a.to_workflow[i] = p;
    a.to_platform[p] = i;
  }
  a.aligned = platform;
  a.aligned.joint_names = workflow_joints;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p = a.to_workflow[i];
    a.aligned.kp[i] = platform.kp[p];
    a.aligned.kd[i] = platform.kd[p];
    a.aligned.torque_limit[i] = platform.torque_limit[p];
    a.aligned.position_limits[i] = platform.position_limits[p];
  }
  return a;
}

// A platform adapter bound to one state space. It registers staging labels in
// the platform's native joint order:
//   "<name>.q", "<name>.dq"                                   (sensory)
//   "<name>.q_des", ".dq_des", ".tau_ff", ".kp", ".kd"        (commands)
// The send block maps workflow commands into the command staging labels; the
// producer (a background thread, or the recv block itself in stepped mode)
// integrates the dynamics and publishes sensory staging; the recv block maps
// sensory staging back into the workflow's "q"/"dq". Each label keeps exactly
// one writer.
class Platform {
 public:
  Platform(PlatformSpec spec, StateSpace& space, std::vector<std::string> workflow_joints = {})
      : spec_(std::move(spec)), space_(space) {
    spec_.validate();
    const std::size_t n = spec_.dof();
    require_workflow_labels(n);
    if (workflow_joints.empty()) workflow_joints = spec_.joint_names;
    align_ = align_params(workflow_joints, spec_);

    state_.q.resize(n);
    state_.dq.assign(n, 0.0);
    state_.tau_applied.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      state_.q[i] = std::clamp(0.0, spec_.position_limits[i].first, spec_.position_limits[i].second);

    for (const char* suffix : {".q", ".dq", ".q_des", ".dq_des", ".tau_ff", ".kp", ".kd"})
      space_.register_zeros(spec_.name + suffix, DType::f64,
                            {static_cast<std::uint32_t>(n)});
    publish_sensory();

    if (spec_.threaded) producer_ = std::thread([this] { producer_loop(); });
  }

  ~Platform() { close(); }
  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  const PlatformSpec& spec() const { return spec_; }
  const Alignment& alignment() const { return align_; }
  std::string sensory_label() const { return spec_.name + ".q"; }

  SimJointState state() const {
    std::lock_guard lk(state_mutex_);
    return state_;
  }

  // recv: map staging sensory into workflow "q"/"dq" (stepped mode advances
  // the dynamics first). Never done on its own.
  ControlBlock recv_block() {
    ControlBlock b;
    b.name = spec_.name + ".recv";
    b.reads = {spec_.name + ".q", spec_.name + ".dq"};
    b.writes = {"q", "dq"};
    if (!spec_.threaded) {
      for (const char* s : {".q_des", ".dq_des", ".tau_ff", ".kp", ".kd"})
        b.reads.push_back(spec_.name + s);
      b.writes.push_back(spec_.name + ".q");
      b.writes.push_back(spec_.name + ".dq");
      b.stateful = true;  // owns the integrator cursor
    }
    b.step = [this](Accessor& acc) {
      if (!spec_.threaded) {
        advance(spec_.substeps, &acc);
      }
      auto qs = acc.read(spec_.name + ".q");
      auto dqs = acc.read(spec_.name + ".dq");
      acc.write_f64("q", gather_values(qs, align_.to_workflow));
      acc.write_f64("dq", gather_values(dqs, align_.to_workflow));
      return false;
    };
    return b;
  }

  // send: map workflow commands into the platform's command staging labels.
  ControlBlock send_block() {
    ControlBlock b;
    b.name = spec_.name + ".send";
    b.reads = {"q_des", "dq_des", "tau_ff", "kp", "kd"};
    for (const char* s : {".q_des", ".dq_des", ".tau_ff", ".kp", ".kd"})
      b.writes.push_back(spec_.name + s);
    b.step = [this](Accessor& acc) {
      for (const char* s : {"q_des", "dq_des", "tau_ff", "kp", "kd"}) {
        auto snap = acc.read(s);
        acc.write_f64(spec_.name + "." + s, gather_values(snap, align_.to_platform));
      }
      return false;
    };
    return b;
  }

  ControlBlock close_block() {
    ControlBlock b;
    b.name = spec_.name + ".close";
    b.stateful = true;
    b.step = [this](Accessor&) {
      close();
      return true;
    };
    return b;
  }

  void close() {
    bool was = stopping_.exchange(true);
    if (!was && producer_.joinable()) producer_.join();
  }

 private:
  void require_workflow_labels(std::size_t n) {
    for (const char* l : {"q", "dq", "q_des", "dq_des", "tau_ff", "kp", "kd"}) {
      if (!space_.has(l))
        throw SpecInvalid("platform '" + spec_.name + "' requires workflow label '" +
                          std::string(l) + "'");
      if (space_.meta(l).elem_count != n)
        throw SpecInvalid("workflow label '" + std::string(l) + "' has " +
                          std::to_string(space_.meta(l).elem_count) + " elements, platform dof is " +
                          std::to_string(n));
    }
  }

  struct Command {
    std::vector<double> q_des, dq_des, tau_ff, kp, kd;
  };

  Command read_command(Accessor* acc) {
    auto get = [&](const std::string& l) {
      return acc ? acc->read_f64(l) : space_.read_f64(l);
    };
    Command c;
    c.q_des = get(spec_.name + ".q_des");
    c.dq_des = get(spec_.name + ".dq_des");
    c.tau_ff = get(spec_.name + ".tau_ff");
    c.kp = get(spec_.name + ".kp");
    c.kd = get(spec_.name + ".kd");
    return c;
  }

  void advance(int steps, Accessor* acc) {
    const double dt = 1.0 / spec_.state_rate_hz;
    Command c = read_command(acc);
    {
      std::lock_guard lk(state_mutex_);
      for (int k = 0; k < steps; ++k) {
        if (spec_.kind == Kind::sim) {
          state_ = sim_step(state_, spec_, c.q_des, c.dq_des, c.tau_ff, c.kp, c.kd, dt);
        } else {
          echo_.push_back({c.q_des, c.dq_des});
          while (echo_.size() > static_cast<std::size_t>(spec_.echo_delay) + 1) echo_.pop_front();
          if (echo_.size() == static_cast<std::size_t>(spec_.echo_delay) + 1) {
            state_.q = echo_.front().first;
            state_.dq = echo_.front().second;
          }
          state_.sim_time_ns += static_cast<std::uint64_t>(dt * 1e9);
        }
      }
    }
    publish_sensory(acc);
  }

  void publish_sensory(Accessor* acc = nullptr) {
    std::vector<double> q, dq;
    {
      std::lock_guard lk(state_mutex_);
      q = state_.q;
      dq = state_.dq;
    }
    if (acc) {
      acc->write_f64(spec_.name + ".q", q);
      acc->write_f64(spec_.name + ".dq", dq);
    } else {
      space_.write_f64(spec_.name + ".q", q);
      space_.write_f64(spec_.name + ".dq", dq);
    }
  }

  void producer_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / spec_.state_rate_hz));
    auto next = clock::now();
    while (!stopping_.load(std::memory_order_relaxed)) {
      advance(1, nullptr);
      next += period;
      std::this_thread::sleep_until(next);
    }
  }

  using Kind = PlatformSpec::Kind;

  PlatformSpec spec_;
  StateSpace& space_;
  Alignment align_;

  mutable std::mutex state_mutex_;
  SimJointState state_;
  std::deque<std::pair<std::vector<double>, std::vector<double>>> echo_;

  std::atomic<bool> stopping_{false};
  std::thread producer_;
};

struct PlatformBlocks {
  ControlBlock recv;
  ControlBlock send;
  ControlBlock close;
  std::shared_ptr<Platform> platform;
};

inline PlatformBlocks make_platform(const PlatformSpec& spec, StateSpace& space,
                                    std::vector<std::string> workflow_joints = {}) {
  auto p = std::make_shared<Platform>(spec, space, std::move(workflow_joints));
  PlatformBlocks out{p->recv_block(), p->send_block(), p->close_block(), p};
  // keep the platform alive as long as any of its blocks
  auto pin = [p](ControlBlock& b) {
    auto inner = std::move(b.step);
    b.step = [p, inner = std::move(inner)](Accessor& a) { return inner(a); };
  };
  pin(out.recv);
  pin(out.send);
  pin(out.close);
  return out;
}

}  // namespace unicon
