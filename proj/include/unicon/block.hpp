#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "unicon/state_space.hpp"

namespace unicon {

class Accessor;

// A steppable unit of logic over the shared state space. `step` reads only
// labels in `reads`, writes only labels in `writes`, and returns a done flag.
// Blocks not marked `stateful` must be pure in the state space: identical
// read values produce identical writes and done flag.
struct ControlBlock {
  std::string name;
  std::vector<std::string> reads;
  std::vector<std::string> writes;
  bool stateful = false;
  std::function<bool(Accessor&)> step;
  std::function<void()> reset;  // restart internal state, optional

  bool declares_read(const std::string& label) const {
    return std::find(reads.begin(), reads.end(), label) != reads.end();
  }
  bool declares_write(const std::string& label) const {
    return std::find(writes.begin(), writes.end(), label) != writes.end();
  }
};

// The view a block steps through. With enforcement on (test mode) any access
// outside the block's declared label sets throws UndeclaredAccess.
class Accessor {
 public:
  Accessor(StateSpace& space, const ControlBlock& block, bool enforce)
      : space_(space), block_(block), enforce_(enforce) {}

  StateSpace& space() { return space_; }
  std::uint64_t now_ns() const { return space_.now_ns(); }

  Snapshot read(const std::string& label) {
    check_read(label);
    return space_.read(label);
  }

  std::vector<double> read_f64(const std::string& label) {
    check_read(label);
    return space_.read_f64(label);
  }

  template <typename T>
  std::vector<T> read_values(const std::string& label) {
    check_read(label);
    return space_.read_values<T>(label);
  }

  std::uint64_t write_bytes(const std::string& label, std::span<const std::byte> bytes) {
    check_write(label);
    return space_.write_bytes(label, bytes);
  }

  template <typename T>
  std::uint64_t write(const std::string& label, std::span<const T> values) {
    check_write(label);
    return space_.write(label, values);
  }

  template <typename T>
  std::uint64_t write(const std::string& label, const std::vector<T>& values) {
    return write(label, std::span<const T>(values));
  }

  std::uint64_t write_f64(const std::string& label, std::span<const double> values) {
    check_write(label);
    return space_.write_f64(label, values);
  }

  std::uint64_t write_f64(const std::string& label, const std::vector<double>& values) {
    return write_f64(label, std::span<const double>(values));
  }

 private:
  void check_read(const std::string& label) {
    if (enforce_ && !block_.declares_read(label))
      throw UndeclaredAccess(block_.name, label, false);
  }
  void check_write(const std::string& label) {
    if (enforce_ && !block_.declares_write(label))
      throw UndeclaredAccess(block_.name, label, true);
  }

  StateSpace& space_;
  const ControlBlock& block_;
  bool enforce_;
};

// Parameter-less boolean over the state space (loop termination tests).
struct Predicate {
  std::string text;  // source form when parsed from a config, else descriptive
  std::function<bool(StateSpace&)> fn;

  bool operator()(StateSpace& s) const { return fn(s); }
};

}  // namespace unicon
