#pragma once

#include <fstream>
#include <memory>

#include "unicon/block.hpp"
#include "unicon/trajectory.hpp"

namespace unicon {

// Streams one frame per tick to disk. The file stays a valid prefix at all
// times; finalize() appends the footer. Runs until the graph ends (never done
// on its own).
class Recorder {
 public:
  Recorder(StateSpace& space, std::vector<std::string> labels, std::string path)
      : path_(std::move(path)) {
    if (labels.empty()) throw SpecInvalid("recorder needs at least one label");
    for (const auto& l : labels) {
      const ArrayMeta& m = space.meta(l);  // throws UnknownLabel
      schema_.push_back({m.label, m.dtype, m.shape});
    }
    os_.open(path_, std::ios::binary | std::ios::trunc);
    if (!os_) throw IoFailure("cannot open '" + path_ + "' for writing");
    detail::write_traj_header(os_, schema_);
    os_.flush();
  }

  ~Recorder() { finalize(); }

  const std::vector<LabelSchema>& schema() const { return schema_; }
  std::uint64_t frames_written() const { return frames_; }

  void append(Accessor& acc) {
    if (finalized_) return;
    Frame f;
    f.tick = frames_;
    f.timestamp_ns = acc.now_ns();
    for (const auto& l : schema_) {
      Snapshot s = acc.read(l.label);
      f.payload.insert(f.payload.end(), s.bytes.begin(), s.bytes.end());
    }
    detail::write_frame(os_, f);
    ++frames_;
  }

  void finalize() {
    if (finalized_ || !os_.is_open()) return;
    detail::write_footer(os_, frames_);
    os_.flush();
    os_.close();
    if (!os_ && frames_ > 0) throw IoFailure("finalizing '" + path_ + "' failed");
    finalized_ = true;
  }

  ControlBlock block() {
    ControlBlock b;
    b.name = "record";
    for (const auto& l : schema_) b.reads.push_back(l.label);
    b.stateful = true;
    b.step = [this](Accessor& acc) {
      append(acc);
      return false;
    };
    return b;
  }

 private:
  std::string path_;
  std::vector<LabelSchema> schema_;
  std::ofstream os_;
  std::uint64_t frames_ = 0;
  bool finalized_ = false;
};

inline std::pair<ControlBlock, std::shared_ptr<Recorder>> make_recorder(
    StateSpace& space, std::vector<std::string> labels, const std::string& path) {
  auto rec = std::make_shared<Recorder>(space, std::move(labels), path);
  ControlBlock b = rec->block();
  auto inner = std::move(b.step);
  b.step = [rec, inner = std::move(inner)](Accessor& a) { return inner(a); };
  return {std::move(b), rec};
}

// Writes frame k's values on tick k; done after the last frame. An empty
// recording is done on its first step without writing.
class Replayer {
 public:
  Replayer(Trajectory traj, StateSpace& space) : traj_(std::move(traj)) {
    for (const auto& l : traj_.labels) {
      if (!space.has(l.label)) throw UnknownLabel(l.label);
      const ArrayMeta& m = space.meta(l.label);
      if (m.dtype != l.dtype || m.shape != l.dims)
        throw SchemaMismatch("recorded '" + l.label + "' is " + dtype_name(l.dtype) +
                             ", space has " + dtype_name(m.dtype) + " or different shape");
    }
  }

  const Trajectory& trajectory() const { return traj_; }

  ControlBlock block() {
    ControlBlock b;
    b.name = "replay";
    for (const auto& l : traj_.labels) b.writes.push_back(l.label);
    b.stateful = true;
    b.reset = [this] { cursor_ = 0; };
    b.step = [this](Accessor& acc) {
      if (cursor_ >= traj_.frames.size()) return true;
      const Frame& f = traj_.frames[cursor_];
      for (std::size_t i = 0; i < traj_.labels.size(); ++i)
        acc.write_bytes(traj_.labels[i].label, traj_.payload_of(f, i));
      ++cursor_;
      return cursor_ >= traj_.frames.size();
    };
    return b;
  }

 private:
  Trajectory traj_;
  std::size_t cursor_ = 0;
};

inline std::pair<ControlBlock, std::shared_ptr<Replayer>> make_replayer(const std::string& path,
                                                                        StateSpace& space) {
  auto rep = std::make_shared<Replayer>(Trajectory::load(path), space);
  ControlBlock b = rep->block();
  auto inner = std::move(b.step);
  b.step = [rep, inner = std::move(inner)](Accessor& a) { return inner(a); };
  return {std::move(b), rep};
}

}  // namespace unicon
