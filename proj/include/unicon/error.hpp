#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace unicon {

enum class ErrorCode : int {
  duplicate_label,
  unknown_label,
  length_mismatch,
  shape_invalid,
  gather_out_of_bounds,
  torn_read,
  backend_down,
  schema_mismatch,
  file_corrupt,
  io_failure,
  parse_error,
  joint_mismatch,
  window_too_large,
  no_common_labels,
  too_few_samples,
  producer_silent,
  rate_invalid,
  undeclared_access,
  block_error,
  spec_invalid,
  non_finite_input,
  offset_unavailable,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DuplicateLabel : Error {
  explicit DuplicateLabel(const std::string& label)
      : Error(ErrorCode::duplicate_label, "duplicate label: " + label) {}
};

struct UnknownLabel : Error {
  explicit UnknownLabel(const std::string& label)
      : Error(ErrorCode::unknown_label, "unknown label: " + label) {}
};

struct LengthMismatch : Error {
  LengthMismatch(const std::string& label, std::size_t expected, std::size_t got)
      : Error(ErrorCode::length_mismatch, "length mismatch on '" + label + "': expected " +
                                              std::to_string(expected) + ", got " +
                                              std::to_string(got)) {}
};

struct ShapeInvalid : Error {
  explicit ShapeInvalid(const std::string& what) : Error(ErrorCode::shape_invalid, what) {}
};

struct GatherOutOfBounds : Error {
  GatherOutOfBounds(std::size_t index, std::size_t bound)
      : Error(ErrorCode::gather_out_of_bounds, "gather index " + std::to_string(index) +
                                                   " out of bounds (source has " +
                                                   std::to_string(bound) + " elements)") {}
};

struct TornRead : Error {
  explicit TornRead(const std::string& label)
      : Error(ErrorCode::torn_read, "torn read on '" + label + "' after retry limit") {}
};

struct BackendDown : Error {
  explicit BackendDown(const std::string& what) : Error(ErrorCode::backend_down, what) {}
};

struct SchemaMismatch : Error {
  explicit SchemaMismatch(const std::string& what) : Error(ErrorCode::schema_mismatch, what) {}
};

struct FileCorrupt : Error {
  explicit FileCorrupt(const std::string& what) : Error(ErrorCode::file_corrupt, what) {}
};

struct IoFailure : Error {
  explicit IoFailure(const std::string& what) : Error(ErrorCode::io_failure, what) {}
};

struct ParseError : Error {
  ParseError(int line, int col, const std::string& message)
      : Error(ErrorCode::parse_error, "parse error at " + std::to_string(line) + ":" +
                                          std::to_string(col) + ": " + message),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct JointMismatch : Error {
  JointMismatch(std::vector<std::string> missing, std::vector<std::string> extra)
      : Error(ErrorCode::joint_mismatch, format(missing, extra)),
        missing(std::move(missing)),
        extra(std::move(extra)) {}
  std::vector<std::string> missing;  // in workflow, absent from platform
  std::vector<std::string> extra;    // in platform, absent from workflow

  static std::string format(const std::vector<std::string>& m, const std::vector<std::string>& e) {
    std::string s = "joint mismatch;";
    if (!m.empty()) {
      s += " missing:";
      for (const auto& j : m) s += " " + j;
    }
    if (!e.empty()) {
      s += " extra:";
      for (const auto& j : e) s += " " + j;
    }
    return s;
  }
};

struct WindowTooLarge : Error {
  WindowTooLarge(std::size_t window, std::size_t limit)
      : Error(ErrorCode::window_too_large, "shift window " + std::to_string(window) +
                                               " too large for trajectory of " +
                                               std::to_string(limit) + " frames") {}
};

struct NoCommonLabels : Error {
  NoCommonLabels() : Error(ErrorCode::no_common_labels, "trajectories share no labels") {}
};

struct TooFewSamples : Error {
  TooFewSamples(std::size_t got, std::size_t need)
      : Error(ErrorCode::too_few_samples, "need at least " + std::to_string(need) +
                                              " samples, got " + std::to_string(got)) {}
};

struct ProducerSilent : Error {
  explicit ProducerSilent(const std::string& label)
      : Error(ErrorCode::producer_silent, "producer silent on '" + label + "' (seq not advancing)") {}
};

struct RateInvalid : Error {
  explicit RateInvalid(double rate)
      : Error(ErrorCode::rate_invalid, "invalid rate: " + std::to_string(rate) + " Hz") {}
};

struct UndeclaredAccess : Error {
  UndeclaredAccess(const std::string& block, const std::string& label, bool is_write)
      : Error(ErrorCode::undeclared_access, "block '" + block + "' " +
                                                (is_write ? "wrote" : "read") +
                                                " undeclared label '" + label + "'") {}
};

struct BlockError : Error {
  BlockError(const std::string& block, const std::string& what)
      : Error(ErrorCode::block_error, "block '" + block + "' failed: " + what) {}
};

struct SpecInvalid : Error {
  explicit SpecInvalid(const std::string& what) : Error(ErrorCode::spec_invalid, what) {}
};

struct NonFiniteInput : Error {
  explicit NonFiniteInput(const std::string& what) : Error(ErrorCode::non_finite_input, what) {}
};

struct OffsetUnavailable : Error {
  explicit OffsetUnavailable(const std::string& what)
      : Error(ErrorCode::offset_unavailable, what) {}
};

}  // namespace unicon
