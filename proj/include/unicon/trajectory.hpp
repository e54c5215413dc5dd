#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "unicon/dtype.hpp"
#include "unicon/error.hpp"
#include "unicon/state_space.hpp"

namespace unicon {

// Recording file (little-endian):
//   magic "UCTRJ1"
//   u32 label_count
//   per label: u16 name_len, name, u8 dtype_code, u8 ndim, u32 dims...
//   frames: u64 tick, u64 timestamp_ns, payloads concatenated in label order
//   footer: magic "UCEND", u64 frame_count
// Frames are appended as they happen; a missing footer (crash) leaves a valid
// prefix that the loader recovers by scanning.

struct LabelSchema {
  std::string label;
  DType dtype{};
  std::vector<std::uint32_t> dims;

  std::size_t elem_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  std::size_t nbytes() const { return elem_count() * dtype_size(dtype); }
};

struct Frame {
  std::uint64_t tick = 0;
  std::uint64_t timestamp_ns = 0;
  std::vector<std::byte> payload;  // label payloads concatenated in schema order
};

struct Trajectory {
  std::vector<LabelSchema> labels;
  std::vector<Frame> frames;
  double rate_hz = 0.0;  // nominal, not persisted

  std::size_t frame_payload_bytes() const {
    std::size_t n = 0;
    for (const auto& l : labels) n += l.nbytes();
    return n;
  }

  int label_index(const std::string& name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i].label == name) return static_cast<int>(i);
    return -1;
  }

  std::size_t label_offset(std::size_t idx) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < idx; ++i) off += labels[i].nbytes();
    return off;
  }

  std::span<const std::byte> payload_of(const Frame& f, std::size_t label_idx) const {
    return {f.payload.data() + label_offset(label_idx), labels[label_idx].nbytes()};
  }

  std::vector<double> values_f64(std::size_t frame_idx, std::size_t label_idx) const {
    const LabelSchema& l = labels[label_idx];
    auto raw = payload_of(frames[frame_idx], label_idx);
    std::vector<double> out(l.elem_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::byte* p = raw.data() + i * dtype_size(l.dtype);
      switch (l.dtype) {
        case DType::f32: { float v; std::memcpy(&v, p, 4); out[i] = v; break; }
        case DType::f64: { double v; std::memcpy(&v, p, 8); out[i] = v; break; }
        case DType::i32: { std::int32_t v; std::memcpy(&v, p, 4); out[i] = v; break; }
        case DType::i64: { std::int64_t v; std::memcpy(&v, p, 8); out[i] = static_cast<double>(v); break; }
        case DType::u8: out[i] = std::to_integer<std::uint8_t>(*p); break;
        case DType::boolean: out[i] = std::to_integer<std::uint8_t>(*p) ? 1.0 : 0.0; break;
      }
    }
    return out;
  }

  void save(const std::string& path) const;
  static Trajectory load(const std::string& path);
};

namespace detail {

constexpr char kTrajMagic[6] = {'U', 'C', 'T', 'R', 'J', '1'};
constexpr char kEndMagic[5] = {'U', 'C', 'E', 'N', 'D'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
bool get(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return bool(is);
}

inline void write_traj_header(std::ostream& os, const std::vector<LabelSchema>& labels) {
  os.write(kTrajMagic, sizeof(kTrajMagic));
  put(os, static_cast<std::uint32_t>(labels.size()));
  for (const auto& l : labels) {
    put(os, static_cast<std::uint16_t>(l.label.size()));
    os.write(l.label.data(), static_cast<std::streamsize>(l.label.size()));
    put(os, static_cast<std::uint8_t>(l.dtype));
    put(os, static_cast<std::uint8_t>(l.dims.size()));
    for (auto d : l.dims) put(os, d);
  }
}

inline void write_frame(std::ostream& os, const Frame& f) {
  put(os, f.tick);
  put(os, f.timestamp_ns);
  os.write(reinterpret_cast<const char*>(f.payload.data()),
           static_cast<std::streamsize>(f.payload.size()));
}

inline void write_footer(std::ostream& os, std::uint64_t frame_count) {
  os.write(kEndMagic, sizeof(kEndMagic));
  put(os, frame_count);
}

}  // namespace detail

inline void Trajectory::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoFailure("cannot open '" + path + "' for writing");
  detail::write_traj_header(os, labels);
  for (const auto& f : frames) detail::write_frame(os, f);
  detail::write_footer(os, frames.size());
  if (!os) throw IoFailure("write to '" + path + "' failed");
}

inline Trajectory Trajectory::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoFailure("cannot open '" + path + "'");
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, detail::kTrajMagic, 6) != 0)
    throw FileCorrupt("'" + path + "' is not a trajectory recording");

  Trajectory t;
  std::uint32_t label_count;
  if (!detail::get(is, label_count)) throw FileCorrupt("'" + path + "': truncated header");
  for (std::uint32_t i = 0; i < label_count; ++i) {
    std::uint16_t name_len;
    if (!detail::get(is, name_len)) throw FileCorrupt("'" + path + "': truncated label table");
    LabelSchema l;
    l.label.resize(name_len);
    is.read(l.label.data(), name_len);
    std::uint8_t dtype_code, ndim;
    if (!detail::get(is, dtype_code) || !detail::get(is, ndim))
      throw FileCorrupt("'" + path + "': truncated label table");
    if (dtype_code > 5) throw FileCorrupt("'" + path + "': bad dtype code");
    l.dtype = static_cast<DType>(dtype_code);
    l.dims.resize(ndim);
    for (auto& d : l.dims)
      if (!detail::get(is, d)) throw FileCorrupt("'" + path + "': truncated label table");
    t.labels.push_back(std::move(l));
  }

  const std::size_t payload_bytes = t.frame_payload_bytes();
  const std::size_t frame_bytes = 16 + payload_bytes;
  const auto header_end = is.tellg();
  const auto file_size = std::filesystem::file_size(path);
  std::size_t body = static_cast<std::size_t>(file_size) - static_cast<std::size_t>(header_end);

  // Footer present? Trust its count; otherwise reconstruct by scan and drop a
  // torn trailing frame.
  std::uint64_t frame_count;
  constexpr std::size_t footer_bytes = 5 + 8;
  bool have_footer = false;
  if (body >= footer_bytes) {
    is.seekg(static_cast<std::streamoff>(file_size - footer_bytes));
    char fm[5];
    is.read(fm, 5);
    if (is && std::memcmp(fm, detail::kEndMagic, 5) == 0) {
      detail::get(is, frame_count);
      have_footer = true;
      if (frame_count * frame_bytes + footer_bytes != body)
        throw FileCorrupt("'" + path + "': footer frame count disagrees with file size");
    }
  }
  if (!have_footer) frame_count = body / frame_bytes;

  is.clear();
  is.seekg(header_end);
  t.frames.reserve(frame_count);
  for (std::uint64_t k = 0; k < frame_count; ++k) {
    Frame f;
    if (!detail::get(is, f.tick) || !detail::get(is, f.timestamp_ns))
      throw FileCorrupt("'" + path + "': truncated frame " + std::to_string(k));
    f.payload.resize(payload_bytes);
    is.read(reinterpret_cast<char*>(f.payload.data()),
            static_cast<std::streamsize>(payload_bytes));
    if (!is) throw FileCorrupt("'" + path + "': truncated frame " + std::to_string(k));
    t.frames.push_back(std::move(f));
  }
  return t;
}

}  // namespace unicon
