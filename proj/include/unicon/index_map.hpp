#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unicon/state_space.hpp"

namespace unicon {

// Vectorized gather from one label into another, with an optional per-element
// affine transform. Default scale/offset leave gathered values untouched
// (bit-identical for f32/f64 sources of matching dtype).
struct IndexMap {
  std::string source_label;
  std::string target_label;
  std::vector<std::size_t> gather;  // one source index per target element
  std::vector<double> scale;        // empty = all 1.0
  std::vector<double> offset;       // empty = all 0.0

  static IndexMap identity(const std::string& source, const std::string& target, std::size_t n) {
    IndexMap m;
    m.source_label = source;
    m.target_label = target;
    m.gather.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.gather[i] = i;
    return m;
  }

  bool pure_gather() const { return scale.empty() && offset.empty(); }
};

// target[i] = source[gather[i]] * scale[i] + offset[i], committed as one write.
inline std::uint64_t apply_map(StateSpace& space, const IndexMap& map) {
  const ArrayMeta& src = space.meta(map.source_label);
  const ArrayMeta& dst = space.meta(map.target_label);
  if (map.gather.size() != dst.elem_count)
    throw LengthMismatch(map.target_label, dst.elem_count, map.gather.size());
  for (std::size_t i : map.gather)
    if (i >= src.elem_count) throw GatherOutOfBounds(i, src.elem_count);
  if (!map.scale.empty() && map.scale.size() != map.gather.size())
    throw LengthMismatch("scale", map.gather.size(), map.scale.size());
  if (!map.offset.empty() && map.offset.size() != map.gather.size())
    throw LengthMismatch("offset", map.gather.size(), map.offset.size());

  Snapshot in = space.read(map.source_label);

  // Pure gather between same-dtype labels moves raw elements, so an identity
  // map is bit-identical for every dtype including NaN payloads.
  if (map.pure_gather() && src.dtype == dst.dtype) {
    const std::size_t esz = dtype_size(src.dtype);
    std::vector<std::byte> out(dst.nbytes);
    for (std::size_t i = 0; i < map.gather.size(); ++i)
      std::memcpy(out.data() + i * esz, in.bytes.data() + map.gather[i] * esz, esz);
    return space.write_bytes(map.target_label, out);
  }

  std::vector<double> out(dst.elem_count);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = in.at_f64(map.gather[i]);
    if (!map.scale.empty()) v *= map.scale[i];
    if (!map.offset.empty()) v += map.offset[i];
    out[i] = v;
  }
  return space.write_f64(map.target_label, out);
}

// Gather values through a map without touching the target label (used by
// platform adapters that stage into their own buffers).
inline std::vector<double> gather_values(const Snapshot& in, const std::vector<std::size_t>& gather) {
  std::vector<double> out(gather.size());
  for (std::size_t i = 0; i < gather.size(); ++i) {
    if (gather[i] >= in.size()) throw GatherOutOfBounds(gather[i], in.size());
    out[i] = in.at_f64(gather[i]);
  }
  return out;
}

}  // namespace unicon
