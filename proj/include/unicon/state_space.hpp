#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "unicon/dtype.hpp"
#include "unicon/error.hpp"

namespace unicon {

inline std::uint64_t monotonic_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

// ---------------------------------------------------------------------------
// Backend selection

struct BackendKind {
  enum class Variant { in_process, shared_memory, socket };
  enum class SocketRole { automatic, publish, subscribe };

  Variant variant = Variant::in_process;
  std::string segment;  // shared_memory
  std::string host;     // socket
  std::uint16_t port = 0;
  SocketRole role = SocketRole::automatic;

  static BackendKind in_process() { return {}; }

  static BackendKind shared_memory(std::string segment_name) {
    BackendKind k;
    k.variant = Variant::shared_memory;
    k.segment = std::move(segment_name);
    return k;
  }

  static BackendKind socket(std::string host, std::uint16_t port,
                            SocketRole role = SocketRole::automatic) {
    BackendKind k;
    k.variant = Variant::socket;
    k.host = std::move(host);
    k.port = port;
    k.role = role;
    return k;
  }

  const char* name() const {
    switch (variant) {
      case Variant::in_process: return "inproc";
      case Variant::shared_memory: return "shm";
      case Variant::socket: return "socket";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Array metadata and read snapshots

struct ArrayMeta {
  std::string label;
  DType dtype{};
  std::vector<std::uint32_t> shape;
  std::size_t elem_count = 0;
  std::size_t nbytes = 0;
  std::size_t index = 0;  // registration order, also the wire label id
};

inline std::size_t shape_elem_count(const std::vector<std::uint32_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

struct Snapshot {
  std::vector<std::byte> bytes;
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ns = 0;
  DType dtype{};
  std::vector<std::uint32_t> shape;

  std::size_t size() const { return bytes.size() / dtype_size(dtype); }

  template <typename T>
  std::span<const T> as() const {
    if (dtype_of_v<T> != dtype)
      throw SchemaMismatch(std::string("snapshot holds ") + dtype_name(dtype) + ", requested " +
                           dtype_name(dtype_of_v<T>));
    return {reinterpret_cast<const T*>(bytes.data()), size()};
  }

  double at_f64(std::size_t i) const {
    const std::byte* p = bytes.data() + i * dtype_size(dtype);
    switch (dtype) {
      case DType::f32: { float v; std::memcpy(&v, p, 4); return v; }
      case DType::f64: { double v; std::memcpy(&v, p, 8); return v; }
      case DType::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
      case DType::i64: { std::int64_t v; std::memcpy(&v, p, 8); return static_cast<double>(v); }
      case DType::u8: return static_cast<double>(std::to_integer<std::uint8_t>(*p));
      case DType::boolean: return std::to_integer<std::uint8_t>(*p) ? 1.0 : 0.0;
    }
    return 0.0;
  }

  std::vector<double> as_f64() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_f64(i);
    return out;
  }
};

inline void store_f64(DType t, std::byte* p, std::size_t i, double v) {
  p += i * dtype_size(t);
  switch (t) {
    case DType::f32: { float f = static_cast<float>(v); std::memcpy(p, &f, 4); break; }
    case DType::f64: std::memcpy(p, &v, 8); break;
    case DType::i32: { auto x = static_cast<std::int32_t>(v); std::memcpy(p, &x, 4); break; }
    case DType::i64: { auto x = static_cast<std::int64_t>(v); std::memcpy(p, &x, 8); break; }
    case DType::u8: *p = static_cast<std::byte>(static_cast<std::uint8_t>(v)); break;
    case DType::boolean: *p = static_cast<std::byte>(v != 0.0 ? 1 : 0); break;
  }
}

// ---------------------------------------------------------------------------
// Seqlock region: [u64 version][u64 seq][u64 timestamp_ns][payload]
//
// Single writer, any number of readers. Odd version = write in progress;
// readers retry on version change and report a torn read past the limit.

class SeqlockRegion {
 public:
  static constexpr std::size_t header_bytes = 24;
  static constexpr int max_retries = 64;

  SeqlockRegion() = default;
  SeqlockRegion(std::byte* base, std::size_t payload_bytes)
      : base_(base), payload_bytes_(payload_bytes) {}

  static std::size_t total_bytes(std::size_t payload_bytes) {
    return header_bytes + payload_bytes;
  }

  void init(std::span<const std::byte> payload, std::uint64_t ts) {
    word(0).store(0, std::memory_order_relaxed);
    raw(1) = 0;  // seq
    raw(2) = ts;
    if (!payload.empty()) std::memcpy(base_ + header_bytes, payload.data(), payload.size());
    else std::memset(base_ + header_bytes, 0, payload_bytes_);
  }

  std::uint64_t write(std::span<const std::byte> payload, std::uint64_t ts) {
    std::uint64_t v = word(0).load(std::memory_order_relaxed);
    word(0).store(v + 1, std::memory_order_seq_cst);
    std::uint64_t seq = raw(1) + 1;
    raw(1) = seq;
    raw(2) = ts;
    std::memcpy(base_ + header_bytes, payload.data(), payload.size());
    word(0).store(v + 2, std::memory_order_seq_cst);
    return seq;
  }

  // Returns false on a torn read (retry limit exhausted).
  bool read(std::vector<std::byte>& bytes, std::uint64_t& seq, std::uint64_t& ts) const {
    bytes.resize(payload_bytes_);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
      std::uint64_t v1 = word(0).load(std::memory_order_acquire);
      if (v1 & 1) continue;
      seq = raw(1);
      ts = raw(2);
      std::memcpy(bytes.data(), base_ + header_bytes, payload_bytes_);
      std::atomic_thread_fence(std::memory_order_acquire);
      std::uint64_t v2 = word(0).load(std::memory_order_relaxed);
      if (v1 == v2) return true;
    }
    return false;
  }

  std::uint64_t seq() const {
    std::uint64_t s;
    for (;;) {
      std::uint64_t v1 = word(0).load(std::memory_order_acquire);
      if (v1 & 1) continue;
      s = raw(1);
      std::atomic_thread_fence(std::memory_order_acquire);
      if (word(0).load(std::memory_order_relaxed) == v1) return s;
    }
  }

 private:
  std::atomic_ref<std::uint64_t> word(std::size_t i) const {
    return std::atomic_ref<std::uint64_t>(*(reinterpret_cast<std::uint64_t*>(base_) + i));
  }
  std::uint64_t& raw(std::size_t i) const {
    return *(reinterpret_cast<std::uint64_t*>(base_) + i);
  }

  std::byte* base_ = nullptr;
  std::size_t payload_bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Backend interface

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  virtual void add_entry(const ArrayMeta& meta, std::span<const std::byte> init,
                         std::uint64_t now_ns) = 0;
  // Returns the committed seq.
  virtual std::uint64_t commit(std::size_t idx, std::span<const std::byte> bytes,
                               std::uint64_t now_ns) = 0;
  virtual void fetch(const ArrayMeta& meta, Snapshot& out) const = 0;
  virtual std::uint64_t seq(std::size_t idx) const = 0;
  virtual void close() {}
};

class InProcessBackend final : public Backend {
 public:
  BackendKind kind() const override { return BackendKind::in_process(); }

  void add_entry(const ArrayMeta& meta, std::span<const std::byte> init,
                 std::uint64_t now_ns) override {
    auto buf = std::make_unique<std::vector<std::byte>>(SeqlockRegion::total_bytes(meta.nbytes));
    SeqlockRegion region(buf->data(), meta.nbytes);
    region.init(init, now_ns);
    regions_.push_back(region);
    buffers_.push_back(std::move(buf));
  }

  std::uint64_t commit(std::size_t idx, std::span<const std::byte> bytes,
                       std::uint64_t now_ns) override {
    return regions_[idx].write(bytes, now_ns);
  }

  void fetch(const ArrayMeta& meta, Snapshot& out) const override {
    if (!regions_[meta.index].read(out.bytes, out.seq, out.timestamp_ns))
      throw TornRead(meta.label);
  }

  std::uint64_t seq(std::size_t idx) const override { return regions_[idx].seq(); }

 private:
  std::vector<std::unique_ptr<std::vector<std::byte>>> buffers_;
  std::vector<SeqlockRegion> regions_;
};

// ---------------------------------------------------------------------------
// StateSpace: the label -> array registry over one backend.
//
// Registration is not thread-safe; register everything before spinning up
// writers and readers. After that, write/read follow the backend's
// single-writer-per-label, many-readers contract.

class StateSpace {
 public:
  explicit StateSpace(std::unique_ptr<Backend> backend = nullptr)
      : backend_(backend ? std::move(backend) : std::make_unique<InProcessBackend>()),
        created_at_ns_(monotonic_ns()) {}

  StateSpace(const StateSpace&) = delete;
  StateSpace& operator=(const StateSpace&) = delete;

  std::uint64_t now_ns() const { return monotonic_ns(); }
  std::uint64_t created_at_ns() const { return created_at_ns_; }
  Backend& backend() { return *backend_; }
  const Backend& backend() const { return *backend_; }
  BackendKind kind() const { return backend_->kind(); }

  bool has(const std::string& label) const { return by_label_.count(label) != 0; }

  const ArrayMeta& meta(const std::string& label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) throw UnknownLabel(label);
    return metas_[it->second];
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(metas_.size());
    for (const auto& m : metas_) out.push_back(m.label);
    return out;
  }

  const ArrayMeta& register_bytes(const std::string& label, DType dtype,
                                  std::vector<std::uint32_t> shape,
                                  std::span<const std::byte> init = {}) {
    if (by_label_.count(label)) throw DuplicateLabel(label);
    if (shape.empty()) throw ShapeInvalid("empty shape for '" + label + "'");
    for (auto d : shape)
      if (d == 0) throw ShapeInvalid("zero dimension in shape of '" + label + "'");
    ArrayMeta m;
    m.label = label;
    m.dtype = dtype;
    m.shape = std::move(shape);
    m.elem_count = shape_elem_count(m.shape);
    m.nbytes = m.elem_count * dtype_size(dtype);
    m.index = metas_.size();
    if (!init.empty() && init.size() != m.nbytes)
      throw LengthMismatch(label, m.nbytes, init.size());
    backend_->add_entry(m, init, now_ns());
    by_label_[label] = m.index;
    metas_.push_back(std::move(m));
    return metas_.back();
  }

  template <typename T>
  const ArrayMeta& register_array(const std::string& label, std::vector<std::uint32_t> shape,
                                  std::span<const T> init = {}) {
    return register_bytes(label, dtype_of_v<T>, std::move(shape), std::as_bytes(init));
  }

  template <typename T>
  const ArrayMeta& register_array(const std::string& label, std::vector<std::uint32_t> shape,
                                  std::initializer_list<T> init) {
    return register_array<T>(label, std::move(shape), std::span<const T>(init.begin(), init.size()));
  }

  const ArrayMeta& register_zeros(const std::string& label, DType dtype,
                                  std::vector<std::uint32_t> shape) {
    return register_bytes(label, dtype, std::move(shape));
  }

  std::uint64_t write_bytes(const std::string& label, std::span<const std::byte> bytes) {
    const ArrayMeta& m = meta(label);
    if (bytes.size() != m.nbytes)
      throw LengthMismatch(label, m.elem_count, bytes.size() / dtype_size(m.dtype));
    return backend_->commit(m.index, bytes, now_ns());
  }

  template <typename T>
  std::uint64_t write(const std::string& label, std::span<const T> values) {
    const ArrayMeta& m = meta(label);
    if (dtype_of_v<T> != m.dtype)
      throw SchemaMismatch("'" + label + "' is " + dtype_name(m.dtype) + ", wrote " +
                           dtype_name(dtype_of_v<T>));
    if (values.size() != m.elem_count) throw LengthMismatch(label, m.elem_count, values.size());
    return backend_->commit(m.index, std::as_bytes(values), now_ns());
  }

  template <typename T>
  std::uint64_t write(const std::string& label, const std::vector<T>& values) {
    return write(label, std::span<const T>(values));
  }

  template <typename T>
  std::uint64_t write(const std::string& label, std::initializer_list<T> values) {
    return write(label, std::span<const T>(values.begin(), values.size()));
  }

  // Converts into the label's registered dtype.
  std::uint64_t write_f64(const std::string& label, std::span<const double> values) {
    const ArrayMeta& m = meta(label);
    if (values.size() != m.elem_count) throw LengthMismatch(label, m.elem_count, values.size());
    if (m.dtype == DType::f64) return backend_->commit(m.index, std::as_bytes(values), now_ns());
    scratch_.resize(m.nbytes);
    for (std::size_t i = 0; i < values.size(); ++i)
      store_f64(m.dtype, scratch_.data(), i, values[i]);
    return backend_->commit(m.index, scratch_, now_ns());
  }

  std::uint64_t write_f64(const std::string& label, std::initializer_list<double> values) {
    return write_f64(label, std::span<const double>(values.begin(), values.size()));
  }

  Snapshot read(const std::string& label) const {
    const ArrayMeta& m = meta(label);
    Snapshot out;
    out.dtype = m.dtype;
    out.shape = m.shape;
    backend_->fetch(m, out);
    return out;
  }

  template <typename T>
  std::vector<T> read_values(const std::string& label) const {
    Snapshot s = read(label);
    auto view = s.as<T>();
    return std::vector<T>(view.begin(), view.end());
  }

  std::vector<double> read_f64(const std::string& label) const { return read(label).as_f64(); }

  std::uint64_t seq(const std::string& label) const { return backend_->seq(meta(label).index); }

  void close() { backend_->close(); }

 private:
  std::unique_ptr<Backend> backend_;
  std::unordered_map<std::string, std::size_t> by_label_;
  std::vector<ArrayMeta> metas_;
  std::uint64_t created_at_ns_;
  std::vector<std::byte> scratch_;  // write_f64 conversion buffer, single-writer path
};

}  // namespace unicon
