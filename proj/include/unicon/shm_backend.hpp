#pragma once

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <vector>

#include "unicon/state_space.hpp"

namespace unicon {

// POSIX shared-memory backend. Per-label region layout:
//   [u64 version][u64 seq][u64 timestamp_ns][payload]
// guarded by the seqlock (odd version = write in progress).
//
// The segment carries a small directory so a second process attaching to the
// same name resolves labels to the regions the creator allocated. Directory
// mutation (registration) is not concurrency-safe; register before sharing.
class SharedMemoryBackend final : public Backend {
  static constexpr std::uint64_t kMagic = 0x00314D4853435543ull;  // "UCSHM1"
  static constexpr std::size_t kHeaderBytes = 64;
  static constexpr std::size_t kDirBytes = 64 * 1024;
  static constexpr std::size_t kRegionAlign = 64;

  struct Header {
    std::uint64_t magic;
    std::uint64_t capacity;
    std::uint64_t next_free;  // bump pointer into the data area
    std::uint32_t label_count;
    std::uint32_t dir_used;   // bytes of directory consumed
  };

 public:
  explicit SharedMemoryBackend(std::string segment_name, std::size_t capacity = 4u << 20)
      : name_(normalize(segment_name)), capacity_(capacity) {
    fd_ = ::shm_open(name_.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
    if (fd_ >= 0) {
      owner_ = true;
      if (::ftruncate(fd_, static_cast<off_t>(capacity_)) != 0)
        throw BackendDown("ftruncate(" + name_ + "): " + std::strerror(errno));
    } else if (errno == EEXIST) {
      fd_ = ::shm_open(name_.c_str(), O_RDWR, 0600);
      if (fd_ < 0) throw BackendDown("shm_open(" + name_ + "): " + std::strerror(errno));
      struct stat st {};
      if (::fstat(fd_, &st) == 0 && st.st_size > 0) capacity_ = static_cast<std::size_t>(st.st_size);
    } else {
      throw BackendDown("shm_open(" + name_ + "): " + std::strerror(errno));
    }
    base_ = static_cast<std::byte*>(
        ::mmap(nullptr, capacity_, PROT_READ | PROT_WRITE, MAP_SHARED, fd_, 0));
    if (base_ == MAP_FAILED) {
      base_ = nullptr;
      throw BackendDown("mmap(" + name_ + "): " + std::strerror(errno));
    }
    if (owner_) {
      Header h{};
      h.magic = kMagic;
      h.capacity = capacity_;
      h.next_free = kHeaderBytes + kDirBytes;
      h.label_count = 0;
      h.dir_used = 0;
      std::memcpy(base_, &h, sizeof(h));
    } else if (header().magic != kMagic) {
      throw BackendDown("segment '" + name_ + "' is not a state-space segment");
    }
  }

  ~SharedMemoryBackend() override { close(); }

  BackendKind kind() const override { return BackendKind::shared_memory(name_); }

  void add_entry(const ArrayMeta& meta, std::span<const std::byte> init,
                 std::uint64_t now_ns) override {
    std::uint64_t off = find_region(meta);
    if (off != 0) {
      // Label already present in the segment: adopt the live region as-is so
      // an attaching reader sees the writer's current seq and payload.
      regions_.emplace_back(base_ + off, meta.nbytes);
      return;
    }
    Header& h = header();
    std::uint64_t region = (h.next_free + (kRegionAlign - 1)) & ~(std::uint64_t)(kRegionAlign - 1);
    std::size_t total = SeqlockRegion::total_bytes(meta.nbytes);
    if (region + total > capacity_)
      throw BackendDown("segment '" + name_ + "' full (" + std::to_string(capacity_) + " bytes)");
    append_dir_entry(meta, region);
    h.next_free = region + total;
    regions_.emplace_back(base_ + region, meta.nbytes);
    regions_.back().init(init, now_ns);
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

  void close() override {
    if (base_) {
      ::munmap(base_, capacity_);
      base_ = nullptr;
    }
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (owner_) {
      ::shm_unlink(name_.c_str());
      owner_ = false;
    }
  }

  const std::string& segment_name() const { return name_; }

 private:
  static std::string normalize(std::string n) {
    if (n.empty()) n = "unicon";
    if (n[0] != '/') n.insert(n.begin(), '/');
    return n;
  }

  Header& header() { return *reinterpret_cast<Header*>(base_); }
  const Header& header() const { return *reinterpret_cast<const Header*>(base_); }

  // Directory entry: u32 name_len, name, u8 dtype, u8 ndim, u32 dims..., u64 offset.
  std::uint64_t find_region(const ArrayMeta& meta) const {
    const std::byte* p = base_ + kHeaderBytes;
    const std::byte* end = p + header().dir_used;
    while (p < end) {
      std::uint32_t name_len;
      std::memcpy(&name_len, p, 4);
      p += 4;
      std::string name(reinterpret_cast<const char*>(p), name_len);
      p += name_len;
      std::uint8_t dtype = std::to_integer<std::uint8_t>(*p++);
      std::uint8_t ndim = std::to_integer<std::uint8_t>(*p++);
      std::vector<std::uint32_t> dims(ndim);
      std::memcpy(dims.data(), p, 4u * ndim);
      p += 4u * ndim;
      std::uint64_t off;
      std::memcpy(&off, p, 8);
      p += 8;
      if (name == meta.label) {
        if (static_cast<DType>(dtype) != meta.dtype || dims != meta.shape)
          throw SchemaMismatch("segment '" + name_ + "' already holds '" + name +
                               "' with a different dtype/shape");
        return off;
      }
    }
    return 0;
  }

  void append_dir_entry(const ArrayMeta& meta, std::uint64_t region_off) {
    Header& h = header();
    std::size_t need = 4 + meta.label.size() + 2 + 4 * meta.shape.size() + 8;
    if (h.dir_used + need > kDirBytes)
      throw BackendDown("segment '" + name_ + "' directory full");
    std::byte* p = base_ + kHeaderBytes + h.dir_used;
    std::uint32_t name_len = static_cast<std::uint32_t>(meta.label.size());
    std::memcpy(p, &name_len, 4);
    p += 4;
    std::memcpy(p, meta.label.data(), name_len);
    p += name_len;
    *p++ = static_cast<std::byte>(meta.dtype);
    *p++ = static_cast<std::byte>(static_cast<std::uint8_t>(meta.shape.size()));
    std::memcpy(p, meta.shape.data(), 4 * meta.shape.size());
    p += 4 * meta.shape.size();
    std::memcpy(p, &region_off, 8);
    h.dir_used += static_cast<std::uint32_t>(need);
    h.label_count += 1;
  }

  std::string name_;
  std::size_t capacity_;
  int fd_ = -1;
  bool owner_ = false;
  std::byte* base_ = nullptr;
  std::vector<SeqlockRegion> regions_;
};

}  // namespace unicon
