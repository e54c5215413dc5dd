#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "unicon/state_space.hpp"

namespace unicon {

// TCP pub-sub backend with latest-value semantics: every write is published
// as one framed message, subscribers cache the newest frame per label and
// reads are served from that cache. Slow readers lose intermediate frames.
//
// Frame (little-endian): 0x55 0x43 ('UC'), u16 label_id, u64 seq,
// u64 timestamp_ns, u32 payload_len, payload bytes.
// Handshake: the publisher sends one text line per label on connect (and on
// late registration): "LABEL <id> <name> <dtype> <d0,d1,...>\n".
class SocketBackend final : public Backend {
  struct Entry {
    mutable std::mutex m;
    std::vector<std::byte> bytes;
    std::uint64_t seq = 0;
    std::uint64_t ts = 0;
  };

 public:
  SocketBackend(std::string host, std::uint16_t port,
                BackendKind::SocketRole role = BackendKind::SocketRole::automatic)
      : host_(std::move(host)), port_(port) {
    using Role = BackendKind::SocketRole;
    if (role == Role::publish || role == Role::automatic) {
      if (try_bind()) {
        publisher_ = true;
        accept_thread_ = std::thread([this] { accept_loop(); });
        return;
      }
      if (role == Role::publish)
        throw BackendDown("bind " + host_ + ":" + std::to_string(port_) + ": " +
                          std::strerror(errno));
    }
    if (!try_connect(role == Role::subscribe ? 50 : 1))
      throw BackendDown("connect " + host_ + ":" + std::to_string(port_) + ": " +
                        std::strerror(errno));
    recv_thread_ = std::thread([this] { recv_loop(); });
  }

  ~SocketBackend() override { close(); }

  BackendKind kind() const override {
    return BackendKind::socket(host_, port_,
                               publisher_ ? BackendKind::SocketRole::publish
                                          : BackendKind::SocketRole::subscribe);
  }

  bool is_publisher() const { return publisher_; }

  void add_entry(const ArrayMeta& meta, std::span<const std::byte> init,
                 std::uint64_t now_ns) override {
    auto e = std::make_unique<Entry>();
    e->bytes.assign(meta.nbytes, std::byte{0});
    if (!init.empty()) std::memcpy(e->bytes.data(), init.data(), init.size());
    e->ts = now_ns;
    {
      std::lock_guard lk(reg_mutex_);
      entries_.push_back(std::move(e));
      by_name_[meta.label] = meta.index;
      label_lines_.push_back(handshake_line(meta));
    }
    if (publisher_) broadcast(label_lines_.back());
  }

  std::uint64_t commit(std::size_t idx, std::span<const std::byte> bytes,
                       std::uint64_t now_ns) override {
    if (closed_.load(std::memory_order_relaxed))
      throw BackendDown("socket backend closed");
    Entry& e = *entries_[idx];
    std::uint64_t seq;
    {
      std::lock_guard lk(e.m);
      seq = ++e.seq;
      e.ts = now_ns;
      std::memcpy(e.bytes.data(), bytes.data(), bytes.size());
    }
    std::vector<std::byte> frame = encode_frame(static_cast<std::uint16_t>(idx), seq, now_ns, bytes);
    broadcast(std::string_view(reinterpret_cast<const char*>(frame.data()), frame.size()));
    return seq;
  }

  void fetch(const ArrayMeta& meta, Snapshot& out) const override {
    const Entry& e = *entries_[meta.index];
    std::lock_guard lk(e.m);
    out.bytes = e.bytes;
    out.seq = e.seq;
    out.timestamp_ns = e.ts;
  }

  std::uint64_t seq(std::size_t idx) const override {
    const Entry& e = *entries_[idx];
    std::lock_guard lk(e.m);
    return e.seq;
  }

  void close() override {
    bool was = closed_.exchange(true);
    if (was) return;
    if (listen_fd_ >= 0) {
      ::shutdown(listen_fd_, SHUT_RDWR);
      ::close(listen_fd_);
      listen_fd_ = -1;
    }
    {
      std::lock_guard lk(clients_mutex_);
      for (int fd : clients_) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
      }
      clients_.clear();
    }
    if (conn_fd_ >= 0) {
      ::shutdown(conn_fd_, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    if (recv_thread_.joinable()) recv_thread_.join();
    if (conn_fd_ >= 0) {
      ::close(conn_fd_);
      conn_fd_ = -1;
    }
  }

  std::size_t client_count() const {
    std::lock_guard lk(clients_mutex_);
    return clients_.size();
  }

  // Blocks until the subscriber has seen handshake lines for n labels.
  bool wait_for_labels(std::size_t n, int timeout_ms = 5000) const {
    for (int waited = 0; waited < timeout_ms; waited += 5) {
      {
        std::lock_guard lk(remote_mutex_);
        if (remote_names_.size() >= n) return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

 private:
  static std::vector<std::byte> encode_frame(std::uint16_t id, std::uint64_t seq, std::uint64_t ts,
                                             std::span<const std::byte> payload) {
    std::vector<std::byte> f(2 + 2 + 8 + 8 + 4 + payload.size());
    f[0] = std::byte{0x55};
    f[1] = std::byte{0x43};
    std::memcpy(f.data() + 2, &id, 2);
    std::memcpy(f.data() + 4, &seq, 8);
    std::memcpy(f.data() + 12, &ts, 8);
    std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    std::memcpy(f.data() + 20, &len, 4);
    if (len) std::memcpy(f.data() + 24, payload.data(), len);
    return f;
  }

  static std::string handshake_line(const ArrayMeta& meta) {
    std::ostringstream os;
    os << "LABEL " << meta.index << ' ' << meta.label << ' ' << dtype_name(meta.dtype) << ' ';
    for (std::size_t i = 0; i < meta.shape.size(); ++i) {
      if (i) os << ',';
      os << meta.shape[i];
    }
    os << '\n';
    return os.str();
  }

  bool try_bind() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) return false;
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr();
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 8) != 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      return false;
    }
    return true;
  }

  bool try_connect(int attempts) {
    for (int i = 0; i < attempts; ++i) {
      conn_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
      if (conn_fd_ < 0) return false;
      sockaddr_in addr = make_addr();
      if (::connect(conn_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
        int one = 1;
        ::setsockopt(conn_fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return true;
      }
      ::close(conn_fd_);
      conn_fd_ = -1;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    return false;
  }

  sockaddr_in make_addr() const {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (host_.empty() || host_ == "0.0.0.0" || host_ == "localhost")
      addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    else
      ::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr);
    return addr;
  }

  void accept_loop() {
    while (!closed_.load(std::memory_order_relaxed)) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (closed_.load(std::memory_order_relaxed)) return;
        continue;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      std::string hello;
      {
        std::lock_guard lk(reg_mutex_);
        for (const auto& line : label_lines_) hello += line;
      }
      send_all(fd, hello.data(), hello.size());
      std::lock_guard lk(clients_mutex_);
      clients_.push_back(fd);
    }
  }

  void broadcast(std::string_view data) {
    std::lock_guard lk(clients_mutex_);
    for (auto it = clients_.begin(); it != clients_.end();) {
      if (!send_all(*it, data.data(), data.size())) {
        ::close(*it);
        it = clients_.erase(it);
      } else {
        ++it;
      }
    }
  }

  static bool send_all(int fd, const char* p, std::size_t n) {
    while (n > 0) {
      ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
      if (w <= 0) return false;
      p += w;
      n -= static_cast<std::size_t>(w);
    }
    return true;
  }

  // --- subscriber side ---

  bool read_exact(std::byte* out, std::size_t n) {
    while (n > 0) {
      if (buf_pos_ < buf_.size()) {
        std::size_t take = std::min(n, buf_.size() - buf_pos_);
        std::memcpy(out, buf_.data() + buf_pos_, take);
        buf_pos_ += take;
        out += take;
        n -= take;
        continue;
      }
      buf_.resize(64 * 1024);
      ssize_t r = ::recv(conn_fd_, buf_.data(), buf_.size(), 0);
      if (r <= 0) return false;
      buf_.resize(static_cast<std::size_t>(r));
      buf_pos_ = 0;
    }
    return true;
  }

  void recv_loop() {
    while (!closed_.load(std::memory_order_relaxed)) {
      std::byte first;
      if (!read_exact(&first, 1)) return;
      if (std::to_integer<std::uint8_t>(first) == 0x55) {
        if (!handle_frame()) return;
      } else if (std::to_integer<char>(first) == 'L') {
        if (!handle_label_line()) return;
      } else {
        return;  // stream desync
      }
    }
  }

  bool handle_frame() {
    std::byte hdr[23];  // 0x43, u16 id, u64 seq, u64 ts, u32 len
    if (!read_exact(hdr, sizeof(hdr))) return false;
    if (std::to_integer<std::uint8_t>(hdr[0]) != 0x43) return false;
    std::uint16_t id;
    std::uint64_t seq, ts;
    std::uint32_t len;
    std::memcpy(&id, hdr + 1, 2);
    std::memcpy(&seq, hdr + 3, 8);
    std::memcpy(&ts, hdr + 11, 8);
    std::memcpy(&len, hdr + 19, 4);
    std::vector<std::byte> payload(len);
    if (len && !read_exact(payload.data(), len)) return false;

    Entry* e = nullptr;
    {
      std::lock_guard lk(remote_mutex_);
      auto it = remote_names_.find(id);
      if (it != remote_names_.end()) {
        std::lock_guard rk(reg_mutex_);
        auto jt = by_name_.find(it->second);
        if (jt != by_name_.end() && entries_[jt->second]->bytes.size() == len)
          e = entries_[jt->second].get();
      }
    }
    if (e) {
      std::lock_guard lk(e->m);
      e->bytes = std::move(payload);
      e->seq = seq;
      e->ts = ts;
    }
    return true;
  }

  bool handle_label_line() {
    std::string line = "L";
    std::byte c;
    while (read_exact(&c, 1)) {
      char ch = std::to_integer<char>(c);
      if (ch == '\n') {
        std::istringstream is(line);
        std::string tag, name, dtype, dims;
        std::uint16_t id;
        if (is >> tag >> id >> name >> dtype >> dims && tag == "LABEL") {
          std::lock_guard lk(remote_mutex_);
          remote_names_[id] = name;
        }
        return true;
      }
      line += ch;
      if (line.size() > 4096) return false;
    }
    return false;
  }

  std::string host_;
  std::uint16_t port_;
  bool publisher_ = false;
  std::atomic<bool> closed_{false};

  int listen_fd_ = -1;
  int conn_fd_ = -1;
  std::thread accept_thread_;
  std::thread recv_thread_;

  mutable std::mutex clients_mutex_;
  std::vector<int> clients_;

  mutable std::mutex reg_mutex_;
  std::deque<std::unique_ptr<Entry>> entries_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::vector<std::string> label_lines_;

  mutable std::mutex remote_mutex_;
  std::unordered_map<std::uint16_t, std::string> remote_names_;

  std::vector<std::byte> buf_;
  std::size_t buf_pos_ = 0;
};

}  // namespace unicon
