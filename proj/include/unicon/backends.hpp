#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include "unicon/shm_backend.hpp"
#include "unicon/socket_backend.hpp"
#include "unicon/state_space.hpp"

namespace unicon {

inline std::unique_ptr<Backend> make_backend(const BackendKind& kind) {
  switch (kind.variant) {
    case BackendKind::Variant::in_process:
      return std::make_unique<InProcessBackend>();
    case BackendKind::Variant::shared_memory:
      return std::make_unique<SharedMemoryBackend>(kind.segment);
    case BackendKind::Variant::socket:
      return std::make_unique<SocketBackend>(kind.host, kind.port, kind.role);
  }
  return std::make_unique<InProcessBackend>();
}

// "inproc" | "shm" | "shm:<segment>" | "socket:<host>:<port>[:pub|:sub]"
inline BackendKind parse_backend(const std::string& text) {
  if (text == "inproc" || text.empty()) return BackendKind::in_process();
  if (text == "shm" || text.rfind("shm:", 0) == 0) {
    std::string seg = text == "shm" ? "" : text.substr(4);
    if (seg.empty()) {
      const char* env = std::getenv("UNICON_SHM_NAME");
      seg = env ? env : "unicon";
    }
    return BackendKind::shared_memory(seg);
  }
  if (text.rfind("socket", 0) == 0) {
    std::string rest = text.size() > 6 ? text.substr(7) : "";
    std::string host = "127.0.0.1";
    std::uint16_t port = 7311;
    auto role = BackendKind::SocketRole::automatic;
    if (!rest.empty()) {
      auto c1 = rest.find(':');
      host = rest.substr(0, c1);
      if (c1 != std::string::npos) {
        std::string tail = rest.substr(c1 + 1);
        auto c2 = tail.find(':');
        port = static_cast<std::uint16_t>(std::stoi(tail.substr(0, c2)));
        if (c2 != std::string::npos) {
          std::string r = tail.substr(c2 + 1);
          if (r == "pub") role = BackendKind::SocketRole::publish;
          else if (r == "sub") role = BackendKind::SocketRole::subscribe;
          else throw SpecInvalid("unknown socket role: " + r);
        }
      }
    }
    return BackendKind::socket(host, port, role);
  }
  throw SpecInvalid("unknown backend: " + text);
}

inline std::unique_ptr<StateSpace> make_space(const BackendKind& kind) {
  return std::make_unique<StateSpace>(make_backend(kind));
}

}  // namespace unicon
