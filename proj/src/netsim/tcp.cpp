#include "frdpca/netsim/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "frdpca/errors.hpp"

namespace frdpca::netsim {

namespace {

// Refuse to allocate for frames beyond this size.
constexpr std::size_t kMaxFrameBytes = std::size_t{1} << 34;

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t w = ::send(fd, data, size, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw SessionError(sys_error("send"));
    }
    data += w;
    size -= static_cast<std::size_t>(w);
  }
}

// false on orderly EOF before the first byte; throws on EOF mid-buffer.
bool read_exact(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw FramingError("connection closed inside a frame", got);
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SessionError(sys_error("recv"));
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
  std::vector<std::uint8_t> frame(kFrameHeaderBytes);
  if (!read_exact(fd, frame.data(), frame.size())) return std::nullopt;
  const std::size_t total = frame_length_from_header(frame);
  if (total > kMaxFrameBytes) throw FramingError("frame too large", kFrameHeaderBytes);
  frame.resize(total);
  if (!read_exact(fd, frame.data() + kFrameHeaderBytes, total - kFrameHeaderBytes)) {
    throw FramingError("connection closed inside a frame", kFrameHeaderBytes);
  }
  return frame;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints,
                               &res);
  if (rc != 0) {
    throw SessionError("cannot resolve " + ep.host + ":" + port + ": " + ::gai_strerror(rc));
  }
  return res;
}

class SocketLink final : public WorkerLink {
 public:
  explicit SocketLink(int fd) : fd_(fd) {}
  void send(const std::vector<std::uint8_t>& frame) override {
    write_all(fd_, frame.data(), frame.size());
  }
  std::optional<std::vector<std::uint8_t>> receive() override { return read_frame(fd_); }

 private:
  int fd_;
};

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  std::string port = text;
  const auto colon = text.rfind(':');
  if (colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  if (ep.host.size() >= 2 && ep.host.front() == '[' && ep.host.back() == ']') {
    ep.host = ep.host.substr(1, ep.host.size() - 2);
  }
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (port.empty() || used != port.size() || v > 65535) {
    throw InputError("bad endpoint '" + text + "', expected host:port");
  }
  ep.port = static_cast<std::uint16_t>(v);
  return ep;
}

TcpWorkerServer::TcpWorkerServer(const Endpoint& listen) {
  addrinfo* res = resolve(listen, true);
  std::string last = "no usable address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 4) == 0) {
      fd_ = fd;
      break;
    }
    last = sys_error("bind");
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    throw SessionError("cannot listen on " + listen.host + ":" + std::to_string(listen.port) +
                       ": " + last);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
}

TcpWorkerServer::~TcpWorkerServer() { close(); }

void TcpWorkerServer::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpWorkerServer::serve_one(worker::Worker& worker) {
  int conn = -1;
  do {
    conn = ::accept(fd_, nullptr, nullptr);
  } while (conn < 0 && errno == EINTR);
  if (conn < 0) throw SessionError(sys_error("accept"), worker.machine_index());
  set_nodelay(conn);
  SocketLink link(conn);
  try {
    serve_worker(link, worker);
  } catch (...) {
    ::close(conn);
    throw;
  }
  ::shutdown(conn, SHUT_RDWR);
  ::close(conn);
}

TcpTransport::TcpTransport(const std::vector<Endpoint>& workers,
                           std::chrono::milliseconds connect_timeout) {
  const auto deadline = std::chrono::steady_clock::now() + connect_timeout;
  try {
    for (std::size_t k = 0; k < workers.size(); ++k) {
      int fd = -1;
      std::string last;
      while (fd < 0) {
        addrinfo* res = resolve(workers[k], false);
        for (addrinfo* ai = res; ai != nullptr && fd < 0; ai = ai->ai_next) {
          const int s = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
          if (s < 0) continue;
          if (::connect(s, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd = s;
          } else {
            last = sys_error("connect");
            ::close(s);
          }
        }
        ::freeaddrinfo(res);
        if (fd >= 0) break;
        if (std::chrono::steady_clock::now() >= deadline) {
          throw SessionError("cannot reach machine " + std::to_string(k) + " at " +
                                 workers[k].host + ":" + std::to_string(workers[k].port) + ": " +
                                 last,
                             static_cast<long>(k));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      set_nodelay(fd);
      fds_.push_back(fd);
    }
  } catch (...) {
    for (const int fd : fds_) ::close(fd);
    throw;
  }
  for (std::size_t k = 0; k < fds_.size(); ++k) {
    readers_.emplace_back([this, k] {
      const long machine = static_cast<long>(k);
      try {
        while (auto frame = read_frame(fds_[k])) inbox_.push(InboxEvent{machine, *frame, {}});
        inbox_.push(InboxEvent{machine, {}, "connection closed"});
      } catch (const std::exception& e) {
        inbox_.push(InboxEvent{machine, {}, e.what()});
      }
    });
  }
}

TcpTransport::~TcpTransport() {
  for (const int fd : fds_) ::shutdown(fd, SHUT_RDWR);
  for (auto& t : readers_) t.join();
  for (const int fd : fds_) ::close(fd);
}

void TcpTransport::send(std::uint32_t machine, const std::vector<std::uint8_t>& frame) {
  if (machine >= fds_.size()) {
    throw SessionError("no link to machine " + std::to_string(machine), machine);
  }
  try {
    write_all(fds_[machine], frame.data(), frame.size());
  } catch (const SessionError& e) {
    throw SessionError("machine " + std::to_string(machine) + ": " + e.what(), machine);
  }
}

std::optional<InboxEvent> TcpTransport::receive(std::chrono::steady_clock::time_point deadline) {
  return inbox_.pop_until(deadline);
}

}  // namespace frdpca::netsim
