#pragma once

// Plain POSIX-socket carrier for the frame protocol. One connection per worker; the
// position of a worker's address in the coordinator's list is its machine index.

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "frdpca/netsim/session.hpp"

namespace frdpca::netsim {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port" or ":port" / "port" (host defaults to 127.0.0.1).
Endpoint parse_endpoint(const std::string& text);

/// Listening socket for one worker process.
class TcpWorkerServer {
 public:
  /// Port 0 picks an ephemeral port; see port().
  explicit TcpWorkerServer(const Endpoint& listen);
  ~TcpWorkerServer();
  TcpWorkerServer(const TcpWorkerServer&) = delete;
  TcpWorkerServer& operator=(const TcpWorkerServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Accepts one coordinator connection and serves it until stop or disconnect.
  void serve_one(worker::Worker& worker);
  /// Unblocks a pending accept.
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

class TcpTransport final : public Transport {
 public:
  /// Connects to every endpoint, retrying refused connections until `connect_timeout`.
  explicit TcpTransport(const std::vector<Endpoint>& workers,
                        std::chrono::milliseconds connect_timeout = std::chrono::seconds(10));
  ~TcpTransport() override;

  std::uint32_t workers() const override { return static_cast<std::uint32_t>(fds_.size()); }
  void send(std::uint32_t machine, const std::vector<std::uint8_t>& frame) override;
  std::optional<InboxEvent> receive(std::chrono::steady_clock::time_point deadline) override;

 private:
  Inbox inbox_;
  std::vector<int> fds_;
  std::vector<std::thread> readers_;
};

}  // namespace frdpca::netsim
