#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <thread>
#include <vector>

#include "frdpca/netsim/session.hpp"

namespace frdpca::netsim {

/// Each worker runs on its own thread behind a pair of frame queues. Frames are encoded and
/// decoded exactly as on the TCP path. Workers are borrowed and must outlive the transport.
class InProcessTransport final : public Transport {
 public:
  /// `reply_delay[k]`, if present, is slept by machine k before answering each frame.
  explicit InProcessTransport(std::span<worker::Worker> workers,
                              std::vector<std::chrono::milliseconds> reply_delay = {});
  ~InProcessTransport() override;

  std::uint32_t workers() const override { return static_cast<std::uint32_t>(links_.size()); }
  void send(std::uint32_t machine, const std::vector<std::uint8_t>& frame) override;
  std::optional<InboxEvent> receive(std::chrono::steady_clock::time_point deadline) override;

 private:
  struct Link;
  Inbox inbox_;
  std::vector<std::unique_ptr<Link>> links_;
  std::vector<std::thread> threads_;
};

std::unique_ptr<Transport> make_inprocess_transport(std::span<worker::Worker> workers);

}  // namespace frdpca::netsim
