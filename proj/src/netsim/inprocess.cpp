#include "frdpca/netsim/inprocess.hpp"

#include <string>

namespace frdpca::netsim {

struct InProcessTransport::Link final : WorkerLink {
  Link(std::uint32_t machine, Inbox& inbox, std::chrono::milliseconds delay)
      : machine(machine), inbox(inbox), delay(delay) {}

  void send(const std::vector<std::uint8_t>& frame) override {
    inbox.push(InboxEvent{static_cast<long>(machine), frame, {}});
  }

  std::optional<std::vector<std::uint8_t>> receive() override {
    auto frame = down.pop();
    if (frame && delay.count() > 0) std::this_thread::sleep_for(delay);
    return frame;
  }

  std::uint32_t machine;
  Inbox& inbox;
  std::chrono::milliseconds delay;
  BlockingQueue<std::vector<std::uint8_t>> down;
};

InProcessTransport::InProcessTransport(std::span<worker::Worker> workers,
                                       std::vector<std::chrono::milliseconds> reply_delay) {
  links_.reserve(workers.size());
  for (std::size_t k = 0; k < workers.size(); ++k) {
    const auto delay = k < reply_delay.size() ? reply_delay[k] : std::chrono::milliseconds(0);
    links_.push_back(std::make_unique<Link>(static_cast<std::uint32_t>(k), inbox_, delay));
  }
  threads_.reserve(workers.size());
  for (std::size_t k = 0; k < workers.size(); ++k) {
    Link* link = links_[k].get();
    worker::Worker* w = &workers[k];
    threads_.emplace_back([link, w] {
      try {
        serve_worker(*link, *w);
      } catch (const std::exception& e) {
        link->inbox.push(InboxEvent{static_cast<long>(link->machine), {}, e.what()});
      }
    });
  }
}

InProcessTransport::~InProcessTransport() {
  for (auto& link : links_) link->down.close();
  for (auto& t : threads_) t.join();
}

void InProcessTransport::send(std::uint32_t machine, const std::vector<std::uint8_t>& frame) {
  if (machine >= links_.size()) {
    throw SessionError("no link to machine " + std::to_string(machine), machine);
  }
  links_[machine]->down.push(frame);
}

std::optional<InboxEvent> InProcessTransport::receive(
    std::chrono::steady_clock::time_point deadline) {
  return inbox_.pop_until(deadline);
}

std::unique_ptr<Transport> make_inprocess_transport(std::span<worker::Worker> workers) {
  return std::make_unique<InProcessTransport>(workers);
}

}  // namespace frdpca::netsim
