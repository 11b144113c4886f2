#pragma once

// Coordinator/worker barrier protocol over an abstract frame transport.
//
// Round 1     coordinator -> CONTROL(start) ; worker -> BASIS_UP (local eigenbasis)
// Round t>=2  coordinator -> BASIS_DOWN(U^(t-1)) ; worker -> STEP_UP [+ SCALAR_UP]
// End         coordinator -> CONTROL(stop)
//
// The coordinator blocks until every machine has answered a round and hands the
// messages back indexed by machine, so reductions never depend on arrival order.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frdpca/netsim/comm_log.hpp"
#include "frdpca/netsim/frame.hpp"
#include "frdpca/netsim/queue.hpp"
#include "frdpca/worker.hpp"

namespace frdpca::netsim {

/// Something that arrived at the coordinator: a frame, or a failure report for a machine.
struct InboxEvent {
  long machine = -1;
  std::vector<std::uint8_t> frame;
  std::string failure;  // non-empty: the link to `machine` failed
};

using Inbox = BlockingQueue<InboxEvent>;

/// Coordinator-side view of K worker links.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::uint32_t workers() const = 0;
  virtual void send(std::uint32_t machine, const std::vector<std::uint8_t>& frame) = 0;
  /// Next event from any worker, or nullopt at the deadline.
  virtual std::optional<InboxEvent> receive(std::chrono::steady_clock::time_point deadline) = 0;
};

/// Worker-side view of its single link to the coordinator.
class WorkerLink {
 public:
  virtual ~WorkerLink() = default;
  virtual void send(const std::vector<std::uint8_t>& frame) = 0;
  /// Blocks for the next frame; nullopt when the link is closed.
  virtual std::optional<std::vector<std::uint8_t>> receive() = 0;
};

enum class ControlCode : int { start = 1, stop = 2, failure = 3 };

/// What the workers do in the rounds after a start.
struct WorkerPlan {
  Index r = 1;
  bool shifted = true;
  bool inference = false;        // send S U and sigma2 separately
  bool send_local_basis = true;  // round 1 uplink of the local eigenbasis
  worker::SummaryKind kind = worker::SummaryKind::covariance;
};

RoundMessage encode_start(std::uint32_t machine, const WorkerPlan& plan);
WorkerPlan decode_start(const RoundMessage& msg);

/// Runs the worker protocol until CONTROL(stop) or link closure. Protocol violations are
/// reported with a CONTROL(failure) frame before returning.
void serve_worker(WorkerLink& link, worker::Worker& worker);

/// FRDPCA_ROUND_TIMEOUT_MS if set, otherwise 120 s.
std::chrono::milliseconds default_round_timeout();

/// Tolerance on ||U^T U - I||_max for bases received over the wire; violations are warnings.
inline constexpr double kWireOrthonormalityTolerance = 1e-8;

class Session {
 public:
  explicit Session(std::unique_ptr<Transport> transport,
                   std::chrono::milliseconds round_timeout = default_round_timeout());
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::uint32_t workers() const { return transport_->workers(); }

  void start(const WorkerPlan& plan);
  /// Sends the same matrix to every machine, ascending machine index.
  void broadcast(MsgType type, std::uint32_t round, const Eigen::MatrixXd& m);
  /// Blocks until each machine delivered one message of every requested type for `round`.
  /// Result is [type][machine]. Throws SessionError on timeout (naming the lowest missing
  /// machine), duplicates, unexpected messages, and worker failures.
  std::vector<std::vector<RoundMessage>> gather(std::uint32_t round, std::span<const MsgType> types);
  void stop(std::uint32_t round);

  const CommLog& log() const noexcept { return log_; }
  void reset_log() { log_ = CommLog{}; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::chrono::milliseconds round_timeout() const noexcept { return timeout_; }

 private:
  void send(const RoundMessage& msg, Direction direction);

  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  CommLog log_;
  std::vector<std::string> warnings_;
  std::uint32_t last_round_ = 1;
  bool stopped_ = false;
};

/// Runs `driver` against the session and returns the traffic it generated.
template <typename Driver>
CommLog session_run(Session& session, Driver&& driver) {
  session.reset_log();
  driver(session);
  return session.log();
}

}  // namespace frdpca::netsim
