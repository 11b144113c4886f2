#include "frdpca/netsim/session.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "frdpca/errors.hpp"

namespace frdpca::netsim {

namespace {

constexpr std::int64_t kDefaultTimeoutMs = 120000;

RoundMessage control(std::uint32_t machine, std::uint32_t round, std::vector<double> payload) {
  RoundMessage msg;
  msg.type = MsgType::control;
  msg.machine_index = machine;
  msg.round = round;
  msg.rows = payload.empty() ? 0 : 1;
  msg.cols = payload.size();
  msg.payload = std::move(payload);
  return msg;
}

// Failure text travels as one double per byte after the code.
RoundMessage failure(std::uint32_t machine, std::uint32_t round, const std::string& text) {
  std::vector<double> payload{static_cast<double>(ControlCode::failure)};
  for (const unsigned char c : text) payload.push_back(static_cast<double>(c));
  return control(machine, round, std::move(payload));
}

std::string failure_text(const RoundMessage& msg) {
  std::string out;
  for (std::size_t i = 1; i < msg.payload.size(); ++i) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(msg.payload[i])));
  }
  return out;
}

std::optional<ControlCode> control_code(const RoundMessage& msg) {
  if (msg.type != MsgType::control || msg.payload.empty()) return std::nullopt;
  const double c = msg.payload[0];
  if (c == 1.0) return ControlCode::start;
  if (c == 2.0) return ControlCode::stop;
  if (c == 3.0) return ControlCode::failure;
  return std::nullopt;
}

std::string describe(const RoundMessage& msg) {
  return std::string(to_string(msg.type)) + " round " + std::to_string(msg.round) +
         " from machine " + std::to_string(msg.machine_index);
}

}  // namespace

RoundMessage encode_start(std::uint32_t machine, const WorkerPlan& plan) {
  return control(machine, 1,
                 {static_cast<double>(ControlCode::start), static_cast<double>(plan.r),
                  plan.shifted ? 1.0 : 0.0, plan.inference ? 1.0 : 0.0,
                  plan.send_local_basis ? 1.0 : 0.0, static_cast<double>(plan.kind)});
}

WorkerPlan decode_start(const RoundMessage& msg) {
  if (control_code(msg) != ControlCode::start || msg.payload.size() != 6) {
    throw SessionError("malformed start message", msg.machine_index);
  }
  const auto& v = msg.payload;
  if (!(v[1] >= 1.0) || v[1] != std::floor(v[1]) || (v[5] != 0.0 && v[5] != 1.0)) {
    throw SessionError("malformed start message", msg.machine_index);
  }
  WorkerPlan plan;
  plan.r = static_cast<Index>(v[1]);
  plan.shifted = v[2] != 0.0;
  plan.inference = v[3] != 0.0;
  plan.send_local_basis = v[4] != 0.0;
  plan.kind = static_cast<worker::SummaryKind>(static_cast<int>(v[5]));
  return plan;
}

void serve_worker(WorkerLink& link, worker::Worker& w) {
  const std::uint32_t k = w.machine_index();
  std::optional<WorkerPlan> plan;
  std::uint32_t round = 1;
  try {
    while (auto frame = link.receive()) {
      const RoundMessage msg = decode_frame(*frame);
      round = msg.round;
      if (msg.machine_index != k) {
        throw SessionError("addressed to machine " + std::to_string(msg.machine_index) +
                           ", this is machine " + std::to_string(k));
      }
      if (msg.type == MsgType::control) {
        const auto code = control_code(msg);
        if (code == ControlCode::stop) return;
        if (code != ControlCode::start) throw SessionError("unexpected control message");
        plan = decode_start(msg);
        if (plan->kind != w.summary().kind) {
          throw SessionError(std::string("coordinator expects a ") + worker::to_string(plan->kind) +
                             " summary, worker holds " + worker::to_string(w.summary().kind));
        }
        if (plan->send_local_basis) {
          link.send(encode_frame(
              RoundMessage::from_matrix(MsgType::basis_up, k, 1, w.local_basis(plan->r).matrix())));
        }
        continue;
      }
      if (msg.type != MsgType::basis_down) throw SessionError("unexpected " + describe(msg));
      if (!plan) throw SessionError("basis received before start");
      const Eigen::MatrixXd m = msg.to_matrix();
      if (m.rows() != w.dim() || m.cols() != plan->r) {
        throw DimensionError("basis is " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", expected " + std::to_string(w.dim()) +
                             "x" + std::to_string(plan->r));
      }
      const double defect = Basisd::orthonormality_defect(m);
      if (!(defect <= kWireOrthonormalityTolerance)) {
        std::cerr << "machine " << k << ": received basis with orthonormality defect " << defect
                  << "\n";
      }
      const Basisd u = Basisd::from_orthonormal(m, std::numeric_limits<double>::infinity());
      if (plan->inference || !plan->shifted) {
        link.send(encode_frame(RoundMessage::from_matrix(
            MsgType::step_up, k, msg.round, worker::unshifted_step(w.summary(), u))));
        if (plan->inference) {
          const double sigma2 = worker::shifted_step(w.summary(), u).sigma2_local;
          link.send(
              encode_frame(RoundMessage::scalar(MsgType::scalar_up, k, msg.round, sigma2)));
        }
      } else {
        const worker::StepResult step = worker::shifted_step(w.summary(), u);
        link.send(encode_frame(RoundMessage::from_matrix(MsgType::step_up, k, msg.round, step.g)));
      }
    }
  } catch (const std::exception& e) {
    try {
      link.send(encode_frame(failure(k, round, e.what())));
    } catch (...) {
    }
  }
}

std::chrono::milliseconds default_round_timeout() {
  const char* env = std::getenv("FRDPCA_ROUND_TIMEOUT_MS");
  if (env == nullptr || *env == '\0') return std::chrono::milliseconds(kDefaultTimeoutMs);
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0' || v <= 0) {
    throw InputError(std::string("FRDPCA_ROUND_TIMEOUT_MS must be a positive integer, got '") +
                     env + "'");
  }
  return std::chrono::milliseconds(v);
}

Session::Session(std::unique_ptr<Transport> transport, std::chrono::milliseconds round_timeout)
    : transport_(std::move(transport)), timeout_(round_timeout) {
  if (!transport_) throw InputError("Session: null transport");
}

Session::~Session() {
  if (stopped_) return;
  try {
    stop(last_round_);
  } catch (...) {
  }
}

void Session::send(const RoundMessage& msg, Direction direction) {
  const std::vector<std::uint8_t> frame = encode_frame(msg);
  transport_->send(msg.machine_index, frame);
  log_.record(msg.round, direction, msg.floats(), frame.size());
}

void Session::start(const WorkerPlan& plan) {
  for (std::uint32_t k = 0; k < workers(); ++k) send(encode_start(k, plan), Direction::control);
  last_round_ = 1;
}

void Session::broadcast(MsgType type, std::uint32_t round, const Eigen::MatrixXd& m) {
  for (std::uint32_t k = 0; k < workers(); ++k) {
    send(RoundMessage::from_matrix(type, k, round, m), Direction::down);
  }
  last_round_ = round;
}

std::vector<std::vector<RoundMessage>> Session::gather(std::uint32_t round,
                                                       std::span<const MsgType> types) {
  const std::uint32_t K = workers();
  std::vector<std::vector<std::optional<RoundMessage>>> slots(
      types.size(), std::vector<std::optional<RoundMessage>>(K));
  std::size_t remaining = types.size() * K;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;

  while (remaining > 0) {
    std::optional<InboxEvent> ev = transport_->receive(deadline);
    if (!ev) {
      for (std::uint32_t k = 0; k < K; ++k) {
        for (const auto& slot : slots) {
          if (!slot[k]) {
            throw SessionError("round " + std::to_string(round) + ": no reply from machine " +
                                   std::to_string(k) + " within " +
                                   std::to_string(timeout_.count()) + " ms",
                               k);
          }
        }
      }
    }
    if (!ev->failure.empty()) {
      throw SessionError("machine " + std::to_string(ev->machine) + ": " + ev->failure,
                         ev->machine);
    }
    RoundMessage msg;
    try {
      msg = decode_frame(ev->frame);
    } catch (const FramingError& e) {
      throw SessionError("machine " + std::to_string(ev->machine) + ": " + e.what(), ev->machine);
    }
    if (msg.machine_index >= K || (ev->machine >= 0 && msg.machine_index != ev->machine)) {
      throw SessionError("protocol error: " + describe(msg) + " on the link of machine " +
                             std::to_string(ev->machine),
                         ev->machine);
    }
    const long k = msg.machine_index;
    if (control_code(msg) == ControlCode::failure) {
      throw SessionError("machine " + std::to_string(k) + " failed: " + failure_text(msg), k);
    }
    std::size_t slot = types.size();
    for (std::size_t i = 0; i < types.size(); ++i) {
      if (types[i] == msg.type) slot = i;
    }
    if (slot == types.size() || msg.round != round) {
      throw SessionError("protocol error: unexpected " + describe(msg) + " while gathering round " +
                             std::to_string(round),
                         k);
    }
    if (slots[slot][k]) throw SessionError("protocol error: duplicate " + describe(msg), k);
    if (msg.type == MsgType::basis_up) {
      const double defect = Basisd::orthonormality_defect(msg.to_matrix());
      if (!(defect <= kWireOrthonormalityTolerance)) {
        warnings_.push_back("machine " + std::to_string(k) +
                            ": basis orthonormality defect " + std::to_string(defect));
      }
    }
    log_.record(round, Direction::up, msg.floats(), ev->frame.size());
    slots[slot][k] = std::move(msg);
    --remaining;
  }
  last_round_ = round;

  std::vector<std::vector<RoundMessage>> out(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) {
    out[i].reserve(K);
    for (auto& m : slots[i]) out[i].push_back(std::move(*m));
  }
  return out;
}

void Session::stop(std::uint32_t round) {
  if (stopped_) return;
  stopped_ = true;
  for (std::uint32_t k = 0; k < workers(); ++k) {
    send(control(k, round, {static_cast<double>(ControlCode::stop)}), Direction::control);
  }
}

}  // namespace frdpca::netsim
