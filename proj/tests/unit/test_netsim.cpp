#include <doctest.h>

#include <cstdlib>
#include <deque>
#include <string>
#include <vector>

#include "frdpca/coordinator.hpp"
#include "frdpca/errors.hpp"
#include "frdpca/experiment.hpp"
#include "frdpca/models.hpp"
#include "frdpca/netsim/comm_log.hpp"
#include "frdpca/netsim/frame.hpp"
#include "frdpca/netsim/inprocess.hpp"
#include "frdpca/netsim/session.hpp"
#include "frdpca/netsim/tcp.hpp"
#include "helpers.hpp"

using namespace frdpca;
using namespace frdpca::netsim;
using namespace std::chrono_literals;

namespace {

std::vector<worker::Worker> make_workers(Index p, Index n, Index K, std::vector<double> spikes,
                                         std::uint64_t seed) {
  models::SpikedModelSpec spec;
  spec.p = p;
  spec.spikes = std::move(spikes);
  spec.basis_mode = models::RandomOrthonormalBasis{seed};
  const auto shards = models::sample_gaussian_spiked(spec, n, K, seed + 1);
  std::vector<worker::Worker> out;
  for (const auto& s : shards) out.emplace_back(s.machine_index, worker::compute_local_covariance(s));
  return out;
}

coordinator::IterationConfig rounds(Index r, std::uint32_t T, bool inference = false) {
  coordinator::IterationConfig cfg;
  cfg.r = r;
  cfg.policy = coordinator::FixedRounds{T};
  cfg.inference_mode = inference;
  return cfg;
}

// Replays a fixed script of inbox events and swallows outgoing frames.
class ScriptedTransport final : public Transport {
 public:
  ScriptedTransport(std::uint32_t K, std::deque<InboxEvent> script)
      : K_(K), script_(std::move(script)) {}
  std::uint32_t workers() const override { return K_; }
  void send(std::uint32_t, const std::vector<std::uint8_t>&) override {}
  std::optional<InboxEvent> receive(std::chrono::steady_clock::time_point) override {
    if (script_.empty()) return std::nullopt;
    InboxEvent ev = std::move(script_.front());
    script_.pop_front();
    return ev;
  }

 private:
  std::uint32_t K_;
  std::deque<InboxEvent> script_;
};

InboxEvent basis_event(std::uint32_t k, std::uint32_t round, MsgType type = MsgType::basis_up) {
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(3, 1);
  return InboxEvent{static_cast<long>(k), encode_frame(RoundMessage::from_matrix(type, k, round, e)), {}};
}

long gather_error_machine(std::deque<InboxEvent> script, std::uint32_t K, std::string* what = nullptr) {
  Session s(std::make_unique<ScriptedTransport>(K, std::move(script)), 50ms);
  const std::array<MsgType, 1> want{MsgType::basis_up};
  try {
    s.gather(1, want);
  } catch (const SessionError& e) {
    if (what) *what = e.what();
    return e.machine();
  }
  return -100;
}

}  // namespace

TEST_SUITE("netsim") {

TEST_CASE("empty control frame is the bare header plus CRC") {
  RoundMessage m;
  const auto f = encode_frame(m);
  // 4 + 1 + 4 + 4 + 8 + 8 header bytes, 4 CRC bytes
  CHECK(f.size() == 33);
  CHECK(kFrameHeaderBytes == 29);
  CHECK(decode_frame(f) == m);
}

TEST_CASE("frame layout is little-endian with a CRC32 trailer") {
  const std::vector<std::uint8_t> check{'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  CHECK(crc32(check) == 0xCBF43926u);

  RoundMessage m = RoundMessage::scalar(MsgType::scalar_up, 0x01020304u, 7, 1.0);
  const auto f = encode_frame(m);
  REQUIRE(f.size() == 41);
  CHECK(std::string(f.begin(), f.begin() + 4) == "FPC1");
  CHECK(f[4] == 3);
  CHECK(f[5] == 0x04);
  CHECK(f[8] == 0x01);
  CHECK(f[9] == 7);
  CHECK(f[13] == 1);
  CHECK(f[21] == 1);
  CHECK(f[29 + 7] == 0x3f);  // 1.0 = 0x3FF0000000000000, high byte last
  CHECK(f[29 + 6] == 0xf0);
  const std::uint32_t crc = crc32(std::span(f).first(37));
  CHECK(f[37] == (crc & 0xff));
  CHECK(f[40] == (crc >> 24));
}

TEST_CASE("matrices travel row-major") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const RoundMessage m = RoundMessage::from_matrix(MsgType::step_up, 1, 2, a);
  CHECK(m.payload == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(m.to_matrix() == a);
  CHECK(m.floats() == 6);
}

TEST_CASE("property: random frames round-trip bit for bit") {
  Engine eng(501);
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int trial = 0; trial < 300; ++trial) {
    RoundMessage m;
    m.type = static_cast<MsgType>(testing::uniform_index(0, 4, eng));
    m.machine_index = u32(eng);
    m.round = u32(eng);
    m.rows = static_cast<std::uint64_t>(testing::uniform_index(0, 6, eng));
    m.cols = static_cast<std::uint64_t>(testing::uniform_index(0, 6, eng));
    for (std::uint64_t i = 0; i < m.rows * m.cols; ++i) {
      m.payload.push_back(std::bit_cast<double>(bits(eng)));  // NaN payloads included
    }
    const auto f = encode_frame(m);
    CHECK(f.size() == kFrameOverheadBytes + 8 * m.payload.size());
    CHECK(decode_frame(f) == m);
    CHECK(frame_length_from_header(std::span(f).first(kFrameHeaderBytes)) == f.size());
  }
}

TEST_CASE("corruption is detected with an offset") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 2);
  const auto f = encode_frame(RoundMessage::from_matrix(MsgType::basis_down, 2, 3, a));
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto bad = f;
    bad[i] ^= 0x10;
    CHECK_THROWS_AS(decode_frame(bad), FramingError);
  }
  auto bad = f;
  bad[0] = 'X';
  try {
    decode_frame(bad);
    FAIL("no error");
  } catch (const FramingError& e) {
    CHECK(e.offset() == 0);
  }
  bad = f;
  bad[30] ^= 1;
  try {
    decode_frame(bad);
    FAIL("no error");
  } catch (const FramingError& e) {
    CHECK(e.offset() == f.size() - 4);
  }
  bad = f;
  bad[4] = 9;
  try {
    decode_frame(bad);
    FAIL("no error");
  } catch (const FramingError& e) {
    CHECK(e.offset() == 4);
  }
  bad = f;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_frame(bad), FramingError);
}

TEST_CASE("truncation at every boundary is a framing error") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
  const auto f = encode_frame(RoundMessage::from_matrix(MsgType::step_up, 0, 2, a));
  for (std::size_t len = 0; len < f.size(); ++len) {
    try {
      decode_frame(std::span(f).first(len));
      FAIL("truncated frame accepted at length " << len);
    } catch (const FramingError& e) {
      CHECK(e.offset() <= len);
    }
  }
}

TEST_CASE("encode rejects inconsistent payloads") {
  RoundMessage m;
  m.rows = 2;
  m.cols = 2;
  m.payload = {1.0};
  CHECK_THROWS_AS(encode_frame(m), InputError);
}

TEST_CASE("start plan round-trips") {
  WorkerPlan plan;
  plan.r = 4;
  plan.shifted = false;
  plan.inference = true;
  plan.send_local_basis = false;
  plan.kind = worker::SummaryKind::kendall_tau;
  const WorkerPlan back = decode_start(decode_frame(encode_frame(encode_start(3, plan))));
  CHECK(back.r == 4);
  CHECK_FALSE(back.shifted);
  CHECK(back.inference);
  CHECK_FALSE(back.send_local_basis);
  CHECK(back.kind == worker::SummaryKind::kendall_tau);
}

TEST_CASE("comm log bookkeeping") {
  CommLog log;
  log.record(1, Direction::up, 10, 109);
  log.record(1, Direction::up, 10, 109);
  log.record(2, Direction::down, 10, 109);
  log.record(1, Direction::control, 6, 77);
  CHECK(log.floats(1, Direction::up) == 20);
  CHECK(log.floats(Direction::down) == 10);
  CHECK(log.data_floats() == 30);
  CHECK(log.messages(Direction::up) == 2);
  CHECK(log.frame_bytes() == 109 * 3 + 77);
  for (const auto& rec : log.records()) CHECK(rec.payload_bytes == rec.floats * 8);
  CHECK(log.records().front().direction == Direction::up);
}

TEST_CASE("protocol float counts for K=60, p=200, r=3") {
  auto workers = make_workers(200, 10, 60, {3.0, 2.75, 2.5}, 1);
  const auto one = cli::run_distributed(workers, cli::TransportKind::inprocess, rounds(3, 1));
  CHECK(one.comm_log.floats(1, Direction::up) == 36000);
  CHECK(one.comm_log.data_floats() == 36000);
  CHECK(one.comm_log.messages(Direction::up) == 60);

  const auto three = cli::run_distributed(workers, cli::TransportKind::inprocess, rounds(3, 3));
  CHECK(three.comm_log.data_floats() == 180000);
  for (std::uint32_t t = 2; t <= 3; ++t) {
    CHECK(three.comm_log.floats(t, Direction::down) == 36000);
    CHECK(three.comm_log.floats(t, Direction::up) == 36000);
  }
  const auto inf = cli::run_distributed(workers, cli::TransportKind::inprocess, rounds(3, 3, true));
  CHECK(inf.comm_log.data_floats() == 180120);
  // Every frame's bytes are its payload plus the fixed 33-byte overhead.
  for (const auto& rec : inf.comm_log.records()) {
    CHECK(rec.frame_bytes == rec.payload_bytes + rec.messages * kFrameOverheadBytes);
  }
}

TEST_CASE("property: float counts match the closed form") {
  Engine eng(502);
  for (int trial = 0; trial < 12; ++trial) {
    const Index K = testing::uniform_index(1, 6, eng);
    const Index p = testing::uniform_index(3, 25, eng);
    const Index r = testing::uniform_index(1, std::min<Index>(3, p - 1), eng);
    const auto T = static_cast<std::uint32_t>(testing::uniform_index(1, 4, eng));
    const bool inference = trial % 2 == 1;
    std::vector<double> spikes;
    for (Index i = 0; i < r; ++i) spikes.push_back(8.0 - static_cast<double>(i));
    auto workers = make_workers(p, 20, K, spikes, eng());
    const auto est = cli::run_distributed(workers, cli::TransportKind::inprocess, rounds(r, T, inference));
    const std::uint64_t kpr = static_cast<std::uint64_t>(K * p * r);
    CHECK(est.comm_log.floats(1, Direction::up) == kpr);
    for (std::uint32_t t = 2; t <= T; ++t) {
      CHECK(est.comm_log.floats(t, Direction::down) == kpr);
      CHECK(est.comm_log.floats(t, Direction::up) == kpr + (inference ? K : 0));
    }
    CHECK(est.comm_log.data_floats() ==
          kpr * (2 * T - 1) + (inference ? static_cast<std::uint64_t>(K) * (T - 1) : 0));
  }
}

TEST_CASE("session_run returns the traffic of the driver") {
  auto workers = make_workers(8, 10, 3, {4.0}, 2);
  Session session(make_inprocess_transport(workers));
  const CommLog log = session_run(session, [](Session& s) {
    coordinator::run_distributed_pca(s, rounds(1, 2));
  });
  CHECK(log.data_floats() == 3 * 8 * 3);
}

TEST_CASE("timeout names the silent machine") {
  auto workers = make_workers(6, 10, 4, {4.0}, 3);
  std::vector<std::chrono::milliseconds> delay{0ms, 0ms, 1000ms, 0ms};
  Session session(std::make_unique<InProcessTransport>(workers, delay), 200ms);
  try {
    coordinator::run_distributed_pca(session, rounds(1, 2));
    FAIL("no timeout");
  } catch (const SessionError& e) {
    CHECK(e.machine() == 2);
    CHECK(std::string(e.what()).find("machine 2") != std::string::npos);
  }
}

TEST_CASE("round timeout comes from the environment") {
  ::setenv("FRDPCA_ROUND_TIMEOUT_MS", "250", 1);
  CHECK(default_round_timeout() == 250ms);
  ::setenv("FRDPCA_ROUND_TIMEOUT_MS", "soon", 1);
  CHECK_THROWS_AS(default_round_timeout(), InputError);
  ::setenv("FRDPCA_ROUND_TIMEOUT_MS", "0", 1);
  CHECK_THROWS_AS(default_round_timeout(), InputError);
  ::unsetenv("FRDPCA_ROUND_TIMEOUT_MS");
  CHECK(default_round_timeout() == 120000ms);
}

TEST_CASE("gather rejects duplicates, strays and failures") {
  std::string what;
  CHECK(gather_error_machine({basis_event(0, 1), basis_event(0, 1)}, 2, &what) == 0);
  CHECK(what.find("duplicate") != std::string::npos);
  CHECK(gather_error_machine({basis_event(1, 2)}, 2, &what) == 1);
  CHECK(what.find("unexpected") != std::string::npos);
  CHECK(gather_error_machine({basis_event(0, 1, MsgType::step_up)}, 2) == 0);
  CHECK(gather_error_machine({InboxEvent{1, {}, "connection closed"}}, 2) == 1);
  // A frame claiming another machine's index on machine 0's link.
  InboxEvent spoof = basis_event(1, 1);
  spoof.machine = 0;
  CHECK(gather_error_machine({spoof}, 2) == 0);
  InboxEvent broken = basis_event(1, 1);
  broken.frame[10] ^= 1;
  CHECK(gather_error_machine({broken}, 2) == 1);
  CHECK(gather_error_machine({basis_event(5, 1)}, 2) == 5);
  // Machine 0 answers, machine 1 never does.
  CHECK(gather_error_machine({basis_event(0, 1)}, 2, &what) == 1);
  CHECK(what.find("no reply") != std::string::npos);
}

TEST_CASE("gather flags non-orthonormal bases as warnings") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(3, 1, 1.0);
  std::deque<InboxEvent> script{
      InboxEvent{0, encode_frame(RoundMessage::from_matrix(MsgType::basis_up, 0, 1, bad)), {}}};
  Session s(std::make_unique<ScriptedTransport>(1, std::move(script)), 50ms);
  const std::array<MsgType, 1> want{MsgType::basis_up};
  const auto got = s.gather(1, want);
  CHECK(got[0].size() == 1);
  CHECK(s.warnings().size() == 1);
}

TEST_CASE("worker failures surface with the machine index") {
  auto workers = make_workers(6, 10, 3, {4.0}, 4);
  auto cfg = rounds(1, 2);
  cfg.estimator = worker::SummaryKind::kendall_tau;
  Session session(make_inprocess_transport(workers), 5000ms);
  try {
    coordinator::run_distributed_pca(session, cfg);
    FAIL("no error");
  } catch (const SessionError& e) {
    CHECK(e.machine() == 0);
    CHECK(std::string(e.what()).find("kendall_tau") != std::string::npos);
  }
}

TEST_CASE("arrival order does not change the result") {
  auto workers = make_workers(20, 30, 5, {5.0, 3.0}, 5);
  auto cfg = rounds(2, 3, true);
  Session plain(make_inprocess_transport(workers));
  const auto a = coordinator::run_distributed_pca(plain, cfg);
  std::vector<std::chrono::milliseconds> delay{40ms, 30ms, 20ms, 10ms, 0ms};
  Session reversed(std::make_unique<InProcessTransport>(workers, delay));
  const auto b = coordinator::run_distributed_pca(reversed, cfg);
  CHECK(a.basis == b.basis);
  CHECK(a.singular_values_per_round == b.singular_values_per_round);
  CHECK(a.comm_log == b.comm_log);
}

TEST_CASE("in-process and TCP transports are bit identical") {
  auto workers = make_workers(20, 30, 4, {5.0, 3.0}, 6);
  for (const bool inference : {false, true}) {
    const auto cfg = rounds(2, 3, inference);
    const auto a = cli::run_distributed(workers, cli::TransportKind::inprocess, cfg);
    const auto b = cli::run_distributed(workers, cli::TransportKind::tcp, cfg);
    CHECK(a.basis == b.basis);
    REQUIRE(a.basis_history.size() == b.basis_history.size());
    for (std::size_t t = 0; t < a.basis_history.size(); ++t) CHECK(a.basis_history[t] == b.basis_history[t]);
    CHECK(a.singular_values_per_round == b.singular_values_per_round);
    CHECK(a.comm_log == b.comm_log);
  }
}

TEST_CASE("endpoint parsing") {
  CHECK(parse_endpoint("10.0.0.2:7000").host == "10.0.0.2");
  CHECK(parse_endpoint("10.0.0.2:7000").port == 7000);
  CHECK(parse_endpoint(":81").host == "127.0.0.1");
  CHECK(parse_endpoint("81").port == 81);
  CHECK_THROWS_AS(parse_endpoint("host:"), InputError);
  CHECK_THROWS_AS(parse_endpoint("host:99999"), InputError);
}

TEST_CASE("TCP connect failure is a session error") {
  std::uint16_t port = 0;
  {
    TcpWorkerServer probe(Endpoint{"127.0.0.1", 0});
    port = probe.port();
  }
  CHECK_THROWS_AS(TcpTransport({Endpoint{"127.0.0.1", port}}, 200ms), SessionError);
}

}  // TEST_SUITE
