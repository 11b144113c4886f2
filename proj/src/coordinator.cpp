#include "frdpca/coordinator.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "frdpca/errors.hpp"
#include "frdpca/rng.hpp"

namespace frdpca::coordinator {

namespace {

constexpr double kDegenerateBilinear = 1e-14;

void check_unit(const Eigen::VectorXd& x, Index p, const char* name) {
  if (x.size() != p) {
    throw DimensionError(std::string("bilinear: ") + name + " has length " +
                         std::to_string(x.size()) + ", expected " + std::to_string(p));
  }
  if (!x.allFinite()) throw InputError(std::string("bilinear: ") + name + " is not finite");
}

ConsensusResult finish_consensus(const Eigen::MatrixXd& m, double sigma2) {
  ConsensusResult out;
  out.basis = qr_orthonormalize(m);
  out.sigma2_global = sigma2;
  out.singular_values = top_r_singular_values(m);
  return out;
}

Basisd random_basis(Index p, Index r, std::uint64_t seed) {
  Engine engine(mix_seed(seed, 0x696e6974ull));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(p, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < p; ++i) g(i, j) = normal(engine);
  }
  return qr_orthonormalize(g);
}

}  // namespace

const char* to_string(ShiftMode mode) {
  return mode == ShiftMode::shifted ? "shifted" : "unshifted";
}

const char* to_string(InitMode mode) {
  return mode == InitMode::one_round ? "oneround" : "random";
}

std::uint32_t resolve_rounds(const RoundPolicy& policy, Index K, Index n, Index p, Index r) {
  if (const auto* f = std::get_if<FixedRounds>(&policy)) {
    if (f->T < 1) throw InputError("round policy: T must be at least 1");
    return f->T;
  }
  if (const auto* b = std::get_if<BiasSchedule>(&policy)) {
    if (!(b->alpha > 0.0) || !(b->eps > 0.0)) {
      throw InputError("bias schedule: alpha and eps must be positive");
    }
    const double t = std::ceil((2.0 * b->alpha + 1.0) / (2.0 * b->alpha) + b->eps);
    return static_cast<std::uint32_t>(std::max(3.0, t));
  }
  const auto& l = std::get<LogSchedule>(policy);
  if (!(l.eps > 0.0)) throw InputError("log schedule: eps must be positive");
  if (K < 1 || n < 1 || p < 1 || r < 1) {
    throw InputError("log schedule: K, n, p and r must be positive");
  }
  const double ratio = static_cast<double>(K) * static_cast<double>(n) /
                       (static_cast<double>(p) * static_cast<double>(r));
  const double lg = std::log(ratio);
  if (!(lg > 0.0)) return 1;
  return static_cast<std::uint32_t>(std::max(1.0, std::ceil(std::pow(lg, 1.0 + l.eps))));
}

OneRoundResult aggregate_one_round(std::span<const Basisd> bases) {
  if (bases.empty()) throw InputError("aggregate_one_round: no bases");
  const Index p = bases[0].rows();
  const Index r = bases[0].cols();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(p, p);
  for (const Basisd& b : bases) {
    if (b.rows() != p || b.cols() != r) {
      throw DimensionError("aggregate_one_round: bases differ in shape");
    }
    mean.selfadjointView<Eigen::Lower>().rankUpdate(b.matrix());
  }
  mean = mean.selfadjointView<Eigen::Lower>();
  mean /= static_cast<double>(bases.size());

  const Index want = std::min(p, r + 1);
  const EigPaird eig = sym_top_r_eig(SymMatrixd(mean), want);
  OneRoundResult out;
  out.eigengap = want > r ? eig.values(r - 1) - eig.values(r) : eig.values(r - 1);
  out.degenerate = !(out.eigengap >= kDegenerateGap);
  out.basis = Basisd::from_orthonormal(eig.basis.matrix().leftCols(r));
  return out;
}

ConsensusResult aggregate_consensus(std::span<const worker::StepResult> steps) {
  if (steps.empty()) throw InputError("aggregate_consensus: no steps");
  const Index p = steps[0].g.rows();
  const Index r = steps[0].g.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, r);
  double sigma2 = 0.0;
  for (const auto& s : steps) {
    if (s.g.rows() != p || s.g.cols() != r) {
      throw DimensionError("aggregate_consensus: step matrices differ in shape");
    }
    sum += s.g;
    sigma2 += s.sigma2_local;
  }
  const double K = static_cast<double>(steps.size());
  return finish_consensus(sum / K, sigma2 / K);
}

ConsensusResult aggregate_consensus_split(std::span<const Eigen::MatrixXd> su,
                                          std::span<const double> sigma2, const Basisd& u,
                                          bool shifted) {
  if (su.empty()) throw InputError("aggregate_consensus: no steps");
  if (!sigma2.empty() && sigma2.size() != su.size()) {
    throw DimensionError("aggregate_consensus: one shift per machine required");
  }
  if (shifted && sigma2.empty()) throw InputError("aggregate_consensus: shifts missing");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(u.rows(), u.cols());
  for (const auto& m : su) {
    if (m.rows() != u.rows() || m.cols() != u.cols()) {
      throw DimensionError("aggregate_consensus: step matrices differ in shape");
    }
    sum += m;
  }
  double s2 = 0.0;
  for (const double s : sigma2) s2 += s;
  const double K = static_cast<double>(su.size());
  Eigen::MatrixXd m = sum / K;
  s2 = sigma2.empty() ? std::numeric_limits<double>::quiet_NaN() : s2 / K;
  if (shifted) m -= s2 * u.matrix();
  return finish_consensus(m, s2);
}

Eigen::VectorXd estimate_spiked_eigenvalues(const Eigen::VectorXd& singular_values,
                                            double /*sigma2_global*/) {
  return singular_values;
}

DistributedEstimate run_distributed_pca(netsim::Session& session, const IterationConfig& cfg) {
  using netsim::MsgType;
  const Index K = session.workers();
  if (K < 1) throw InputError("run_distributed_pca: no workers");
  if (cfg.r < 1) throw InputError("run_distributed_pca: r must be at least 1");
  const bool shifted = cfg.shift == ShiftMode::shifted;
  const bool random_init = cfg.init == InitMode::random;

  session.reset_log();
  netsim::WorkerPlan plan;
  plan.r = cfg.r;
  plan.shifted = shifted;
  plan.inference = cfg.inference_mode;
  plan.send_local_basis = !random_init;
  plan.kind = cfg.estimator;
  session.start(plan);

  DistributedEstimate est;
  Basisd u;
  if (random_init) {
    if (cfg.p < 1) throw InputError("run_distributed_pca: random init needs p");
    u = random_basis(cfg.p, cfg.r, cfg.init_seed);
  } else {
    const std::array<MsgType, 1> want{MsgType::basis_up};
    const auto got = session.gather(1, want);
    std::vector<Basisd> bases;
    bases.reserve(K);
    for (const auto& msg : got[0]) {
      bases.push_back(Basisd::from_orthonormal(msg.to_matrix(), 1e-8));
    }
    const OneRoundResult one = aggregate_one_round(bases);
    if (one.degenerate) {
      est.warnings.push_back("round 1: degenerate aggregation, eigengap " +
                             std::to_string(one.eigengap));
    }
    u = one.basis;
  }
  const Index p = u.rows();
  const std::uint32_t T = resolve_rounds(cfg.policy, K, cfg.local_n, p, cfg.r);
  est.basis_history.push_back(u);

  for (std::uint32_t t = 2; t <= T; ++t) {
    session.broadcast(MsgType::basis_down, t, u.matrix());
    std::vector<MsgType> want{MsgType::step_up};
    if (cfg.inference_mode) want.push_back(MsgType::scalar_up);
    const auto got = session.gather(t, want);

    ConsensusResult c;
    try {
      if (cfg.inference_mode || !shifted) {
        std::vector<Eigen::MatrixXd> su;
        su.reserve(K);
        for (const auto& msg : got[0]) su.push_back(msg.to_matrix());
        std::vector<double> s2;
        if (cfg.inference_mode) {
          for (const auto& msg : got[1]) s2.push_back(msg.payload.at(0));
        }
        c = aggregate_consensus_split(su, s2, u, shifted);
      } else {
        std::vector<worker::StepResult> steps(K);
        for (Index k = 0; k < K; ++k) {
          steps[k].g = got[0][k].to_matrix();
          steps[k].sigma2_local = std::numeric_limits<double>::quiet_NaN();
        }
        c = aggregate_consensus(steps);
      }
    } catch (const RankError& e) {
      throw CollapsedIterateError("round " + std::to_string(t) + ": " + e.what(), t);
    }
    u = c.basis;
    est.basis_history.push_back(u);
    est.sigma2_global_per_round.push_back(c.sigma2_global);
    est.singular_values_per_round.push_back(c.singular_values);
  }
  session.stop(T);

  est.basis = u;
  est.rounds_run = T;
  if (shifted && !est.singular_values_per_round.empty()) {
    est.spiked_eigenvalue_estimates = estimate_spiked_eigenvalues(
        est.singular_values_per_round.back(), est.sigma2_global_per_round.back());
  }
  est.comm_log = session.log();
  for (const auto& w : session.warnings()) est.warnings.push_back(w);
  return est;
}

double bilinear_variance(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Basisd& b,
                         const Eigen::VectorXd& spikes, double sigma2) {
  const Index p = b.rows();
  const Index r = b.cols();
  check_unit(u, p, "u");
  check_unit(v, p, "v");
  if (spikes.size() != r) throw DimensionError("bilinear: one spike per basis column required");
  const Eigen::VectorXd bu = b.matrix().transpose() * u;
  const Eigen::VectorXd bv = b.matrix().transpose() * v;
  // Quadratic forms on I - B B^T.
  const double puu = u.squaredNorm() - bu.squaredNorm();
  const double pvv = v.squaredNorm() - bv.squaredNorm();
  const double puv = u.dot(v) - bu.dot(bv);
  double s_vv = 0.0, s_uu = 0.0, s_uv = 0.0;
  for (Index i = 0; i < r; ++i) {
    const double w = (spikes(i) + sigma2) / (spikes(i) * spikes(i));
    s_vv += w * bv(i) * bv(i);
    s_uu += w * bu(i) * bu(i);
    s_uv += w * bu(i) * bv(i);
  }
  return puu * s_vv + pvv * s_uu + 2.0 * puv * s_uv;
}

double population_bilinear_variance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    const Basisd& truth, const Eigen::VectorXd& spikes) {
  return bilinear_variance(u, v, truth, spikes, 1.0);
}

BilinearResult bilinear_statistic(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                  const DistributedEstimate& est, const Basisd& truth, Index K,
                                  Index n) {
  if (!est.spiked_eigenvalue_estimates || est.sigma2_global_per_round.empty()) {
    throw InputError("bilinear_statistic: estimate carries no consensus round");
  }
  const double sigma2 = est.sigma2_global_per_round.back();
  if (!std::isfinite(sigma2)) {
    throw InputError("bilinear_statistic: shift not available; run with inference mode");
  }
  if (truth.rows() != est.basis.rows() || truth.cols() != est.basis.cols()) {
    throw DimensionError("bilinear_statistic: truth and estimate differ in shape");
  }
  BilinearResult out;
  out.sigma_hat2 = bilinear_variance(u, v, est.basis, *est.spiked_eigenvalue_estimates, sigma2);
  if (!(out.sigma_hat2 > kDegenerateBilinear)) {
    throw DegenerateError("bilinear_statistic: variance estimate " +
                          std::to_string(out.sigma_hat2) + " is not positive");
  }
  const Eigen::MatrixXd& bh = est.basis.matrix();
  const Eigen::MatrixXd& bt = truth.matrix();
  const double form = (bh.transpose() * u).dot(bh.transpose() * v) -
                      (bt.transpose() * u).dot(bt.transpose() * v);
  out.stat = std::sqrt(static_cast<double>(K) * static_cast<double>(n)) * form /
             std::sqrt(out.sigma_hat2);
  return out;
}

}  // namespace frdpca::coordinator
