#pragma once

// Central-machine side of the few-round estimator: projector averaging for round 1,
// consensus rounds that orthogonalise the averaged step matrices, and the driver that
// runs them over a netsim::Session.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "frdpca/matrixcore.hpp"
#include "frdpca/netsim/comm_log.hpp"
#include "frdpca/netsim/session.hpp"
#include "frdpca/worker.hpp"

namespace frdpca::coordinator {

enum class ShiftMode : std::uint8_t { shifted, unshifted };
enum class InitMode : std::uint8_t { one_round, random };

const char* to_string(ShiftMode mode);
const char* to_string(InitMode mode);

struct FixedRounds {
  std::uint32_t T = 1;
};
/// T = max(3, ceil((2 alpha + 1) / (2 alpha) + eps)).
struct BiasSchedule {
  double alpha = 1.0;
  double eps = 0.5;
};
/// T = ceil(log(K n / (p r))^(1 + eps)), at least 1.
struct LogSchedule {
  double eps = 0.5;
};
using RoundPolicy = std::variant<FixedRounds, BiasSchedule, LogSchedule>;

std::uint32_t resolve_rounds(const RoundPolicy& policy, Index K, Index n, Index p, Index r);

struct IterationConfig {
  Index r = 1;
  RoundPolicy policy = FixedRounds{1};
  ShiftMode shift = ShiftMode::shifted;
  worker::SummaryKind estimator = worker::SummaryKind::covariance;
  bool inference_mode = false;
  InitMode init = InitMode::one_round;
  std::uint64_t init_seed = 0;
  Index p = 0;        // required for InitMode::random; otherwise taken from round 1
  Index local_n = 0;  // required for LogSchedule
};

/// Eigengap at position r below which the round-1 aggregate is flagged as degenerate.
inline constexpr double kDegenerateGap = 1e-12;

struct OneRoundResult {
  Basisd basis;
  double eigengap = 0.0;  // lambda_r - lambda_{r+1} of the mean projector (lambda_r if r == p)
  bool degenerate = false;
};

/// Top-r eigenbasis of (1/K) sum_k U_k U_k^T, accumulated in ascending k.
OneRoundResult aggregate_one_round(std::span<const Basisd> bases);

struct ConsensusResult {
  Basisd basis;
  double sigma2_global = 0.0;
  Eigen::VectorXd singular_values;
};

/// Rank-deficient consensus matrix; the iteration cannot continue from this iterate.
class CollapsedIterateError : public RankError {
 public:
  CollapsedIterateError(const std::string& what, std::uint32_t round)
      : RankError(what), round_(round) {}
  std::uint32_t round() const noexcept { return round_; }

 private:
  std::uint32_t round_;
};

/// M = (1/K) sum_k G_k; returns qr(M), the mean local shift and the singular values of M.
ConsensusResult aggregate_consensus(std::span<const worker::StepResult> steps);

/// Same reduction from separately shipped S_k U and sigma2_k:
/// M = (1/K) sum_k S_k U - sigma2 U, with sigma2 the mean shift when `shifted`.
ConsensusResult aggregate_consensus_split(std::span<const Eigen::MatrixXd> su,
                                          std::span<const double> sigma2, const Basisd& u,
                                          bool shifted);

/// Spike estimates from the shifted consensus singular values. The shift already removes the
/// noise level, so the values are returned unchanged; add sigma2 for the raw spectrum.
Eigen::VectorXd estimate_spiked_eigenvalues(const Eigen::VectorXd& singular_values,
                                            double sigma2_global);

struct DistributedEstimate {
  Basisd basis;
  std::uint32_t rounds_run = 0;
  /// Shifted mode with at least one consensus round only.
  std::optional<Eigen::VectorXd> spiked_eigenvalue_estimates;
  /// One entry per consensus round: mean local shift at the round's input basis. NaN unless the
  /// shifts were shipped (inference mode).
  std::vector<double> sigma2_global_per_round;
  std::vector<Basisd> basis_history;                     // U^(1), ..., U^(T)
  std::vector<Eigen::VectorXd> singular_values_per_round; // one per consensus round
  netsim::CommLog comm_log;
  std::vector<std::string> warnings;
};

DistributedEstimate run_distributed_pca(netsim::Session& session, const IterationConfig& cfg);

struct BilinearResult {
  double stat = 0.0;
  double sigma_hat2 = 0.0;
};

/// Variance estimate of <u, (U_hat U_hat^T - U U^T) v> from the estimate's final basis, spike
/// estimates and last shift, and the standardised statistic sqrt(K n) <u, ... v> / sigma_hat.
/// Throws DegenerateError when sigma_hat2 <= 1e-14.
BilinearResult bilinear_statistic(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                  const DistributedEstimate& est, const Basisd& truth, Index K,
                                  Index n);

/// Plug-in form of the estimator: basis `b`, weights (l_i + sigma2) / l_i^2.
double bilinear_variance(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Basisd& b,
                         const Eigen::VectorXd& spikes, double sigma2);

/// Population variance: weights (l_i + 1) / l_i^2 at the true basis.
double population_bilinear_variance(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    const Basisd& truth, const Eigen::VectorXd& spikes);

}  // namespace frdpca::coordinator
