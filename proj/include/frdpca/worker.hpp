#pragma once

// Everything a local machine computes: its summary matrix, its local eigenbasis,
// and the per-round step matrices of the consensus iteration.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <variant>

#include "frdpca/matrixcore.hpp"
#include "frdpca/models.hpp"

namespace frdpca::worker {

enum class SummaryKind : std::uint8_t { covariance = 0, kendall_tau = 1 };

const char* to_string(SummaryKind kind);

/// All n(n-1)/2 unordered pairs.
struct ExactPairs {};
/// `count` unordered pairs drawn uniformly without replacement.
struct SubsampledPairs {
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
};
using PairPolicy = std::variant<ExactPairs, SubsampledPairs>;

/// Local sample size above which the exact Kendall U-statistic is replaced by subsampling.
inline constexpr Index kExactKendallMaxN = 5000;

/// Exact up to kExactKendallMaxN observations, otherwise 50 n random pairs.
PairPolicy default_pair_policy(Index n, std::uint64_t seed = 0);

struct LocalSummary {
  SummaryKind kind = SummaryKind::covariance;
  SymMatrixd matrix;
  Index n_used = 0;             // observations contributing
  std::uint64_t pairs_used = 0; // Kendall only: non-degenerate pairs averaged
};

/// (1/n) sum x_i x_i^T, no centering.
LocalSummary compute_local_covariance(const models::DatasetShard& shard);
LocalSummary compute_local_covariance(const Eigen::Ref<const Eigen::MatrixXd>& rows);

/// Multivariate Kendall's tau: mean of d d^T / |d|^2 over pairwise differences d = x_i - x_j.
/// Pairs with |d| < 1e-12 are skipped and the divisor shrinks accordingly.
LocalSummary compute_local_kendall_tau(const models::DatasetShard& shard,
                                       const PairPolicy& policy = ExactPairs{});
LocalSummary compute_local_kendall_tau(const Eigen::Ref<const Eigen::MatrixXd>& rows,
                                       const PairPolicy& policy = ExactPairs{});

/// Leading r eigenvectors of the summary.
Basisd local_top_r(const LocalSummary& summary, Index r);

struct StepResult {
  Eigen::MatrixXd g;         // S U - sigma2_local U
  double sigma2_local = 0.0; // tr(S U_perp U_perp^T) / (p - r)
};

/// Shifted power step. The shift uses tr(S) - tr(U^T S U), so U_perp is never formed.
StepResult shifted_step(const LocalSummary& summary, const Basisd& u);

/// S U.
Eigen::MatrixXd unshifted_step(const LocalSummary& summary, const Basisd& u);

/// A registered local machine: immutable summary plus a memo of its local eigenbases.
class Worker {
 public:
  Worker(std::uint32_t machine_index, LocalSummary summary);

  std::uint32_t machine_index() const noexcept { return machine_index_; }
  const LocalSummary& summary() const noexcept { return summary_; }
  Index dim() const noexcept { return summary_.matrix.dim(); }

  /// local_top_r, computed once per r. Not thread-safe; one thread drives a worker at a time.
  const Basisd& local_basis(Index r);

 private:
  std::uint32_t machine_index_;
  LocalSummary summary_;
  std::map<Index, Basisd> local_bases_;
};

}  // namespace frdpca::worker
