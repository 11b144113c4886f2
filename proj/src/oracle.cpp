#include "frdpca/oracle.hpp"

#include <string>

#include "frdpca/errors.hpp"

namespace frdpca::oracle {

namespace {

Index common_dim(std::span<const models::DatasetShard> shards) {
  if (shards.empty()) throw InputError("pooled estimate: no shards");
  const Index p = shards[0].p();
  for (const auto& s : shards) {
    if (s.p() != p) throw DimensionError("pooled estimate: shards differ in dimension");
  }
  return p;
}

PooledEstimate from_matrix(const SymMatrixd& m, Index r, worker::SummaryKind kind) {
  EigPaird eig = sym_top_r_eig(m, r);
  return PooledEstimate{std::move(eig.basis), std::move(eig.values), kind};
}

}  // namespace

worker::PairPolicy default_pooled_pair_policy(Index N, std::uint64_t seed) {
  if (N <= kExactPooledKendallMaxN) return worker::ExactPairs{};
  return worker::SubsampledPairs{50 * static_cast<std::uint64_t>(N), seed};
}

SymMatrixd pooled_covariance(std::span<const models::DatasetShard> shards) {
  const Index p = common_dim(shards);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Index N = 0;
  for (const auto& s : shards) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(s.data.transpose());
    N += s.n();
  }
  if (N == 0) throw InputError("pooled estimate: no observations");
  Eigen::MatrixXd full = gram.selfadjointView<Eigen::Lower>();
  return SymMatrixd(full / static_cast<double>(N));
}

PooledEstimate pooled_covariance_pca(std::span<const models::DatasetShard> shards, Index r) {
  return from_matrix(pooled_covariance(shards), r, worker::SummaryKind::covariance);
}

PooledEstimate pooled_covariance_pca(std::span<const worker::LocalSummary> summaries, Index r) {
  if (summaries.empty()) throw InputError("pooled estimate: no summaries");
  const Index p = summaries[0].matrix.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  Index N = 0;
  for (const auto& s : summaries) {
    if (s.kind != worker::SummaryKind::covariance) {
      throw InputError("pooled estimate: summaries must be covariances");
    }
    if (s.matrix.dim() != p) throw DimensionError("pooled estimate: summaries differ in dimension");
    sum += static_cast<double>(s.n_used) * s.matrix.matrix();
    N += s.n_used;
  }
  return from_matrix(SymMatrixd(sum / static_cast<double>(N)), r,
                     worker::SummaryKind::covariance);
}

PooledEstimate pooled_kendall_pca(std::span<const models::DatasetShard> shards, Index r,
                                  const worker::PairPolicy& policy) {
  const Index p = common_dim(shards);
  Index N = 0;
  for (const auto& s : shards) N += s.n();
  Eigen::MatrixXd all(N, p);
  Index at = 0;
  for (const auto& s : shards) {
    all.middleRows(at, s.n()) = s.data;
    at += s.n();
  }
  const worker::LocalSummary tau = worker::compute_local_kendall_tau(all, policy);
  return from_matrix(tau.matrix, r, worker::SummaryKind::kendall_tau);
}

}  // namespace frdpca::oracle
