#pragma once

// Centralised estimators on the pooled sample, used as the efficiency target.

#include <Eigen/Dense>

#include <cstdint>
#include <span>

#include "frdpca/matrixcore.hpp"
#include "frdpca/models.hpp"
#include "frdpca/worker.hpp"

namespace frdpca::oracle {

struct PooledEstimate {
  Basisd basis;
  Eigen::VectorXd eigenvalues;  // leading r, non-increasing
  worker::SummaryKind kind = worker::SummaryKind::covariance;
};

/// Pooled sample size above which the pooled Kendall matrix is built from 50 N random pairs.
inline constexpr Index kExactPooledKendallMaxN = 10000;

worker::PairPolicy default_pooled_pair_policy(Index N, std::uint64_t seed = 0);

/// Second-moment matrix of all rows, accumulated shard by shard in ascending k.
SymMatrixd pooled_covariance(std::span<const models::DatasetShard> shards);

PooledEstimate pooled_covariance_pca(std::span<const models::DatasetShard> shards, Index r);

/// Pooled PCA from local covariance summaries, weighted by their sample sizes.
PooledEstimate pooled_covariance_pca(std::span<const worker::LocalSummary> summaries, Index r);

/// Kendall's tau over the union sample (rows stacked in ascending k), then eigen-decomposition.
PooledEstimate pooled_kendall_pca(std::span<const models::DatasetShard> shards, Index r,
                                  const worker::PairPolicy& policy);

}  // namespace frdpca::oracle
