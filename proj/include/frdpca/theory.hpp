#pragma once

// Closed-form spiked-model limits and the experiment metrics built on them.

#include <Eigen/Dense>

#include <cstdint>
#include <span>

#include "frdpca/matrixcore.hpp"

namespace frdpca::theory {

/// sum_i 2 (p / l_i + p / l_i^2) / (K n)
double pooled_mse_limit(Index p, Index n, Index K, std::span<const double> spikes);

/// sum_i 2 (p / l_i + p / l_i^2) / (K (n - p / l_i^2)); RegimeError unless n > p / l_i^2 for all i.
double oneround_mse_limit(Index p, Index n, Index K, std::span<const double> spikes);

/// oneround_mse_limit / pooled_mse_limit (K cancels).
double variance_ratio_limit(Index p, Index n, std::span<const double> spikes);

struct Thresholds {
  double local = 0.0;   // sqrt(c)
  double pooled = 0.0;  // sqrt(c / K)
};
Thresholds phase_thresholds(double c, Index K);

/// 1 + l + c (1 + l) / l above sqrt(c), (1 + sqrt(c))^2 at or below.
double eigenvalue_limit(double l, double c);

/// (1 - c / l^2) / (1 + c / l) above sqrt(c), 0 at or below.
double alignment_limit(double l, double c);

enum class RegimeLabel : std::uint8_t {
  below_pool_threshold,
  phase_gap,
  above_local_threshold,
  strong_local,
};
const char* to_string(RegimeLabel label);

/// Classifies the weakest spike l_r against sqrt(c / K), sqrt(c) and strong * sqrt(c).
RegimeLabel classify_regime(double l_r, double c, Index K, double strong = 10.0);

/// sum ||B B^T x||^2 / sum ||x||^2 over the rows of `test`. DegenerateError if every row is zero.
double average_retention(const Basisd& b, const Eigen::Ref<const Eigen::MatrixXd>& test);

/// mean(distributed) / mean(pooled).
double variance_ratio_empirical(std::span<const double> distributed, std::span<const double> pooled);

struct MonteCarloValue {
  double mean = 0.0;
  double se = 0.0;
};

/// E[lambda_j Y_j^2 / sum_i lambda_i Y_i^2] for Y ~ N(0, I), estimated from `draws` samples.
/// `j` is zero-based.
MonteCarloValue kendall_population_eigenvalue(std::span<const double> scatter_eigenvalues,
                                              Index j, Index draws, std::uint64_t seed);

/// All p values from one shared set of draws.
Eigen::VectorXd kendall_population_eigenvalues(std::span<const double> scatter_eigenvalues,
                                               Index draws, std::uint64_t seed);

}  // namespace frdpca::theory
