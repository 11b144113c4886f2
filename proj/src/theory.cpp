#include "frdpca/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "frdpca/errors.hpp"
#include "frdpca/rng.hpp"

namespace frdpca::theory {

namespace {

void check_spikes(std::span<const double> spikes) {
  if (spikes.empty()) throw InputError("theory: no spikes");
  for (const double l : spikes) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("theory: spikes must be positive");
  }
}

void check_sizes(Index p, Index n, Index K) {
  if (p < 1 || n < 1 || K < 1) throw InputError("theory: p, n and K must be positive");
}

double pooled_sum(Index p, Index n, std::span<const double> spikes) {
  const double pd = static_cast<double>(p);
  double s = 0.0;
  for (const double l : spikes) s += 2.0 * (pd / l + pd / (l * l));
  return s / static_cast<double>(n);
}

double oneround_sum(Index p, Index n, std::span<const double> spikes) {
  const double pd = static_cast<double>(p);
  const double nd = static_cast<double>(n);
  double s = 0.0;
  for (const double l : spikes) {
    const double denom = nd - pd / (l * l);
    if (!(denom > 0.0)) {
      throw RegimeError("one-round limit undefined: spike " + std::to_string(l) +
                        " is at or below the local threshold sqrt(p/n) = " +
                        std::to_string(std::sqrt(pd / nd)));
    }
    s += 2.0 * (pd / l + pd / (l * l)) / denom;
  }
  return s;
}

}  // namespace

double pooled_mse_limit(Index p, Index n, Index K, std::span<const double> spikes) {
  check_sizes(p, n, K);
  check_spikes(spikes);
  return pooled_sum(p, n, spikes) / static_cast<double>(K);
}

double oneround_mse_limit(Index p, Index n, Index K, std::span<const double> spikes) {
  check_sizes(p, n, K);
  check_spikes(spikes);
  return oneround_sum(p, n, spikes) / static_cast<double>(K);
}

double variance_ratio_limit(Index p, Index n, std::span<const double> spikes) {
  check_sizes(p, n, 1);
  check_spikes(spikes);
  return oneround_sum(p, n, spikes) / pooled_sum(p, n, spikes);
}

Thresholds phase_thresholds(double c, Index K) {
  if (!(c >= 0.0) || K < 1) throw InputError("phase_thresholds: need c >= 0 and K >= 1");
  return {std::sqrt(c), std::sqrt(c / static_cast<double>(K))};
}

double eigenvalue_limit(double l, double c) {
  if (!(c >= 0.0) || !(l >= 0.0)) throw InputError("eigenvalue_limit: need l, c >= 0");
  const double rc = std::sqrt(c);
  if (l > rc) return 1.0 + l + c * (1.0 + l) / l;
  return (1.0 + rc) * (1.0 + rc);
}

double alignment_limit(double l, double c) {
  if (!(c >= 0.0) || !(l >= 0.0)) throw InputError("alignment_limit: need l, c >= 0");
  if (!(l > std::sqrt(c))) return 0.0;
  return (1.0 - c / (l * l)) / (1.0 + c / l);
}

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::below_pool_threshold: return "below_pool_threshold";
    case RegimeLabel::phase_gap: return "phase_gap";
    case RegimeLabel::above_local_threshold: return "above_local_threshold";
    case RegimeLabel::strong_local: return "strong_local";
  }
  return "unknown";
}

RegimeLabel classify_regime(double l_r, double c, Index K, double strong) {
  const Thresholds th = phase_thresholds(c, K);
  if (!(l_r > th.pooled)) return RegimeLabel::below_pool_threshold;
  if (!(l_r > th.local)) return RegimeLabel::phase_gap;
  if (l_r >= strong * th.local) return RegimeLabel::strong_local;
  return RegimeLabel::above_local_threshold;
}

double average_retention(const Basisd& b, const Eigen::Ref<const Eigen::MatrixXd>& test) {
  if (test.cols() != b.rows()) {
    throw DimensionError("average_retention: test rows have " + std::to_string(test.cols()) +
                         " columns, basis has " + std::to_string(b.rows()) + " rows");
  }
  const double total = test.squaredNorm();
  if (!(total > 0.0)) throw DegenerateError("average_retention: test set is all zero");
  const double kept = (test * b.matrix()).squaredNorm();
  return std::clamp(kept / total, 0.0, 1.0);
}

double variance_ratio_empirical(std::span<const double> distributed,
                                std::span<const double> pooled) {
  if (distributed.empty() || pooled.empty()) {
    throw InputError("variance_ratio_empirical: empty error list");
  }
  double a = 0.0, b = 0.0;
  for (const double x : distributed) a += x;
  for (const double x : pooled) b += x;
  a /= static_cast<double>(distributed.size());
  b /= static_cast<double>(pooled.size());
  if (!(b > 0.0)) throw DegenerateError("variance_ratio_empirical: pooled mean error is zero");
  return a / b;
}

namespace {

// Calls f(ratios) for each draw, ratios(i) = lambda_i Y_i^2 / sum lambda Y^2.
template <typename F>
void for_each_draw(std::span<const double> lambda, Index draws, std::uint64_t seed, F&& f) {
  if (lambda.empty()) throw InputError("kendall_population_eigenvalue: no eigenvalues");
  for (const double l : lambda) {
    if (!(l > 0.0)) throw InputError("kendall_population_eigenvalue: eigenvalues must be positive");
  }
  if (draws < 2) throw InputError("kendall_population_eigenvalue: need at least 2 draws");
  Engine engine(mix_seed(seed, 0x6b656e64ull));
  std::normal_distribution<double> normal;
  const Index p = static_cast<Index>(lambda.size());
  Eigen::VectorXd w(p);
  for (Index d = 0; d < draws; ++d) {
    for (Index i = 0; i < p; ++i) {
      const double y = normal(engine);
      w(i) = lambda[static_cast<std::size_t>(i)] * y * y;
    }
    w /= w.sum();
    f(w);
  }
}

}  // namespace

MonteCarloValue kendall_population_eigenvalue(std::span<const double> scatter_eigenvalues,
                                              Index j, Index draws, std::uint64_t seed) {
  if (j < 0 || j >= static_cast<Index>(scatter_eigenvalues.size())) {
    throw DimensionError("kendall_population_eigenvalue: index out of range");
  }
  double mean = 0.0, m2 = 0.0;
  Index count = 0;
  for_each_draw(scatter_eigenvalues, draws, seed, [&](const Eigen::VectorXd& w) {
    ++count;
    const double delta = w(j) - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (w(j) - mean);
  });
  const double var = m2 / static_cast<double>(count - 1);
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

Eigen::VectorXd kendall_population_eigenvalues(std::span<const double> scatter_eigenvalues,
                                               Index draws, std::uint64_t seed) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Index>(scatter_eigenvalues.size()));
  for_each_draw(scatter_eigenvalues, draws, seed, [&](const Eigen::VectorXd& w) { sum += w; });
  return sum / static_cast<double>(draws);
}

}  // namespace frdpca::theory
