#include "frdpca/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "frdpca/errors.hpp"
#include "frdpca/rng.hpp"

namespace frdpca::models {

namespace {

// Stream offset separating radius draws from the Gaussian part of an elliptical shard.
constexpr std::uint64_t kRadiusStream = 0x7261646975737374ull;

Eigen::VectorXd noise_eigenvalues(const NoiseProfile& profile, Index count) {
  Eigen::VectorXd out(count);
  if (const auto* u = std::get_if<UniformNoise>(&profile)) {
    out.setConstant(u->level);
    return out;
  }
  const auto& d = std::get<LinearDecayNoise>(profile);
  if (count == 1) {
    out(0) = 0.5 * (d.hi + d.lo);
    return out;
  }
  for (Index j = 0; j < count; ++j) {
    out(j) = d.hi - (d.hi - d.lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  return out;
}

DatasetShard make_shard(std::uint32_t k, Eigen::MatrixXd z, const Eigen::MatrixXd& loading,
                        std::uint64_t seed) {
  DatasetShard shard;
  shard.machine_index = k;
  shard.seed_used = seed;
  shard.data.noalias() = z * loading.transpose();
  return shard;
}

void check_sizes(Index n, Index K) {
  if (n < 1 || K < 1) {
    throw InputError("sampler: need n >= 1 and K >= 1, got n=" + std::to_string(n) +
                     " K=" + std::to_string(K));
  }
}

}  // namespace

void SpikedModelSpec::validate() const {
  if (p < 1) throw DimensionError("SpikedModelSpec: p must be positive");
  if (spikes.empty() || r() > p) {
    throw DimensionError("SpikedModelSpec: need 1 <= r <= p, got r=" + std::to_string(r()));
  }
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    if (!(spikes[i] > 0.0) || !std::isfinite(spikes[i])) {
      throw InputError("SpikedModelSpec: spikes must be positive and finite");
    }
    if (i > 0 && !(spikes[i] < spikes[i - 1])) {
      throw InputError("SpikedModelSpec: spikes must be strictly decreasing");
    }
  }
  if (const auto* u = std::get_if<UniformNoise>(&noise)) {
    if (!(u->level > 0.0)) throw InputError("SpikedModelSpec: noise level must be positive");
  } else {
    const auto& d = std::get<LinearDecayNoise>(noise);
    if (!(d.hi >= d.lo && d.lo > 0.0)) {
      throw InputError("SpikedModelSpec: linear decay needs hi >= lo > 0");
    }
  }
}

Eigen::MatrixXd random_orthogonal(Index p, std::uint64_t seed) {
  Engine engine(mix_seed(seed, 0x6261736973ull));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) g(i, j) = normal(engine);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  for (Index j = 0; j < p; ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Population make_population(const SpikedModelSpec& spec) {
  spec.validate();
  const Index p = spec.p;
  const Index r = spec.r();

  Eigen::VectorXd eig(p);
  for (Index i = 0; i < r; ++i) eig(i) = spec.spikes[static_cast<std::size_t>(i)] + 1.0;
  if (p > r) eig.tail(p - r) = noise_eigenvalues(spec.noise, p - r);

  Eigen::MatrixXd q;
  if (std::holds_alternative<CanonicalBasis>(spec.basis_mode)) {
    q = Eigen::MatrixXd::Identity(p, p);
  } else {
    q = random_orthogonal(p, std::get<RandomOrthonormalBasis>(spec.basis_mode).seed);
    detail::apply_sign_convention(q);
  }

  Population pop;
  pop.eigenvalues = eig;
  pop.rotation = q;
  pop.loading = q * eig.cwiseSqrt().asDiagonal();
  pop.sigma = SymMatrixd(q * eig.asDiagonal() * q.transpose());
  pop.u = Basisd::from_orthonormal(q.leftCols(r));
  pop.noise_sigma2 = p > r ? eig.tail(p - r).mean() : 0.0;
  return pop;
}

double skew_normal_skewness(double alpha) {
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  const double m = delta * std::sqrt(2.0 / std::numbers::pi);
  const double var = 1.0 - m * m;
  return 0.5 * (4.0 - std::numbers::pi) * m * m * m / std::pow(var, 1.5);
}

double draw_standardized_skew_normal(Engine& engine, std::normal_distribution<double>& normal,
                                     double alpha) {
  if (alpha == 0.0) return normal(engine);
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  const double u0 = normal(engine);
  const double u1 = normal(engine);
  const double z = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
  const double mean = delta * std::sqrt(2.0 / std::numbers::pi);
  const double sd = std::sqrt(1.0 - 2.0 * delta * delta / std::numbers::pi);
  return (z - mean) / sd;
}

std::vector<DatasetShard> sample_gaussian_spiked(const Population& pop, Index n, Index K,
                                                 std::uint64_t master_seed) {
  return sample_general(pop, Gaussian{}, n, K, master_seed);
}

std::vector<DatasetShard> sample_gaussian_spiked(const SpikedModelSpec& spec, Index n, Index K,
                                                 std::uint64_t master_seed) {
  return sample_gaussian_spiked(make_population(spec), n, K, master_seed);
}

std::vector<DatasetShard> sample_general(const Population& pop, const InnovationSpec& innovation,
                                         Index n, Index K, std::uint64_t master_seed) {
  check_sizes(n, K);
  double alpha_signal = 0.0;
  double alpha_noise = 0.0;
  if (const auto* s = std::get_if<SkewGaussian>(&innovation)) {
    alpha_signal = s->alpha_signal;
    alpha_noise = s->alpha_noise;
  } else if (!std::holds_alternative<Gaussian>(innovation)) {
    throw InputError("sample_general: t families are generated by sample_elliptical");
  }
  const Index p = pop.loading.rows();
  const Index r = pop.u.cols();

  std::vector<DatasetShard> shards;
  shards.reserve(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) {
    const std::uint64_t seed = mix_seed(master_seed, static_cast<std::uint64_t>(k));
    Engine engine(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(n, p);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) {
        z(i, j) = draw_standardized_skew_normal(engine, normal, j < r ? alpha_signal : alpha_noise);
      }
    }
    shards.push_back(make_shard(static_cast<std::uint32_t>(k), std::move(z), pop.loading, seed));
  }
  return shards;
}

std::vector<DatasetShard> sample_elliptical(const Population& pop, double nu, double alpha_signal,
                                            double alpha_noise, Index n, Index K,
                                            std::uint64_t master_seed, RadiusMode radius) {
  check_sizes(n, K);
  if (!(nu > 0.0)) throw InputError("sample_elliptical: nu must be positive");
  const Index p = pop.loading.rows();
  const Index r = pop.u.cols();

  std::vector<DatasetShard> shards;
  shards.reserve(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) {
    const std::uint64_t seed = mix_seed(master_seed, static_cast<std::uint64_t>(k));
    Engine engine(seed);
    Engine radius_engine(mix_seed(seed, kRadiusStream));
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(nu);
    Eigen::MatrixXd z(n, p);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) {
        z(i, j) = draw_standardized_skew_normal(engine, normal, j < r ? alpha_signal : alpha_noise);
      }
      const double w = chi2(radius_engine);
      if (radius == RadiusMode::chi_square) z.row(i) /= std::sqrt(w / nu);
    }
    shards.push_back(make_shard(static_cast<std::uint32_t>(k), std::move(z), pop.loading, seed));
  }
  return shards;
}

std::vector<DatasetShard> sample(const Population& pop, const InnovationSpec& innovation, Index n,
                                 Index K, std::uint64_t master_seed) {
  if (const auto* t = std::get_if<StudentT>(&innovation)) {
    return sample_elliptical(pop, t->nu, 0.0, 0.0, n, K, master_seed);
  }
  if (const auto* t = std::get_if<SkewT>(&innovation)) {
    return sample_elliptical(pop, t->nu, t->alpha_signal, t->alpha_noise, n, K, master_seed);
  }
  return sample_general(pop, innovation, n, K, master_seed);
}

}  // namespace frdpca::models
