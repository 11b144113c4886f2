#pragma once

// Synthetic data: spiked populations and seeded shard generators.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "frdpca/matrixcore.hpp"
#include "frdpca/rng.hpp"

namespace frdpca::models {

/// All noise eigenvalues equal to `level`.
struct UniformNoise {
  double level = 1.0;
};

/// Noise eigenvalues spaced linearly from `hi` down to `lo`.
struct LinearDecayNoise {
  double hi = 1.2;
  double lo = 0.8;
};

using NoiseProfile = std::variant<UniformNoise, LinearDecayNoise>;

struct CanonicalBasis {};
struct RandomOrthonormalBasis {
  std::uint64_t seed = 0;
};

using BasisMode = std::variant<CanonicalBasis, RandomOrthonormalBasis>;

/// Sigma = sum_i l_i u_i u_i^T + noise part. Signal eigenvalue i equals l_i + 1.
struct SpikedModelSpec {
  Index p = 0;
  std::vector<double> spikes;  // strictly decreasing, positive
  NoiseProfile noise = UniformNoise{};
  BasisMode basis_mode = RandomOrthonormalBasis{};

  Index r() const { return static_cast<Index>(spikes.size()); }
  /// Throws InputError / DimensionError on an invalid spec.
  void validate() const;
};

struct Population {
  SymMatrixd sigma;
  Basisd u;                    // leading r eigenvectors
  double noise_sigma2 = 1.0;   // mean of the noise eigenvalues
  Eigen::VectorXd eigenvalues; // signal eigenvalues first, then the noise profile
  Eigen::MatrixXd loading;     // A = Q diag(sqrt(eigenvalues)), Sigma = A A^T
  Eigen::MatrixXd rotation;    // Q, full orthonormal eigenbasis; first r columns equal u
};

Population make_population(const SpikedModelSpec& spec);

/// Haar-distributed p x p orthogonal matrix.
Eigen::MatrixXd random_orthogonal(Index p, std::uint64_t seed);

/// One machine's block of observations, rows are observations.
struct DatasetShard {
  std::uint32_t machine_index = 0;
  Eigen::MatrixXd data;  // n x p
  std::uint64_t seed_used = 0;

  Index n() const { return data.rows(); }
  Index p() const { return data.cols(); }
};

struct Gaussian {};
/// Skew-normal coordinates standardised to zero mean and unit variance.
struct SkewGaussian {
  double alpha_signal = 5.0;
  double alpha_noise = 2.0;
};
struct StudentT {
  double nu = 3.0;
};
/// Multivariate t whose Gaussian part carries standardised skew-normal coordinates.
struct SkewT {
  double nu = 3.0;
  double alpha_signal = 0.0;
  double alpha_noise = 0.0;
};

using InnovationSpec = std::variant<Gaussian, SkewGaussian, StudentT, SkewT>;

/// Skewness gamma_1 of a skew-normal with shape alpha (location/scale free).
double skew_normal_skewness(double alpha);

/// Draws a standardised skew-normal variate; alpha == 0 consumes one normal draw.
double draw_standardized_skew_normal(Engine& engine, std::normal_distribution<double>& normal,
                                     double alpha);

/// Rows ~ N(0, Sigma). Shard k uses the stream mix_seed(master_seed, k).
std::vector<DatasetShard> sample_gaussian_spiked(const Population& pop, Index n, Index K,
                                                 std::uint64_t master_seed);
std::vector<DatasetShard> sample_gaussian_spiked(const SpikedModelSpec& spec, Index n, Index K,
                                                 std::uint64_t master_seed);

/// x = A z with i.i.d. (skew-)Gaussian standardised z. Signal coordinates z_1..z_r use alpha_signal.
std::vector<DatasetShard> sample_general(const Population& pop, const InnovationSpec& innovation,
                                         Index n, Index K, std::uint64_t master_seed);

enum class RadiusMode { chi_square, unit };

/// x = A g / sqrt(w / nu), g standard (or skewed standardised) normal, w ~ chi^2_nu.
/// With RadiusMode::unit the radius draw is replaced by 1 while the g stream is unchanged.
std::vector<DatasetShard> sample_elliptical(const Population& pop, double nu, double alpha_signal,
                                            double alpha_noise, Index n, Index K,
                                            std::uint64_t master_seed,
                                            RadiusMode radius = RadiusMode::chi_square);

/// Dispatches on the innovation family.
std::vector<DatasetShard> sample(const Population& pop, const InnovationSpec& innovation, Index n,
                                 Index K, std::uint64_t master_seed);

}  // namespace frdpca::models
