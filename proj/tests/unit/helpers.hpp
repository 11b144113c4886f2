#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "frdpca/matrixcore.hpp"
#include "frdpca/rng.hpp"

namespace testing {

using frdpca::Basisd;
using frdpca::Index;

inline Eigen::MatrixXd gaussian(Index rows, Index cols, frdpca::Engine& eng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = z(eng);
  }
  return m;
}

inline Basisd random_basis(Index p, Index r, frdpca::Engine& eng) {
  return frdpca::qr_orthonormalize(gaussian(p, r, eng));
}

inline Eigen::VectorXd random_unit(Index p, frdpca::Engine& eng) {
  Eigen::VectorXd v = gaussian(p, 1, eng);
  return v / v.norm();
}

inline Index uniform_index(Index lo, Index hi, frdpca::Engine& eng) {
  return std::uniform_int_distribution<Index>(lo, hi)(eng);
}

/// Direct ||U U^T - V V^T||_F.
inline double direct_distance(const Basisd& u, const Basisd& v) {
  return (u.matrix() * u.matrix().transpose() - v.matrix() * v.matrix().transpose()).norm();
}

}  // namespace testing
