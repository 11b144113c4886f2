#pragma once

// Dense symmetric linear-algebra primitives with deterministic conventions.
//
// Everything here is templated on the scalar type, header-only, and built on
// Eigen. Two conventions make results reproducible bit-for-bit across
// transports and runs:
//   * every basis column is sign-normalised so that its entry of largest
//     magnitude is non-negative (ties broken by the lowest row index);
//   * clusters of tied eigenvalues are resolved by a canonical basis of the
//     eigenspace (projections of e_1, e_2, ... in row order), independent of
//     the order in which the eigensolver happened to return them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "frdpca/errors.hpp"

namespace frdpca {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

namespace detail {

template <typename Scalar>
constexpr Scalar orthonormality_tolerance() {
  if constexpr (std::is_same_v<Scalar, float>) {
    return Scalar(1e-4);
  } else {
    return Scalar(1e-10);
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Flips columns so the entry of largest magnitude is non-negative; the first such row wins ties.
template <typename Scalar>
void apply_sign_convention(Matrix<Scalar>& q) {
  for (Index j = 0; j < q.cols(); ++j) {
    Index best = 0;
    Scalar best_abs = Scalar(-1);
    for (Index i = 0; i < q.rows(); ++i) {
      const Scalar a = std::abs(q(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (q.rows() > 0 && q(best, j) < Scalar(0)) q.col(j) = -q.col(j);
  }
}

/// Canonical orthonormal basis of span(v): Gram-Schmidt on the projections of e_1, e_2, ... .
template <typename Scalar>
Matrix<Scalar> canonical_span_basis(const Matrix<Scalar>& v) {
  const Index p = v.rows();
  const Index m = v.cols();
  Matrix<Scalar> out(p, m);
  Index found = 0;
  const Scalar accept = std::is_same_v<Scalar, float> ? Scalar(1e-3) : Scalar(1e-6);
  for (Index row = 0; row < p && found < m; ++row) {
    Vector<Scalar> w = v * v.row(row).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index c = 0; c < found; ++c) w -= out.col(c).dot(w) * out.col(c);
    }
    const Scalar nrm = w.norm();
    if (nrm > accept) out.col(found++) = w / nrm;
  }
  if (found < m) return v;  // numerically impossible for an orthonormal v; keep the solver's basis
  return out;
}

}  // namespace detail

/// Symmetric p x p matrix. Construction symmetrises via (A + A^T)/2 and rejects non-finite entries.
template <typename Scalar>
class SymMatrix {
 public:
  using MatrixType = Matrix<Scalar>;

  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected square");
    }
    if (!detail::all_finite(m)) throw InputError("SymMatrix: non-finite entries");
    m_ = (m + m.transpose()) / Scalar(2);
  }

  Index dim() const noexcept { return m_.rows(); }
  const MatrixType& matrix() const noexcept { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }
  Scalar trace() const { return m_.trace(); }

 private:
  MatrixType m_;
};

/// p x r column-orthonormal matrix under the sign convention.
template <typename Scalar>
class Basis {
 public:
  using MatrixType = Matrix<Scalar>;

  Basis() = default;

  /// Adopts `m` after checking ||m^T m - I||_max <= tol, then sign-normalises its columns.
  template <typename Derived>
  static Basis from_orthonormal(const Eigen::MatrixBase<Derived>& m,
                                Scalar tol = detail::orthonormality_tolerance<Scalar>()) {
    if (m.cols() > m.rows() || m.cols() == 0) {
      throw DimensionError("Basis: need 1 <= r <= p, got " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
    }
    if (!detail::all_finite(m)) throw InputError("Basis: non-finite entries");
    MatrixType q = m;
    const Scalar defect = orthonormality_defect(q);
    if (!(defect <= tol)) {
      throw InputError("Basis: columns not orthonormal (defect " + std::to_string(defect) + ")");
    }
    detail::apply_sign_convention(q);
    Basis b;
    b.q_ = std::move(q);
    return b;
  }

  /// max |(m^T m - I)_ij|
  template <typename Derived>
  static Scalar orthonormality_defect(const Eigen::MatrixBase<Derived>& m) {
    const MatrixType g = m.transpose() * m;
    return (g - MatrixType::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }

  Index rows() const noexcept { return q_.rows(); }
  Index cols() const noexcept { return q_.cols(); }
  const MatrixType& matrix() const noexcept { return q_; }
  auto col(Index j) const { return q_.col(j); }

  friend bool operator==(const Basis& a, const Basis& b) {
    return a.q_.rows() == b.q_.rows() && a.q_.cols() == b.q_.cols() && a.q_ == b.q_;
  }

 private:
  MatrixType q_;
};

/// Leading eigenpairs: values non-increasing, basis under the sign convention.
template <typename Scalar>
struct EigPair {
  Vector<Scalar> values;
  Basis<Scalar> basis;
};

using SymMatrixd = SymMatrix<double>;
using Basisd = Basis<double>;
using EigPaird = EigPair<double>;

/// The r algebraically largest eigenpairs of a symmetric matrix (full dense solve).
template <typename Scalar>
EigPair<Scalar> sym_top_r_eig(const SymMatrix<Scalar>& s, Index r) {
  const Index p = s.dim();
  if (r < 1 || r > p) {
    throw DimensionError("sym_top_r_eig: r=" + std::to_string(r) + " outside [1, " +
                         std::to_string(p) + "]");
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(s.matrix());
  if (es.info() != Eigen::Success) throw InputError("sym_top_r_eig: eigensolver did not converge");

  // Descending order.
  const Vector<Scalar> asc = es.eigenvalues();
  Vector<Scalar> vals(p);
  Matrix<Scalar> vecs(p, p);
  for (Index i = 0; i < p; ++i) {
    vals(i) = asc(p - 1 - i);
    vecs.col(i) = es.eigenvectors().col(p - 1 - i);
  }

  // Resolve tied clusters that reach into the leading r.
  const Scalar scale = std::max(Scalar(1), vals.cwiseAbs().maxCoeff());
  const Scalar tie = (std::is_same_v<Scalar, float> ? Scalar(1e-5) : Scalar(1e-10)) * scale;
  Index start = 0;
  while (start < r) {
    Index end = start + 1;
    while (end < p && vals(end - 1) - vals(end) <= tie) ++end;
    if (end - start > 1) {
      const Matrix<Scalar> block = vecs.middleCols(start, end - start);
      vecs.middleCols(start, end - start) = detail::canonical_span_basis<Scalar>(block);
    }
    start = end;
  }

  EigPair<Scalar> out;
  out.values = vals.head(r);
  Matrix<Scalar> top = vecs.leftCols(r);
  detail::apply_sign_convention(top);
  out.basis = Basis<Scalar>::from_orthonormal(top);
  return out;
}

/// Thin-QR orthonormalisation of a p x r matrix. R's diagonal is made non-negative, then the
/// global sign convention is applied. Throws RankError when sigma_min <= 1e-12 sigma_max.
template <typename Derived>
Basis<typename Derived::Scalar> qr_orthonormalize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Index p = m.rows();
  const Index r = m.cols();
  if (r < 1 || r > p) {
    throw DimensionError("qr_orthonormalize: shape " + std::to_string(p) + "x" + std::to_string(r));
  }
  if (!detail::all_finite(m)) throw InputError("qr_orthonormalize: non-finite entries");
  const Matrix<Scalar> dense = m;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(dense);
  const Vector<Scalar>& sv = svd.singularValues();
  const Scalar rank_tol = std::is_same_v<Scalar, float> ? Scalar(1e-6) : Scalar(1e-12);
  if (!(sv(0) > Scalar(0)) || sv(r - 1) <= rank_tol * sv(0)) {
    throw RankError("qr_orthonormalize: rank deficient input (sigma_min/sigma_max = " +
                    std::to_string(sv(0) > 0 ? sv(r - 1) / sv(0) : 0.0) + ")");
  }
  Eigen::HouseholderQR<Matrix<Scalar>> qr(dense);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(p, r);
  const auto& packed = qr.matrixQR();
  for (Index j = 0; j < r; ++j) {
    if (packed(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  }
  return Basis<Scalar>::from_orthonormal(q);
}

/// ||U U^T - V V^T||_F. Equal to sqrt(2 (r - ||U^T V||_F^2)); evaluated as sqrt(2) ||V - U U^T V||_F,
/// which keeps full relative accuracy when the subspaces nearly coincide.
template <typename Scalar>
Scalar projector_distance(const Basis<Scalar>& u, const Basis<Scalar>& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw DimensionError("projector_distance: shapes " + std::to_string(u.rows()) + "x" +
                         std::to_string(u.cols()) + " vs " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()));
  }
  const Matrix<Scalar> cross = u.matrix().transpose() * v.matrix();
  const Matrix<Scalar> resid = v.matrix() - u.matrix() * cross;
  return std::sqrt(Scalar(2)) * resid.norm();
}

/// ||U U^T - V V^T||_F^2.
template <typename Scalar>
Scalar subspace_sq_error(const Basis<Scalar>& u, const Basis<Scalar>& v) {
  const Scalar d = projector_distance(u, v);
  return d * d;
}

/// Singular values of a p x r matrix, non-increasing.
template <typename Derived>
Vector<typename Derived::Scalar> top_r_singular_values(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (!detail::all_finite(m)) throw InputError("top_r_singular_values: non-finite entries");
  const Matrix<Scalar> dense = m;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(dense);
  return svd.singularValues();
}

}  // namespace frdpca
