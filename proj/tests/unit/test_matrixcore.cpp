#include <doctest.h>

#include <cmath>

#include "frdpca/errors.hpp"
#include "frdpca/matrixcore.hpp"
#include "helpers.hpp"

using namespace frdpca;

TEST_SUITE("matrixcore") {

TEST_CASE("SymMatrix symmetrises and validates") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 4, 3;
  const SymMatrixd s(a);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(s.trace() == 4.0);
  CHECK_THROWS_AS(SymMatrixd(Eigen::MatrixXd(2, 3)), DimensionError);
  a(0, 0) = std::nan("");
  CHECK_THROWS_AS(SymMatrixd{a}, InputError);
}

TEST_CASE("Basis rejects bad shapes and non-orthonormal columns") {
  CHECK_THROWS_AS(Basisd::from_orthonormal(Eigen::MatrixXd::Identity(2, 3)), DimensionError);
  Eigen::MatrixXd m(2, 1);
  m << 1, 1;
  CHECK_THROWS_AS(Basisd::from_orthonormal(m), InputError);
}

TEST_CASE("sign convention makes the largest entry non-negative, lowest row on ties") {
  const double x = 4.0 / std::sqrt(41.0);
  Eigen::MatrixXd m(3, 2);
  m << -0.6, -x, 0.0, x, -0.8, 0.75 * x;
  const Basisd b = Basisd::from_orthonormal(m, 1e-12);
  CHECK(b.matrix()(2, 0) == doctest::Approx(0.8));
  CHECK(b.matrix()(0, 0) == doctest::Approx(0.6));
  // Tie between rows 0 and 1: row 0 decides.
  CHECK(b.matrix()(0, 1) > 0.0);
  CHECK(b.matrix()(1, 1) < 0.0);
}

TEST_CASE("sym_top_r_eig on the identity returns e1") {
  const EigPaird e = sym_top_r_eig(SymMatrixd(Eigen::MatrixXd::Identity(3, 3)), 1);
  CHECK(e.values(0) == doctest::Approx(1.0));
  CHECK(e.basis.col(0).isApprox(Eigen::Vector3d(1, 0, 0)));
}

TEST_CASE("sym_top_r_eig on a diagonal matrix") {
  const EigPaird e = sym_top_r_eig(SymMatrixd(Eigen::Vector3d(3, 2, 1).asDiagonal().toDenseMatrix()), 2);
  CHECK(e.values(0) == doctest::Approx(3.0));
  CHECK(e.values(1) == doctest::Approx(2.0));
  CHECK(e.basis.col(0).isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(e.basis.col(1).isApprox(Eigen::Vector3d(0, 1, 0)));
}

TEST_CASE("sym_top_r_eig on a 2x2 with closed form") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const EigPaird e = sym_top_r_eig(SymMatrixd(a), 1);
  CHECK(e.values(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e.basis.col(0)(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(e.basis.col(0)(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("sym_top_r_eig errors") {
  const SymMatrixd s(Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_AS(sym_top_r_eig(s, 4), DimensionError);
  CHECK_THROWS_AS(sym_top_r_eig(s, 0), DimensionError);
}

TEST_CASE("tied eigenvalues resolve to the same basis whatever the input rotation") {
  Engine eng(11);
  const Eigen::MatrixXd q1 = testing::random_basis(5, 5, eng).matrix();
  Eigen::VectorXd d(5);
  d << 4, 4, 4, 1, 0.5;
  const Eigen::MatrixXd s = q1 * d.asDiagonal() * q1.transpose();
  // Same matrix rebuilt from a rotated eigenbasis of the tied block.
  Eigen::MatrixXd q2 = q1;
  const Eigen::MatrixXd g = testing::random_basis(3, 3, eng).matrix();
  q2.leftCols(3) = q1.leftCols(3) * g;
  const Eigen::MatrixXd s2 = q2 * d.asDiagonal() * q2.transpose();
  const EigPaird a = sym_top_r_eig(SymMatrixd(s), 3);
  const EigPaird b = sym_top_r_eig(SymMatrixd(s2), 3);
  CHECK((a.basis.matrix() - b.basis.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("qr_orthonormalize examples") {
  Engine eng(3);
  const Basisd b = testing::random_basis(6, 2, eng);
  CHECK((qr_orthonormalize(b.matrix()).matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-13);

  Eigen::MatrixXd m(3, 2);
  m << 2, 0, 0, 0, 0, 3;
  const Basisd q = qr_orthonormalize(m);
  CHECK(q.col(0).isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(q.col(1).isApprox(Eigen::Vector3d(0, 0, 1)));

  Eigen::MatrixXd v(2, 1);
  v << 3, 4;
  const Basisd n = qr_orthonormalize(v);
  CHECK(n.col(0)(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n.col(0)(1) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("qr_orthonormalize rejects rank-deficient and non-finite input") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 1, 2, 1, 2;
  CHECK_THROWS_AS(qr_orthonormalize(m), RankError);
  CHECK_THROWS_AS(qr_orthonormalize(Eigen::MatrixXd::Zero(3, 1)), RankError);
  m(0, 0) = INFINITY;
  CHECK_THROWS_AS(qr_orthonormalize(m), InputError);
}

TEST_CASE("projector_distance examples") {
  Engine eng(5);
  const Basisd u = testing::random_basis(7, 3, eng);
  CHECK(projector_distance(u, u) < 1e-14);
  const Basisd e1 = Basisd::from_orthonormal(Eigen::Vector2d(1, 0));
  const Basisd e2 = Basisd::from_orthonormal(Eigen::Vector2d(0, 1));
  CHECK(projector_distance(e1, e2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const Basisd w = testing::random_basis(7, 2, eng);
  CHECK_THROWS_AS(projector_distance(u, w), DimensionError);
}

TEST_CASE("top_r_singular_values examples") {
  Engine eng(6);
  const Basisd b = testing::random_basis(8, 3, eng);
  CHECK((top_r_singular_values(b.matrix()).array() - 1.0).abs().maxCoeff() < 1e-12);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 2);
  m(0, 0) = 2;
  m(1, 1) = 5;
  const Eigen::VectorXd s = top_r_singular_values(m);
  CHECK(s(0) == doctest::Approx(5));
  CHECK(s(1) == doctest::Approx(2));
  const Eigen::VectorXd u = testing::random_unit(5, eng);
  CHECK(top_r_singular_values(Eigen::MatrixXd(2.5 * u))(0) == doctest::Approx(2.5));
}

TEST_CASE("property: projector distance identities on random pairs") {
  Engine eng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Index p = testing::uniform_index(2, 40, eng);
    const Index r = testing::uniform_index(1, p, eng);
    const Basisd u = testing::random_basis(p, r, eng);
    const Basisd v = testing::random_basis(p, r, eng);
    const double d = projector_distance(u, v);
    const double cross = (u.matrix().transpose() * v.matrix()).squaredNorm();
    CHECK(std::abs(d * d / 2.0 + cross - static_cast<double>(r)) <= 1e-9);
    CHECK(std::abs(d - testing::direct_distance(u, v)) <= 1e-10);
    // Right rotation invariance.
    const Eigen::MatrixXd g = testing::random_basis(r, r, eng).matrix();
    const Basisd ug = Basisd::from_orthonormal(u.matrix() * g, 1e-9);
    CHECK(std::abs(projector_distance(ug, v) - d) <= 1e-10);
  }
}

TEST_CASE("property: every returned basis is orthonormal") {
  Engine eng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = testing::uniform_index(1, 30, eng);
    const Index r = testing::uniform_index(1, p, eng);
    const Eigen::MatrixXd g = testing::gaussian(p, p, eng);
    const EigPaird e = sym_top_r_eig(SymMatrixd(g + g.transpose()), r);
    CHECK(Basisd::orthonormality_defect(e.basis.matrix()) <= 1e-10);
    for (Index i = 1; i < r; ++i) CHECK(e.values(i) <= e.values(i - 1));
    const Basisd q = qr_orthonormalize(testing::gaussian(p, r, eng));
    CHECK(Basisd::orthonormality_defect(q.matrix()) <= 1e-10);
  }
}

TEST_CASE("property: eigen-decomposition recovers planted spectra") {
  Engine eng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = testing::uniform_index(2, 40, eng);
    const Index r = testing::uniform_index(1, p, eng);
    const Eigen::MatrixXd q = testing::random_basis(p, p, eng).matrix();
    Eigen::VectorXd lam(p);
    for (Index i = 0; i < p; ++i) lam(i) = static_cast<double>(p - i) + 0.5;
    const EigPaird e = sym_top_r_eig(SymMatrixd(q * lam.asDiagonal() * q.transpose()), r);
    CHECK((e.values - lam.head(r)).cwiseAbs().maxCoeff() <= 1e-9);
    const Basisd truth = Basisd::from_orthonormal(q.leftCols(r), 1e-9);
    CHECK(projector_distance(truth, e.basis) <= 1e-8);
  }
}

TEST_CASE("property: QR span is invariant to right multiplication") {
  Engine eng(104);
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = testing::uniform_index(2, 30, eng);
    const Index r = testing::uniform_index(1, p, eng);
    const Eigen::MatrixXd m = testing::gaussian(p, r, eng);
    Eigen::MatrixXd g = testing::gaussian(r, r, eng);
    g += 3.0 * Eigen::MatrixXd::Identity(r, r);  // keep it well conditioned
    CHECK(projector_distance(qr_orthonormalize(m), qr_orthonormalize(Eigen::MatrixXd(m * g))) <= 1e-9);
  }
}

TEST_CASE("float instantiation") {
  Eigen::MatrixXf a(2, 2);
  a << 2, 1, 1, 2;
  const EigPair<float> e = sym_top_r_eig(SymMatrix<float>(a), 1);
  CHECK(e.values(0) == doctest::Approx(3.0f).epsilon(1e-5));
  const Basis<float> q = qr_orthonormalize(Eigen::MatrixXf(a));
  CHECK(Basis<float>::orthonormality_defect(q.matrix()) < 1e-5f);
}

}  // TEST_SUITE
