#include <catch_amalgamated.hpp>
#include <random>

#include "support.hpp"
#include "vpblab/basis.hpp"

using namespace vpblab;

TEST_CASE("basis dimension follows the total-degree count") {
  CHECK(BasisSet(4).dimension() == 35);
  CHECK(BasisSet(10).dimension() == 286);
  CHECK_THROWS_WITH(BasisSet(3), Catch::Matchers::ContainsSubstring("chi_4"));
}

TEST_CASE("gram matrix is the identity under quadrature") {
  const BasisSet basis(6);
  const RealMatrix G = basis.gram();
  const double err =
      (G - RealMatrix::Identity(basis.dimension(), basis.dimension()))
          .cwiseAbs()
          .maxCoeff();
  CHECK(err < 1e-10);
}

TEST_CASE("collision invariants are orthonormal and exactly representable") {
  const BasisSet basis(6);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(basis.chi(i).dot(basis.chi(j)) - (i == j ? 1.0 : 0.0)) < 1e-14);
  CHECK_THROWS_AS(basis.chi(5), std::out_of_range);

  // quadrature-evaluated norm agrees with the coefficient norm
  const auto& quad = basis.quadrature();
  const RealMatrix phi = basis.evaluate_at(quad.nodes);
  const RealVector vals = phi * basis.chi(0);
  const double qnorm = std::sqrt((vals.array().square() * quad.weights.array()).sum());
  CHECK(qnorm == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("energy moment (chi4, |v|^2 sqrt M) = sqrt 6") {
  const BasisSet basis(6);
  // coefficients of |v|^2 sqrt(M): 3 on the constant, sqrt(2) on each he_2
  RealVector v2 = RealVector::Zero(basis.dimension());
  v2[basis.find(0, 0, 0)] = 3.0;
  v2[basis.find(2, 0, 0)] = std::sqrt(2.0);
  v2[basis.find(0, 2, 0)] = std::sqrt(2.0);
  v2[basis.find(0, 0, 2)] = std::sqrt(2.0);
  CHECK(basis.chi(4).dot(v2) == Catch::Approx(std::sqrt(6.0)).epsilon(1e-12));

  // oracle: direct quadrature of (|v|^2 - 3) |v|^2 M / sqrt(6)
  const auto& quad = basis.quadrature();
  double acc = 0.0;
  for (Eigen::Index p = 0; p < quad.nodes.rows(); ++p) {
    const double r2 = quad.nodes.row(p).squaredNorm();
    acc += quad.weights[p] * (r2 - 3.0) * r2 / std::sqrt(6.0);
  }
  CHECK(acc == Catch::Approx(std::sqrt(6.0)).epsilon(1e-12));
}

TEST_CASE("projection algebra") {
  const BasisSet basis(6);
  std::mt19937_64 rng(3);
  const VelocityFunction chi2 = basis.chi(2).cast<Complex>();
  const VelocityFunction chi4 = basis.chi(4).cast<Complex>();
  CHECK((project(basis, chi2, Projector::P0) - chi2).norm() < 1e-14);
  CHECK(project(basis, chi2, Projector::P1).norm() < 1e-14);
  CHECK(project(basis, chi4, Projector::Pd).norm() < 1e-14);

  for (int trial = 0; trial < 20; ++trial) {
    const VelocityFunction f = testing_support::random_function(basis, rng);
    const VelocityFunction p0 = project(basis, f, Projector::P0);
    CHECK((project(basis, p0, Projector::P0) - p0).norm() < 1e-12);
    CHECK((project(basis, p0, Projector::Pd) - project(basis, f, Projector::Pd))
              .norm() < 1e-12);
    CHECK(project(basis, project(basis, f, Projector::Pd), Projector::P1).norm() <
          1e-12);
    CHECK((project(basis, f, Projector::P1) + p0 - f).norm() < 1e-12);
  }
}

TEST_CASE("weighted products and their sandwich bounds") {
  const BasisSet basis(6);
  std::mt19937_64 rng(7);
  CHECK_THROWS_AS(ProductKind::bvpb(0.0), std::invalid_argument);

  const VelocityFunction chi4 = basis.chi(4).cast<Complex>();
  CHECK(std::abs(inner(basis, chi4, chi4, ProductKind::bvpb(1.0)) - 1.0) < 1e-14);

  for (int trial = 0; trial < 100; ++trial) {
    const VelocityFunction f = testing_support::random_function(basis, rng);
    const double plain = f.norm();
    for (const double s : {0.1, 1.0, 10.0}) {
      const double wb = weighted_norm(basis, f, ProductKind::bvpb(s));
      CHECK(wb >= plain * (1.0 - 1e-12));
      CHECK(wb <= plain * std::sqrt(1.0 + 1.0 / (s * s)) * (1.0 + 1e-12));
      const double wm = weighted_norm(basis, f, ProductKind::mvpb(s));
      CHECK(wm >= plain * (1.0 - 1e-12));
      CHECK(wm <= plain * std::sqrt(2.0) * (1.0 + 1e-12));
    }
  }
}
