#include <catch_amalgamated.hpp>
#include <random>

#include "support.hpp"
#include "vpblab/collision.hpp"

using namespace vpblab;

TEST_CASE("collision frequency: isotropy, value at zero, linear growth bounds") {
  const double v1[3] = {1.2, -0.7, 0.4};
  const double r = std::sqrt(1.2 * 1.2 + 0.49 + 0.16);
  const double v2[3] = {r, 0.0, 0.0};  // rotated copy
  CHECK(collision_frequency(v1) == Catch::Approx(collision_frequency(v2)).epsilon(1e-12));

  // oracle: Monte-Carlo quadrature of the defining double integral at v = 0
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double acc = 0.0, acc2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double vs[3] = {gauss(rng), gauss(rng), gauss(rng)};
    const double z = 1.0 - 2.0 * unif(rng), phi = 2.0 * M_PI * unif(rng);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double om[3] = {rho * std::cos(phi), rho * std::sin(phi), z};
    const double sample =
        4.0 * M_PI * std::abs(vs[0] * om[0] + vs[1] * om[1] + vs[2] * om[2]);
    acc += sample;
    acc2 += sample * sample;
  }
  const double mean = acc / n;
  const double se = std::sqrt((acc2 / n - mean * mean) / n);
  const double nu0_value = collision_frequency_radial(0.0);
  CHECK(std::abs(nu0_value - mean) < 3.0 * se);
  CHECK(nu0_value == Catch::Approx(4.0 * std::sqrt(2.0 * M_PI)).epsilon(1e-10));

  // quadrature route against the closed form of E|v - Z| at several radii
  for (const double rr : {0.2, 1.0, 3.5, 8.0}) {
    const double closed =
        2.0 * M_PI *
        (((rr * rr + 1.0) / rr) * std::erf(rr / std::sqrt(2.0)) +
         std::sqrt(2.0 / M_PI) * std::exp(-0.5 * rr * rr));
    CHECK(collision_frequency_radial(rr) == Catch::Approx(closed).epsilon(1e-12));
  }

  // nu0 (1+|v|) <= nu(v) <= nu1 (1+|v|) on the quadrature nodes
  const auto& asmbl = testing_support::assembly6();
  const auto& quad = asmbl.basis.quadrature();
  for (Eigen::Index p = 0; p < quad.nodes.rows(); p += 7) {
    const double rr = quad.nodes.row(p).norm();
    const double nu = collision_frequency_radial(rr);
    CHECK(nu >= asmbl.gap.nu0 * (1.0 + rr) * (1.0 - 1e-12));
    CHECK(nu <= asmbl.gap.nu1 * (1.0 + rr) * (1.0 + 1e-12));
  }
}

TEST_CASE("assembled operators satisfy the structural invariants") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  const double opn = asmbl.diagnostics.op_norm;

  SECTION("null spaces") {
    for (int j = 0; j < 5; ++j) {
      CHECK(asmbl.diagnostics.null_residual_raw[j] <= 1e-4 * opn);
      CHECK((asmbl.L * basis.chi(j)).norm() <= 1e-10 * opn);
    }
    CHECK((asmbl.L1 * basis.chi(0)).norm() <= 1e-10 * opn);
    // K chi_0 = nu chi_0 and K1 chi_0 = nu chi_0
    CHECK((asmbl.K * basis.chi(0) - asmbl.nu_diag * basis.chi(0)).norm() <= 1e-10 * opn);
    CHECK((asmbl.K1 * basis.chi(0) - asmbl.nu_diag * basis.chi(0)).norm() <=
          1e-10 * opn);
  }

  SECTION("symmetry and nonpositivity") {
    CHECK((asmbl.K - asmbl.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((asmbl.K1 - asmbl.K1.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(asmbl.L, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es1(asmbl.L1, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-8);
    CHECK(es1.eigenvalues().maxCoeff() <= 1e-8);
  }

  SECTION("coercivity gap") {
    const GapReport gap = coercivity_gap(asmbl);
    CHECK(gap.mu > 0.0);
    CHECK(gap.nu0 > 0.0);
    CHECK(gap.nu0 <= gap.nu1);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const VelocityFunction f = testing_support::random_function(basis, rng);
      const VelocityFunction p1 = project(basis, f, Projector::P1);
      const double quad_form = std::real(f.dot(asmbl.L.cast<Complex>() * f));
      CHECK(quad_form <= -gap.mu_l * p1.squaredNorm() + 1e-8);
    }
  }
}

TEST_CASE("quadratic form (K f, g) matches an independent Monte-Carlo oracle") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  std::mt19937_64 rng(12345);  // fresh seed, independent of the Sobol stream
  const VelocityFunction f = testing_support::random_smooth(basis, rng, 3);
  const VelocityFunction g = testing_support::random_smooth(basis, rng, 3);
  const double matrix_value = std::real(g.dot(asmbl.K.cast<Complex>() * f));

  // plain Monte-Carlo estimate of the defining gain/loss integral
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int batches = 50, per_batch = 20000;
  std::vector<double> means;
  std::vector<double> hv(basis.dimension()), hvs(basis.dimension()),
      hvp(basis.dimension()), hvps(basis.dimension());
  for (int bi = 0; bi < batches; ++bi) {
    double acc = 0.0;
    for (int i = 0; i < per_batch; ++i) {
      double v[3], vs[3], vp[3], vps[3], om[3];
      for (int d = 0; d < 3; ++d) {
        v[d] = gauss(rng);
        vs[d] = gauss(rng);
      }
      const double z = 1.0 - 2.0 * unif(rng), phi = 2.0 * M_PI * unif(rng);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      om[0] = rho * std::cos(phi);
      om[1] = rho * std::sin(phi);
      om[2] = z;
      const double dp =
          (v[0] - vs[0]) * om[0] + (v[1] - vs[1]) * om[1] + (v[2] - vs[2]) * om[2];
      for (int d = 0; d < 3; ++d) {
        vp[d] = v[d] - dp * om[d];
        vps[d] = vs[d] + dp * om[d];
      }
      basis.evaluate(v, hv.data());
      basis.evaluate(vs, hvs.data());
      basis.evaluate(vp, hvp.data());
      basis.evaluate(vps, hvps.data());
      double fv = 0, gv = 0, fp = 0, fps = 0, fs = 0;
      for (int k = 0; k < basis.dimension(); ++k) {
        fv += std::real(f[k]) * hv[k];
        gv += std::real(g[k]) * hv[k];
        fp += std::real(f[k]) * hvp[k];
        fps += std::real(f[k]) * hvps[k];
        fs += std::real(f[k]) * hvs[k];
      }
      (void)fv;
      acc += 4.0 * M_PI * std::abs(dp) * gv * (fp + fps - fs);
    }
    means.push_back(acc / per_batch);
  }
  double mean = 0.0;
  for (const double m : means) mean += m;
  mean /= batches;
  double var = 0.0;
  for (const double m : means) var += (m - mean) * (m - mean);
  const double se = std::sqrt(var / (batches - 1.0) / batches);
  INFO("matrix " << matrix_value << " oracle " << mean << " +- " << se);
  CHECK(std::abs(matrix_value - mean) < 3.0 * se);
}

TEST_CASE("restricted solves") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  const RealMatrix V1 = detail::axis_multiplication(basis, 0);

  CHECK(solve_restricted(asmbl, WhichOperator::L, basis.chi(0).cast<Complex>())
            .norm() < 1e-12);

  const VelocityFunction rhs = (V1 * basis.chi(4)).cast<Complex>();
  const VelocityFunction x = solve_restricted(asmbl, WhichOperator::L, rhs);
  CHECK(std::real(rhs.dot(x)) < 0.0);  // (L^{-1} P1 (v1 chi4), v1 chi4) < 0

  const VelocityFunction p1rhs = project(basis, rhs, Projector::P1);
  CHECK((asmbl.L.cast<Complex>() * x - p1rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("tiny sample budgets are rejected as invalid assemblies") {
  const BasisSet basis(5);
  CHECK_THROWS(assemble(basis, 40, 1, 1));
}

TEST_CASE("assembly is deterministic and thread-count independent") {
  const BasisSet basis(4);
  const CollisionAssembly a1 = assemble(basis, 1 << 12, 9, 1);
  const CollisionAssembly a2 = assemble(basis, 1 << 12, 9, 2);
  CHECK((a1.L - a2.L).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a1.L1 - a2.L1).cwiseAbs().maxCoeff() == 0.0);
  const CollisionAssembly a3 = assemble(basis, 1 << 12, 10, 2);
  CHECK((a1.L - a3.L).cwiseAbs().maxCoeff() > 0.0);
}
