#include <catch_amalgamated.hpp>
#include <random>

#include "support.hpp"
#include "vpblab/acceptance.hpp"
#include "vpblab/semigroup.hpp"

using namespace vpblab;

TEST_CASE("mode propagation basics") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  std::mt19937_64 rng(31);
  const ModeOperator mode = assemble_mode(ModeKind::B, 0.8, asmbl);
  const VelocityFunction f0 = testing_support::random_function(basis, rng);

  SECTION("identity at t = 0 and monotone time requirement") {
    const ModeTrajectory traj = propagate_mode(mode, f0, {0.0, 0.5, 1.0});
    CHECK((traj.states[0] - f0).norm() == 0.0);
    CHECK_THROWS_AS(propagate_mode(mode, f0, {0.0, 1.0, 0.5}), std::invalid_argument);
  }

  SECTION("contraction in the weighted norm") {
    ModePropagator prop(mode);
    for (const double t : {0.1, 1.0, 10.0}) {
      const double before = weighted_norm(basis, f0, mode.product);
      const double after = weighted_norm(basis, prop.at(t, f0), mode.product);
      CHECK(after <= before * (1.0 + 1e-12));
    }
  }

  SECTION("semigroup composition") {
    ModePropagator prop(mode);
    const VelocityFunction once = prop.at(1.7, f0);
    const VelocityFunction twice = prop.at(0.9, prop.at(0.8, f0));
    CHECK((once - twice).norm() <= 1e-8 * f0.norm());
  }

  SECTION("eigendecomposition path agrees with a Runge-Kutta oracle") {
    ModePropagator prop(mode);
    REQUIRE(prop.diagonalized());
    const VelocityFunction oracle =
        acceptance::rk4_integrate(mode.matrix, f0, 1.0, 0.002);
    CHECK((prop.at(1.0, f0) - oracle).norm() <= 1e-6 * oracle.norm());
  }

  SECTION("expm fallback agrees with the eigendecomposition path") {
    ModePropagator diag(mode);
    ModePropagator expm(mode, /*cond_limit=*/0.0);  // force the fallback
    REQUIRE(diag.diagonalized());
    REQUIRE(!expm.diagonalized());
    CHECK((diag.at(0.7, f0) - expm.at(0.7, f0)).norm() <= 1e-8 * f0.norm());
  }
}

TEST_CASE("gaussian initial data satisfies the decay-theorem hypotheses") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  const RadialGrid grid = RadialGrid::geometric(1e-3, 8.0, 48);
  CHECK_THROWS_AS(build_initial_gaussian(basis, grid, 0.0, 1.0, 0.3),
                  std::invalid_argument);
  const InitialData data = build_initial_gaussian(basis, grid, 1.0, 3.0, 0.3);

  for (size_t i = 0; i < grid.s.size(); ++i)
    for (int j = 1; j <= 3; ++j)
      CHECK(std::abs(basis.chi(j).cast<Complex>().dot(data.profile[i])) < 1e-14);

  // profile values against a numerical Fourier transform of exp(-x^2/2)
  auto transform_oracle = [](double s) {
    // (2 pi)^{-3/2} Int exp(-|x|^2/2) exp(-i x.xi) dx, radial reduction
    const int n = 4000;
    const double dr = 30.0 / n;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double r = (i - 0.5) * dr;
      const double sinc = s < 1e-12 ? 1.0 : std::sin(r * s) / (r * s);
      acc += r * r * std::exp(-0.5 * r * r) * sinc * dr;
    }
    return acc * 4.0 * M_PI / std::pow(2.0 * M_PI, 1.5);
  };
  const double amp = std::exp(0.5 * 0.09);
  for (const double s : {grid.s[0], 1.0}) {
    size_t i = 0;
    while (grid.s[i] < s - 1e-12) ++i;
    const double mass = std::real(basis.chi(0).cast<Complex>().dot(data.profile[i]));
    CHECK(mass == Catch::Approx(amp * transform_oracle(grid.s[i])).epsilon(1e-5));
  }
}

TEST_CASE("global norms: single-mode reduction and Parseval consistency") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;

  SECTION("one-point grid reduces to the weighted mode norm") {
    RadialGrid grid;
    grid.s = {0.5};
    grid.weight = {2.25};
    const ModeOperator mode = assemble_mode(ModeKind::Bm, 0.5, asmbl);
    std::mt19937_64 rng(41);
    const VelocityFunction f = testing_support::random_function(basis, rng);
    std::vector<ModeTrajectory> trajs{propagate_mode(mode, f, {0.0})};
    const DecaySeries total =
        global_norms(trajs, grid, basis, NormQuantity::Total, 0, ModeKind::Bm);
    CHECK(total.values[0] == Catch::Approx(std::sqrt(2.25) * f.norm()).epsilon(1e-12));
  }

  SECTION("zero initial momentum and Parseval at t = 0") {
    const RadialGrid grid = RadialGrid::geometric(1e-3, 8.0, 64);
    const double d0 = 1.0, d1 = 3.0, r_param = 0.3;
    const InitialData data = build_initial_gaussian(basis, grid, d0, d1, r_param);
    std::vector<ModeTrajectory> trajs;
    for (size_t i = 0; i < grid.s.size(); ++i) {
      ModeTrajectory t;
      t.s = grid.s[i];
      t.times = {0.0};
      t.states = {data.profile[i]};
      trajs.push_back(std::move(t));
    }
    for (const auto q :
         {NormQuantity::Macro1, NormQuantity::Macro2, NormQuantity::Macro3}) {
      const DecaySeries m = global_norms(trajs, grid, basis, q, 0, ModeKind::Bm);
      CHECK(m.values[0] < 1e-12);
    }
    const DecaySeries total =
        global_norms(trajs, grid, basis, NormQuantity::Total, 0, ModeKind::Bm);
    const double exact = d0 * std::exp(0.5 * r_param * r_param) *
                         std::sqrt(1.0 + d1 * d1) * std::pow(M_PI, 0.75);
    CHECK(total.values[0] == Catch::Approx(exact).epsilon(1e-2));
  }
}

TEST_CASE("decay-model fitting on synthetic series") {
  DecaySeries ser;
  for (double t = 0.0; t <= 120.0; t += 2.5) ser.times.push_back(t);

  SECTION("algebraic law is recovered") {
    for (const double t : ser.times) ser.values.push_back(2.0 * std::pow(1 + t, -0.75));
    const DecayModelFit fit = fit_decay(ser, 10.0, 100.0);
    CHECK(fit.selected == DecayModelFit::Model::Algebraic);
    CHECK(fit.exponent == Catch::Approx(-0.75).epsilon(0.01));
  }
  SECTION("exponential law is recovered") {
    for (const double t : ser.times) ser.values.push_back(0.3 * std::exp(-0.31 * t));
    const DecayModelFit fit = fit_decay(ser, 10.0, 100.0);
    CHECK(fit.selected == DecayModelFit::Model::Exponential);
    CHECK(fit.rate == Catch::Approx(-0.31).epsilon(0.01));
  }
  SECTION("incoherent data is flagged undetermined") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (size_t i = 0; i < ser.times.size(); ++i) ser.values.push_back(u(rng));
    CHECK(fit_decay(ser, 10.0, 100.0).selected == DecayModelFit::Model::Undetermined);
  }
}

TEST_CASE("acoustic oscillation of the mass moment at the expected frequency") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  const double s = 0.2;
  const ModeOperator mode = assemble_mode(ModeKind::Bm, s, asmbl);
  const VelocityFunction f0 =
      (basis.chi(0) + basis.chi(4)).cast<Complex>() * std::exp(0.5 * 0.09);
  ModePropagator prop(mode);
  std::vector<double> crossings;
  double prev_val = 0.0, prev_t = 0.0;
  for (double t = 0.0; t <= 120.0; t += 0.25) {
    const double val =
        std::real(basis.chi(0).cast<Complex>().dot(prop.at(t, f0)));
    if (t > 0.0 && val * prev_val < 0.0)
      crossings.push_back(prev_t + 0.25 * prev_val / (prev_val - val));
    prev_val = val;
    prev_t = t;
  }
  REQUIRE(crossings.size() >= 4);
  double spacing = 0.0;
  for (size_t i = 1; i < crossings.size(); ++i)
    spacing += crossings[i] - crossings[i - 1];
  spacing /= (crossings.size() - 1.0);
  const double expected = M_PI / (2.0 * std::sqrt(2.0 / 3.0) * s);
  CHECK(spacing == Catch::Approx(expected).epsilon(0.05));
}

TEST_CASE("leading-order macroscopic formulas of the low-frequency semigroup") {
  const auto& asmbl = testing_support::assembly6();
  const BasisSet& basis = asmbl.basis;
  const auto branches = track_branches(ModeKind::Bm, asmbl, {0.025, 0.05});

  SECTION("t = 0 coefficients read directly") {
    const S1Macro m = s1_macro(branches, 0.0, 0.05, 1.0, 0.0, 1.0, 0.3);
    const double sq2 = std::sqrt(2.0), sq3 = std::sqrt(3.0);
    const double expected =
        (sq3 / 4.0) * 2.0 * (sq3 / 2.0 + sq2 / 4.0) + (sq2 / 4.0) * (sq2 / 2.0 - sq3 / 2.0);
    CHECK(std::real(m.mass) == Catch::Approx(expected).margin(1e-12));
    CHECK(std::abs(m.momentum1) < 1e-12);
    CHECK_THROWS_AS(s1_macro(branches, 0.0, 0.5, 1.0, 0.0, 1.0, 0.3),
                    std::invalid_argument);
  }

  SECTION("flipping the energy moment flips its response") {
    const S1Macro plus = s1_macro(branches, 2.0, 0.05, 0.0, 0.0, 1.0, 0.3);
    const S1Macro minus = s1_macro(branches, 2.0, 0.05, 0.0, 0.0, -1.0, 0.3);
    CHECK(std::abs(plus.energy + minus.energy) < 1e-12);
  }

  SECTION("agreement with the full propagator up to the stated slack") {
    const double s = 0.05, t = 20.0;
    const ModeOperator mode = assemble_mode(ModeKind::Bm, s, asmbl);
    const VelocityFunction f0 = (basis.chi(0) + basis.chi(4)).cast<Complex>();
    ModePropagator prop(mode);
    const VelocityFunction ft = prop.at(t, f0);
    const S1Macro m = s1_macro(branches, t, s, 1.0, 0.0, 1.0, 0.3);
    const Complex full_mass = basis.chi(0).cast<Complex>().dot(ft);
    const Complex full_energy = basis.chi(4).cast<Complex>().dot(ft);
    const double slack = 0.5 * s * f0.norm() + 2.0 * std::exp(-0.5 * asmbl.gap.mu * t);
    CHECK(std::abs(m.mass - full_mass) <= slack);
    CHECK(std::abs(m.energy - full_energy) <= slack);
  }
}
