#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vpblab/cache.hpp"
#include "vpblab/config.hpp"
#include "vpblab/semigroup.hpp"
#include "vpblab/spectral.hpp"

namespace vpblab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace acceptance {

inline std::string fmtg(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

/// Classical fourth-order Runge-Kutta integration of d/dt f = M f; the
/// independent oracle for the eigendecomposition propagator.
inline VelocityFunction rk4_integrate(const Matrix& M, VelocityFunction f,
                                      double t_end, double dt) {
  double t = 0.0;
  while (t < t_end - 1e-12) {
    const double h = std::min(dt, t_end - t);
    const VelocityFunction k1 = M * f;
    const VelocityFunction k2 = M * (f + 0.5 * h * k1);
    const VelocityFunction k3 = M * (f + 0.5 * h * k2);
    const VelocityFunction k4 = M * (f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return f;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i)
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

inline std::vector<double> linear_times(double dt, double t_max) {
  std::vector<double> t;
  for (double x = 0.0; x <= t_max + 1e-9; x += dt) t.push_back(x);
  return t;
}

struct BranchFitSummary {
  double slope_plus = 0.0, slope_minus = 0.0;
  double curv_0 = 0.0, curv_plus = 0.0, curv_minus = 0.0, curv_2 = 0.0;
  double seed_overlap_min = 0.0;
  double biorth_err = 0.0;
  double conj_pair_err = 0.0;
  double degeneracy_err = 0.0;
};

inline BranchFitSummary summarize_branches(const CollisionAssembly& asmbl,
                                           ModeKind kind, double s_min, double r0,
                                           int points, double a = 1.0,
                                           double b = 1.0) {
  auto branches = track_branches(kind, asmbl, log_grid(s_min, r0, points), a, b);
  BranchFitSummary s;
  s.seed_overlap_min = std::numeric_limits<double>::infinity();
  std::map<int, const SpectrumBranch*> by_label;
  for (auto& br : branches) {
    br.fit = fit_expansion(br, r0);
    by_label[br.label] = &br;
    s.seed_overlap_min = std::min(s.seed_overlap_min, br.seed_overlap);
  }
  s.slope_plus = by_label[1]->fit.c_imag;
  s.slope_minus = by_label[-1]->fit.c_imag;
  s.curv_0 = by_label[0]->fit.c_real;
  s.curv_plus = by_label[1]->fit.c_real;
  s.curv_minus = by_label[-1]->fit.c_real;
  s.curv_2 = by_label[2]->fit.c_real;

  const BasisSet& basis = asmbl.basis;
  for (size_t i = 0; i < branches[0].samples.size(); ++i) {
    const double sv = branches[0].samples[i].s;
    const ProductKind prod = mode_product(kind, sv);
    for (int j = 0; j < 5; ++j) {
      for (int k = 0; k < 5; ++k) {
        const Complex g = detail::bilinear(basis, prod, branches[j].samples[i].vector,
                                           branches[k].samples[i].vector);
        s.biorth_err = std::max(s.biorth_err, std::abs(g - (j == k ? 1.0 : 0.0)));
      }
    }
    s.conj_pair_err = std::max(
        s.conj_pair_err, std::abs(std::conj(by_label.at(1)->samples[i].lambda) -
                                  by_label.at(-1)->samples[i].lambda));
    s.degeneracy_err = std::max(s.degeneracy_err,
                                std::abs(by_label.at(2)->samples[i].lambda -
                                         by_label.at(3)->samples[i].lambda));
  }
  return s;
}

struct DecaySummary {
  double macro0_k0 = 0.0, macro4_k0 = 0.0, macro0_k1 = 0.0;
  double micro = 0.0, field = 0.0;
  double two_sided_ratio = 0.0;
  bool bvpb_exponential_preferred = false;
  double bvpb_rate = 0.0;  // positive decay rate
};

inline DecaySummary run_decay(const CollisionAssembly& asmbl, const RunConfig& cfg) {
  const BasisSet& basis = asmbl.basis;
  const RadialGrid grid =
      RadialGrid::geometric(cfg.grid_s_min, cfg.grid_s_max, cfg.grid_points);
  const InitialData data =
      build_initial_gaussian(basis, grid, cfg.d0, cfg.d1, cfg.r_param);
  const auto times = linear_times(cfg.time_step, cfg.time_max);

  const auto trajs_m =
      propagate_family(ModeKind::Bm, asmbl, data, times, 1.0, 1.0, cfg.threads);
  const auto trajs_b =
      propagate_family(ModeKind::B, asmbl, data, times, 1.0, 1.0, cfg.threads);

  auto fitted = [&](const std::vector<ModeTrajectory>& tr, NormQuantity q, int k,
                    ModeKind fam) {
    DecaySeries ser = global_norms(tr, grid, basis, q, k, fam);
    ser.fit = fit_decay(ser, cfg.fit_t_lo, cfg.fit_t_hi);
    return ser;
  };
  DecaySummary out;
  out.macro0_k0 = fitted(trajs_m, NormQuantity::Macro0, 0, ModeKind::Bm).fit.exponent;
  out.macro4_k0 = fitted(trajs_m, NormQuantity::Macro4, 0, ModeKind::Bm).fit.exponent;
  out.macro0_k1 = fitted(trajs_m, NormQuantity::Macro0, 1, ModeKind::Bm).fit.exponent;
  out.micro = fitted(trajs_m, NormQuantity::MicroP1, 0, ModeKind::Bm).fit.exponent;
  out.field = fitted(trajs_m, NormQuantity::Field, 0, ModeKind::Bm).fit.exponent;

  const DecaySeries m0 = global_norms(trajs_m, grid, basis, NormQuantity::Macro0, 0,
                                      ModeKind::Bm);
  auto value_at = [&](double t) {
    for (size_t i = 0; i + 1 < m0.times.size(); ++i)
      if (m0.times[i] <= t && t <= m0.times[i + 1]) {
        const double w = (t - m0.times[i]) / (m0.times[i + 1] - m0.times[i]);
        return (1 - w) * m0.values[i] + w * m0.values[i + 1];
      }
    return m0.values.back();
  };
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const double t : {20.0, 40.0, 80.0}) {
    const double scaled = value_at(t) * std::pow(t, 0.75);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  out.two_sided_ratio = hi / lo;

  const DecaySeries btot = fitted(trajs_b, NormQuantity::Total, 0, ModeKind::B);
  out.bvpb_exponential_preferred =
      btot.fit.selected == DecayModelFit::Model::Exponential &&
      btot.fit.residual_exponential < btot.fit.residual_algebraic;
  out.bvpb_rate = -btot.fit.rate;
  return out;
}

inline std::vector<CriterionResult> run_all(const RunConfig& cfg) {
  std::vector<CriterionResult> results;
  auto record = [&](int id, const std::string& name, bool pass,
                    const std::string& detail) {
    results.push_back({id, name, pass, detail});
  };

  const BasisSet basis(cfg.degree);
  const CollisionAssembly asmbl = assemble_cached(
      basis, cfg.samples, cfg.seed, cfg.threads, cfg.effective_cache_dir());
  const ExpansionCoefficients coeffs = analytic_coefficients(asmbl);

  // 1. structure suite
  {
    const double gram_err =
        (basis.gram() - RealMatrix::Identity(basis.dimension(), basis.dimension()))
            .cwiseAbs()
            .maxCoeff();
    double max_res = asmbl.diagnostics.null_residual_l1_raw;
    for (double r : asmbl.diagnostics.null_residual_raw) max_res = std::max(max_res, r);
    const double rel_res = max_res / asmbl.diagnostics.op_norm;
    const double asym = std::max((asmbl.K - asmbl.K.transpose()).cwiseAbs().maxCoeff(),
                                 (asmbl.K1 - asmbl.K1.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<RealMatrix> esL(asmbl.L, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<RealMatrix> esL1(asmbl.L1, Eigen::EigenvaluesOnly);
    const double top = std::max(esL.eigenvalues().maxCoeff(),
                                esL1.eigenvalues().maxCoeff());
    const bool pass = gram_err <= 1e-10 && rel_res <= 1e-4 && asym <= 1e-12 &&
                      top <= 1e-8 && asmbl.gap.mu > 0.0;
    record(1, "structure suite", pass,
           "gram=" + fmtg(gram_err) + " rel_null_residual=" + fmtg(rel_res) +
               " asym=" + fmtg(asym) + " top_eig=" + fmtg(top) +
               " mu=" + fmtg(asmbl.gap.mu));
  }

  // 2-4. branch expansions, curvatures, eigenfunctions
  const BranchFitSummary bm = summarize_branches(asmbl, ModeKind::Bm, cfg.branch_s_min,
                                                 cfg.branch_r0, cfg.branch_points);
  const BranchFitSummary be = summarize_branches(asmbl, ModeKind::E, cfg.branch_s_min,
                                                 cfg.branch_r0, cfg.branch_points);
  {
    const double target_m = 2.0 * std::sqrt(2.0 / 3.0);
    const double target_e = std::sqrt(5.0 / 3.0);
    bool pass = std::abs(bm.slope_plus - target_m) <= 0.02 * target_m &&
                std::abs(-bm.slope_minus - target_m) <= 0.02 * target_m &&
                std::abs(be.slope_plus - target_e) <= 0.02 * target_e;
    std::string detail = "Bm=" + fmtg(bm.slope_plus) + "/" + fmtg(target_m) +
                         " E=" + fmtg(be.slope_plus) + "/" + fmtg(target_e);
    for (const double bparam : {0.5, 1.0, 2.0}) {
      const BranchFitSummary bg =
          summarize_branches(asmbl, ModeKind::BmGeneral, cfg.branch_s_min,
                             cfg.branch_r0, cfg.branch_points, 1.0, bparam);
      const double tgt = ExpansionCoefficients::sound_speed_general(bparam);
      pass = pass && std::abs(bg.slope_plus - tgt) <= 0.02 * tgt;
      detail += " b=" + fmtg(bparam) + ":" + fmtg(bg.slope_plus) + "/" + fmtg(tgt);
    }
    record(2, "sound speeds", pass, detail);
  }
  {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
    const bool pass = rel(bm.curv_0, coeffs.a_0) <= 0.05 &&
                      rel(bm.curv_plus, coeffs.a_plus1) <= 0.05 &&
                      rel(bm.curv_minus, coeffs.a_plus1) <= 0.05 &&
                      rel(bm.curv_2, coeffs.a_2) <= 0.05 &&
                      std::abs(coeffs.a_2 - coeffs.kappa1) <= 1e-10 &&
                      std::abs(coeffs.a_0 - 0.75 * coeffs.kappa2) <= 1e-10;
    record(3, "curvature coefficients", pass,
           "a0=" + fmtg(bm.curv_0) + "/" + fmtg(coeffs.a_0) +
               " a1=" + fmtg(bm.curv_plus) + "/" + fmtg(coeffs.a_plus1) +
               " a2=" + fmtg(bm.curv_2) + "/" + fmtg(coeffs.a_2));
  }
  {
    const bool pass = bm.biorth_err <= 1e-6 && bm.seed_overlap_min >= 0.999;
    record(4, "eigenfunctions", pass,
           "biorth_err=" + fmtg(bm.biorth_err) +
               " seed_overlap=" + fmtg(bm.seed_overlap_min) +
               " conj_pair=" + fmtg(bm.conj_pair_err) +
               " degeneracy=" + fmtg(bm.degeneracy_err));
  }

  // 5. spectral-gap contrast
  const auto grid_gap = log_grid(cfg.gap_s_min, cfg.gap_s_max, cfg.gap_points);
  const auto gap_b = gap_scan(ModeKind::B, asmbl, grid_gap, 1.0, 1.0, cfg.threads);
  const auto gap_m = gap_scan(ModeKind::Bm, asmbl, grid_gap, 1.0, 1.0, cfg.threads);
  double a1_measured = 0.0;
  {
    double sup_b = -std::numeric_limits<double>::infinity();
    for (const auto& row : gap_b)
      if (!std::isnan(row.max_re_resolved))
        sup_b = std::max(sup_b, row.max_re_resolved);
    a1_measured = -sup_b;
    const double small_s_re = gap_m.front().max_re_resolved;
    const double curv_bound =
        2.0 * std::max({coeffs.a_0, coeffs.a_plus1, coeffs.a_2});
    double sup_tail = -std::numeric_limits<double>::infinity();
    for (const auto& row : gap_m)
      if (row.s >= 0.5 && !std::isnan(row.max_re_resolved))
        sup_tail = std::max(sup_tail, row.max_re_resolved);
    const bool pass = a1_measured > 0.0 && small_s_re < 0.0 &&
                      small_s_re >= -curv_bound * cfg.gap_s_min * cfg.gap_s_min &&
                      sup_tail < 0.0;
    record(5, "spectral-gap contrast", pass,
           "a1=" + fmtg(a1_measured) + " Bm(s=" + fmtg(cfg.gap_s_min) +
               ")=" + fmtg(small_s_re) + " Bm(s>=0.5)max=" + fmtg(sup_tail));
  }

  // 6. dispersion relation
  {
    bool pass = true;
    int worst_winding = 0;
    double min_abs_g = std::numeric_limits<double>::infinity();
    const double re_lo = -coeffs.a0_lemma37 / 4.0;
    for (const double s :
         log_grid(cfg.gap_s_min, cfg.branch_r0, cfg.dispersion_n_s)) {
      const auto scan = dispersion_root_scan(
          asmbl, s, re_lo, cfg.dispersion_re_max, -cfg.dispersion_im_max,
          cfg.dispersion_im_max, cfg.dispersion_n_re, cfg.dispersion_n_im);
      if (scan.total_winding != 0) pass = false;
      worst_winding = std::max(worst_winding, std::abs(scan.total_winding));
      min_abs_g = std::min(min_abs_g, scan.min_abs_g);
    }
    // every resolved eigenvalue of B with a mass component solves lambda = D
    double max_fixed_point_err = 0.0;
    SpectrumOptions opts;
    opts.nu0 = asmbl.gap.nu0;
    const RealVector chi0 = basis.chi(0);
    for (const double s : log_grid(cfg.gap_s_min, cfg.gap_s_max, 12)) {
      const ModeOperator mode = assemble_mode(ModeKind::B, s, asmbl);
      DispersionEvaluator D(asmbl, s);
      for (const auto& p : eigens(mode, basis, opts)) {
        if (!p.resolved || p.lambda.real() <= -asmbl.gap.mu / 2.0) continue;
        const double mass_frac =
            std::abs(chi0.cast<Complex>().dot(p.vector)) / p.vector.norm();
        if (mass_frac < 1e-3) continue;
        max_fixed_point_err =
            std::max(max_fixed_point_err, std::abs(p.lambda - D(p.lambda)));
      }
    }
    pass = pass && max_fixed_point_err <= 1e-6;
    record(6, "dispersion relation", pass,
           "winding=" + std::to_string(worst_winding) + " min|g|=" + fmtg(min_abs_g) +
               " fixed_point_err=" + fmtg(max_fixed_point_err));
  }

  // 7. semigroup properties
  {
    std::mt19937_64 rng(cfg.seed ^ 0x5eedu);
    std::normal_distribution<double> gauss;
    auto random_f = [&] {
      VelocityFunction f(basis.dimension());
      for (int i = 0; i < basis.dimension(); ++i)
        f[i] = Complex(gauss(rng), gauss(rng));
      return f;
    };
    double worst_contraction = 0.0;
    const double s_samples[] = {0.05, 0.3, 1.0, 3.0, 10.0};
    const double t_samples[] = {0.1, 1.0, 10.0};
    int trial = 0;
    for (int i = 0; i < 100; ++i) {
      const double s = s_samples[trial % 5];
      const double t = t_samples[(trial / 5) % 3];
      ++trial;
      for (const ModeKind kind : {ModeKind::B, ModeKind::Bm}) {
        const ModeOperator mode = assemble_mode(kind, s, asmbl);
        ModePropagator prop(mode);
        const VelocityFunction f = random_f();
        const double before = weighted_norm(basis, f, mode.product);
        const double after = weighted_norm(basis, prop.at(t, f), mode.product);
        worst_contraction = std::max(worst_contraction, after / before - 1.0);
      }
    }
    const ModeOperator mode = assemble_mode(ModeKind::Bm, 0.7, asmbl);
    ModePropagator prop(mode);
    const VelocityFunction f = random_f();
    const VelocityFunction once = prop.at(1.9, f);
    const VelocityFunction twice = prop.at(1.2, prop.at(0.7, f));
    const double comp_err = (once - twice).norm() / f.norm();
    const VelocityFunction oracle = rk4_integrate(mode.matrix, f, 1.0, 0.002);
    const double ode_err = (prop.at(1.0, f) - oracle).norm() / oracle.norm();
    const bool pass =
        worst_contraction <= 1e-10 && comp_err <= 1e-8 && ode_err <= 1e-6;
    record(7, "semigroup properties", pass,
           "contraction_excess=" + fmtg(worst_contraction) +
               " composition=" + fmtg(comp_err) + " ode_oracle=" + fmtg(ode_err));
  }

  // 8-9. decay rates and two-sided realization
  {
    const DecaySummary d = run_decay(asmbl, cfg);
    auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
    const bool pass8 =
        in(d.macro0_k0, -0.90, -0.60) && in(d.macro4_k0, -0.90, -0.60) &&
        in(d.macro0_k1, -1.40, -1.10) && in(d.micro, -1.40, -1.10) &&
        in(d.field, -0.90, -0.60) && d.bvpb_exponential_preferred &&
        d.bvpb_rate >= 0.5 * a1_measured;
    record(8, "decay rates", pass8,
           "macro0_k0=" + fmtg(d.macro0_k0) + " macro4_k0=" + fmtg(d.macro4_k0) +
               " macro0_k1=" + fmtg(d.macro0_k1) + " micro=" + fmtg(d.micro) +
               " field=" + fmtg(d.field) +
               " bvpb_exp=" + (d.bvpb_exponential_preferred ? "yes" : "no") +
               " bvpb_rate=" + fmtg(d.bvpb_rate) + " (a1/2=" +
               fmtg(0.5 * a1_measured) + ")");
    record(9, "two-sided lower bound", d.two_sided_ratio <= 3.0,
           "macro0 * t^{3/4} ratio over {20,40,80} = " + fmtg(d.two_sided_ratio));
  }

  // 10. refinement stability between degree 8 and the configured degree:
  // criteria 2-3 coefficients within 3%, plus the gap and resolved-eigenvalue
  // refinement oracles (5% on mu, 1e-3 on branch eigenvalues).
  {
    const BasisSet basis8(8);
    const CollisionAssembly asm8 = assemble_cached(
        basis8, cfg.samples, cfg.seed, cfg.threads, cfg.effective_cache_dir());
    const BranchFitSummary bm8 = summarize_branches(
        asm8, ModeKind::Bm, cfg.branch_s_min, cfg.branch_r0, cfg.branch_points);
    const BranchFitSummary be8 = summarize_branches(
        asm8, ModeKind::E, cfg.branch_s_min, cfg.branch_r0, cfg.branch_points);
    auto drift = [](double x8, double x10) { return std::abs(x8 - x10) / std::abs(x10); };
    const double worst = std::max({drift(bm8.slope_plus, bm.slope_plus),
                                   drift(be8.slope_plus, be.slope_plus),
                                   drift(bm8.curv_0, bm.curv_0),
                                   drift(bm8.curv_plus, bm.curv_plus),
                                   drift(bm8.curv_2, bm.curv_2)});
    const double mu_drift = drift(asm8.gap.mu, asmbl.gap.mu);
    double eig_drift = 0.0;
    for (const double s : {0.05, 0.1, 0.2}) {
      auto br8 = track_branches(ModeKind::Bm, asm8, {s / 2.0, s});
      auto br10 = track_branches(ModeKind::Bm, asmbl, {s / 2.0, s});
      for (int j = 0; j < 5; ++j)
        eig_drift = std::max(eig_drift, std::abs(br8[j].samples.back().lambda -
                                                 br10[j].samples.back().lambda));
    }
    const bool pass = worst <= 0.03 && mu_drift <= 0.05 && eig_drift <= 1e-3;
    record(10, "refinement stability", pass,
           "coefficient drift=" + fmtg(worst) + " mu drift=" + fmtg(mu_drift) +
               " eigenvalue drift=" + fmtg(eig_drift) + " (degree 8 vs " +
               std::to_string(cfg.degree) + ")");
  }

  return results;
}

}  // namespace acceptance
}  // namespace vpblab
