#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>

#include "vpblab/acceptance.hpp"
#include "vpblab/cache.hpp"
#include "vpblab/io.hpp"

namespace vpblab {
namespace commands {

inline ModeKind parse_family(const std::string& name) {
  if (name == "E") return ModeKind::E;
  if (name == "B") return ModeKind::B;
  if (name == "Bm") return ModeKind::Bm;
  if (name == "Bm_general") return ModeKind::BmGeneral;
  throw std::invalid_argument("unknown family: " + name +
                              " (expected E | B | Bm | Bm_general)");
}

class Timer {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return dt;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline CollisionAssembly shared_assembly(const RunConfig& cfg, RunManifest& manifest) {
  Timer timer;
  const BasisSet basis(cfg.degree);
  CollisionAssembly asmbl = assemble_cached(basis, cfg.samples, cfg.seed, cfg.threads,
                                            cfg.effective_cache_dir());
  manifest.stage_seconds("assembly", timer.lap());
  manifest.diagnostics(asmbl.diagnostics);
  return asmbl;
}

/// coeffs: analytic expansion curvatures, transport coefficients and the
/// definitional identities, as one JSON report.
inline int cmd_coeffs(const RunConfig& cfg) {
  RunManifest manifest(cfg, "coeffs");
  const CollisionAssembly asmbl = shared_assembly(cfg, manifest);
  Timer timer;
  const ExpansionCoefficients c = analytic_coefficients(asmbl);
  manifest.stage_seconds("coefficients", timer.lap());

  Json j;
  j["manifest"] = manifest.name();
  j["a1"] = c.a_plus1;
  j["a0"] = c.a_0;
  j["a2"] = c.a_2;
  j["kappa1"] = c.kappa1;
  j["kappa2"] = c.kappa2;
  j["kappa3"] = c.kappa3;
  j["kappa5"] = c.kappa5;
  j["kappa6"] = c.kappa6;
  j["mu"] = c.mu;
  j["mu_l"] = asmbl.gap.mu_l;
  j["mu_l1"] = asmbl.gap.mu_l1;
  j["nu0"] = asmbl.gap.nu0;
  j["nu1"] = asmbl.gap.nu1;
  j["a0_lemma37"] = c.a0_lemma37;
  j["a2_minus_kappa1"] = c.a_2 - c.kappa1;
  j["a0_minus_0.75kappa2"] = c.a_0 - 0.75 * c.kappa2;
  j["kappa5_minus_kappa1"] = c.kappa5 - c.kappa1;
  j["kappa6_minus_kappa2"] = c.kappa6 - c.kappa2;
  std::filesystem::create_directories(cfg.out_dir);
  write_json(cfg.out_dir + "/coeffs.json", j);
  manifest.write();
  std::cout << "coeffs: mu=" << c.mu << " kappa=(" << c.kappa1 << ", " << c.kappa2
            << ", " << c.kappa3 << ") a=(" << c.a_plus1 << ", " << c.a_0 << ", "
            << c.a_2 << ")\n";
  return 0;
}

/// branches: tracked low-frequency branches for the configured family,
/// with fitted slopes/curvatures against their analytic values.
inline int cmd_branches(const RunConfig& cfg) {
  RunManifest manifest(cfg, "branches");
  const ModeKind kind = parse_family(cfg.family);
  if (kind == ModeKind::B)
    throw std::invalid_argument("cmd_branches: family B has no low-frequency branches");
  const CollisionAssembly asmbl = shared_assembly(cfg, manifest);
  const ExpansionCoefficients c = analytic_coefficients(asmbl);
  Timer timer;
  auto branches =
      track_branches(kind, asmbl, acceptance::log_grid(cfg.branch_s_min, cfg.branch_r0,
                                                       cfg.branch_points),
                     cfg.a, cfg.b);
  for (auto& br : branches) br.fit = fit_expansion(br, cfg.branch_r0);
  manifest.stage_seconds("tracking", timer.lap());

  std::filesystem::create_directories(cfg.out_dir);
  CsvWriter csv(cfg.out_dir + "/branches.csv", manifest.name(),
                {"s", "re", "im", "branch", "overlap"});
  for (const auto& br : branches)
    for (const auto& smp : br.samples)
      csv.row({fmt(smp.s), fmt(smp.lambda.real()), fmt(smp.lambda.imag()),
               std::to_string(br.label), fmt(smp.overlap_prev)});

  const double bparam = kind == ModeKind::BmGeneral ? cfg.b : 1.0;
  const double slope_target = kind == ModeKind::E
                                  ? std::sqrt(5.0 / 3.0)
                                  : ExpansionCoefficients::sound_speed_general(bparam);
  Json j;
  j["manifest"] = manifest.name();
  j["family"] = cfg.family;
  j["slope_target"] = slope_target;
  Json fits = Json::array();
  bool pass = true;
  for (const auto& br : branches) {
    Json f;
    f["branch"] = br.label;
    f["c_imag"] = br.fit.c_imag;
    f["c_real"] = br.fit.c_real;
    f["residual_imag"] = br.fit.residual_imag;
    f["residual_real"] = br.fit.residual_real;
    f["half_window_drift"] = br.fit.half_window_drift;
    f["seed_overlap"] = br.seed_overlap;
    if (kind != ModeKind::E) {
      double target = 0.0;
      if (br.label == 0) target = c.a_0_general(bparam);
      else if (br.label == 2 || br.label == 3) target = c.a_2;
      else target = c.a_plus1_general(bparam);
      f["curvature_target"] = target;
      f["curvature_rel_err"] = std::abs(br.fit.c_real - target) / target;
    }
    if (br.label == 1) {
      f["slope_rel_err"] = std::abs(br.fit.c_imag - slope_target) / slope_target;
      pass = pass && std::abs(br.fit.c_imag - slope_target) <= 0.02 * slope_target;
    }
    fits.push_back(f);
  }
  j["fits"] = fits;
  j["pass"] = pass;
  write_json(cfg.out_dir + "/branches_summary.json", j);
  manifest.write();
  std::cout << "branches: family " << cfg.family << ", acoustic slope "
            << branches[2].fit.c_imag << " (target " << slope_target << "), "
            << (pass ? "pass" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

/// gap: scan of max resolved Re lambda over the frequency grid.
inline int cmd_gap(const RunConfig& cfg) {
  RunManifest manifest(cfg, "gap");
  const ModeKind kind = parse_family(cfg.family);
  const CollisionAssembly asmbl = shared_assembly(cfg, manifest);
  Timer timer;
  const auto rows = gap_scan(
      kind, asmbl, acceptance::log_grid(cfg.gap_s_min, cfg.gap_s_max, cfg.gap_points),
      cfg.a, cfg.b, cfg.threads);
  manifest.stage_seconds("scan", timer.lap());

  std::filesystem::create_directories(cfg.out_dir);
  CsvWriter csv(cfg.out_dir + "/gap.csv", manifest.name(),
                {"s", "max_re_resolved", "resolved_count"});
  double sup = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    csv.row({fmt(row.s), fmt(row.max_re_resolved), std::to_string(row.resolved_count)});
    if (!std::isnan(row.max_re_resolved)) sup = std::max(sup, row.max_re_resolved);
  }
  Json j;
  j["manifest"] = manifest.name();
  j["family"] = cfg.family;
  j["sup_max_re"] = sup;
  const bool pass = kind == ModeKind::B ? sup < 0.0 : true;
  if (kind == ModeKind::B) j["a1_estimate"] = -sup;
  j["pass"] = pass;
  write_json(cfg.out_dir + "/gap_summary.json", j);
  manifest.write();
  std::cout << "gap: family " << cfg.family << ", sup max Re = " << sup
            << (kind == ModeKind::B ? (pass ? " (a1 > 0, pass)" : " (FAIL)") : "")
            << "\n";
  return pass ? 0 : 1;
}

/// dispersion: winding scan for roots of lambda = D(lambda, s) and the
/// fixed-point consistency of resolved eigenvalues.
inline int cmd_dispersion(const RunConfig& cfg) {
  RunManifest manifest(cfg, "dispersion");
  const CollisionAssembly asmbl = shared_assembly(cfg, manifest);
  const ExpansionCoefficients c = analytic_coefficients(asmbl);
  Timer timer;

  std::filesystem::create_directories(cfg.out_dir);
  CsvWriter csv(cfg.out_dir + "/dispersion.csv", manifest.name(),
                {"s", "winding", "min_abs_g"});
  const double re_lo = -c.a0_lemma37 / 4.0;
  bool root_free = true;
  for (const double s :
       acceptance::log_grid(cfg.gap_s_min, cfg.branch_r0, cfg.dispersion_n_s)) {
    const auto scan = dispersion_root_scan(asmbl, s, re_lo, cfg.dispersion_re_max,
                                           -cfg.dispersion_im_max, cfg.dispersion_im_max,
                                           cfg.dispersion_n_re, cfg.dispersion_n_im);
    csv.row({fmt(s), std::to_string(scan.total_winding), fmt(scan.min_abs_g)});
    root_free = root_free && scan.total_winding == 0;
  }
  manifest.stage_seconds("scan", timer.lap());

  Json j;
  j["manifest"] = manifest.name();
  j["region_re"] = {re_lo, cfg.dispersion_re_max};
  j["region_im"] = {-cfg.dispersion_im_max, cfg.dispersion_im_max};
  j["root_free"] = root_free;
  j["pass"] = root_free;
  write_json(cfg.out_dir + "/dispersion_summary.json", j);
  manifest.write();
  std::cout << "dispersion: root-free region check "
            << (root_free ? "pass" : "FAIL") << "\n";
  return root_free ? 0 : 1;
}

/// decay: global-norm time series for the configured family with both decay
/// models fitted per quantity.
inline int cmd_decay(const RunConfig& cfg) {
  RunManifest manifest(cfg, "decay");
  const ModeKind kind = parse_family(cfg.family);
  const CollisionAssembly asmbl = shared_assembly(cfg, manifest);
  Timer timer;
  const RadialGrid grid =
      RadialGrid::geometric(cfg.grid_s_min, cfg.grid_s_max, cfg.grid_points);
  const InitialData data =
      build_initial_gaussian(asmbl.basis, grid, cfg.d0, cfg.d1, cfg.r_param);
  const auto times = acceptance::linear_times(cfg.time_step, cfg.time_max);
  const auto trajs = propagate_family(kind, asmbl, data, times, cfg.a, cfg.b,
                                      cfg.threads);
  manifest.stage_seconds("propagation", timer.lap());

  const NormQuantity quantities[] = {NormQuantity::Macro0, NormQuantity::Macro1,
                                     NormQuantity::Macro4, NormQuantity::MicroP1,
                                     NormQuantity::Field,  NormQuantity::Total};
  std::vector<DecaySeries> series;
  for (const auto q : quantities)
    series.push_back(global_norms(trajs, grid, asmbl.basis, q, 0, kind));
  series.push_back(global_norms(trajs, grid, asmbl.basis, NormQuantity::Macro0, 1, kind));

  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::string> header{"t"};
  for (const auto& s : series)
    header.push_back(std::string(norm_quantity_name(s.quantity)) +
                     (s.derivative_order ? "_k" + std::to_string(s.derivative_order)
                                         : ""));
  CsvWriter csv(cfg.out_dir + "/decay.csv", manifest.name(), header);
  for (size_t ti = 0; ti < times.size(); ++ti) {
    std::vector<std::string> row{fmt(times[ti])};
    for (const auto& s : series) row.push_back(fmt(s.values[ti]));
    csv.row(row);
  }

  Json j;
  j["manifest"] = manifest.name();
  j["family"] = cfg.family;
  j["fit_window"] = {cfg.fit_t_lo, cfg.fit_t_hi};
  Json fits = Json::array();
  for (auto& s : series) {
    s.fit = fit_decay(s, cfg.fit_t_lo, cfg.fit_t_hi);
    Json f;
    f["quantity"] = norm_quantity_name(s.quantity);
    f["derivative_order"] = s.derivative_order;
    f["model"] = s.fit.selected == DecayModelFit::Model::Algebraic ? "algebraic"
                 : s.fit.selected == DecayModelFit::Model::Exponential
                     ? "exponential"
                     : "undetermined";
    f["exponent"] = s.fit.exponent;
    f["rate"] = s.fit.rate;
    f["residual_algebraic"] = s.fit.residual_algebraic;
    f["residual_exponential"] = s.fit.residual_exponential;
    fits.push_back(f);
    std::cout << "decay " << cfg.family << " " << norm_quantity_name(s.quantity)
              << (s.derivative_order ? " k=1" : "") << ": "
              << f["model"].get<std::string>() << " exponent=" << s.fit.exponent
              << " rate=" << s.fit.rate << "\n";
  }
  j["fits"] = fits;
  write_json(cfg.out_dir + "/decay_summary.json", j);
  manifest.write();
  return 0;
}

/// validate: the full acceptance suite; nonzero exit on any failure.
inline int cmd_validate(const RunConfig& cfg) {
  RunManifest manifest(cfg, "validate");
  const auto results = acceptance::run_all(cfg);
  Json j;
  j["manifest"] = manifest.name();
  Json arr = Json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << "[criterion " << r.id << "] " << (r.pass ? "PASS" : "FAIL") << " "
              << r.name << " (" << r.detail << ")\n";
    Json e;
    e["id"] = r.id;
    e["name"] = r.name;
    e["pass"] = r.pass;
    e["detail"] = r.detail;
    arr.push_back(e);
    all_pass = all_pass && r.pass;
  }
  j["criteria"] = arr;
  j["all_pass"] = all_pass;
  std::filesystem::create_directories(cfg.out_dir);
  write_json(cfg.out_dir + "/validate.json", j);
  manifest.write();
  std::cout << (all_pass ? "validate: all criteria pass" : "validate: FAILURES present")
            << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace commands
}  // namespace vpblab
