#include <CLI11.hpp>
#include <iostream>

#include "vpblab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "vpblab: spectra, dispersion relations and decay rates of the linearized "
      "bipolar / modified Vlasov-Poisson-Boltzmann mode operators (hard spheres)"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::string config_path;
  vpblab::RunConfig cfg;

  // flag values override the config file, which overrides defaults
  std::optional<std::string> out_dir, family;
  std::optional<double> a, b;
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> degree, threads;

  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--family", family, "operator family: E | B | Bm | Bm_general");
  app.add_option("--a", a, "Bm_general field coefficient a");
  app.add_option("--b", b, "Bm_general field coefficient b");
  app.add_option("--seed", seed, "assembly seed");
  app.add_option("--samples", samples, "collision assembly sample budget");
  app.add_option("--degree", degree, "velocity basis total-degree cutoff");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* c_coeffs = app.add_subcommand("coeffs", "transport and expansion coefficients");
  auto* c_branches = app.add_subcommand("branches", "track low-frequency eigenvalue branches");
  auto* c_gap = app.add_subcommand("gap", "spectral-gap scan over frequency");
  auto* c_dispersion = app.add_subcommand("dispersion", "root-free scan of the dispersion relation");
  auto* c_decay = app.add_subcommand("decay", "semigroup decay-rate measurement");
  auto* c_validate = app.add_subcommand("validate", "run the full acceptance suite");
  for (auto* sc : {c_coeffs, c_branches, c_gap, c_dispersion, c_decay, c_validate})
    sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) vpblab::load_config_file(cfg, config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (family) cfg.family = *family;
    if (a) cfg.a = *a;
    if (b) cfg.b = *b;
    if (samples) cfg.samples = *samples;
    if (seed) cfg.seed = *seed;
    if (degree) cfg.degree = *degree;
    if (threads) cfg.threads = *threads;

    using namespace vpblab::commands;
    if (c_coeffs->parsed()) return cmd_coeffs(cfg);
    if (c_branches->parsed()) return cmd_branches(cfg);
    if (c_gap->parsed()) return cmd_gap(cfg);
    if (c_dispersion->parsed()) return cmd_dispersion(cfg);
    if (c_decay->parsed()) return cmd_decay(cfg);
    if (c_validate->parsed()) return cmd_validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
