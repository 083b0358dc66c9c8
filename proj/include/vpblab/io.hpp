#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpblab/collision.hpp"
#include "vpblab/config.hpp"

namespace vpblab {

using Json = nlohmann::ordered_json;

/// Deterministic shortest-roundtrip decimal for doubles in CSV cells.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Minimal CSV emitter: UTF-8, header row, '.' decimal separator, and a
/// leading comment line carrying the manifest reference.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& manifest_ref,
            const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    out_ << "# manifest: " << manifest_ref << "\n";
    for (size_t i = 0; i < header.size(); ++i)
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
      out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }

 private:
  std::ofstream out_;
};

inline Json config_json(const RunConfig& c) {
  Json j;
  j["degree"] = c.degree;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["family"] = c.family;
  j["a"] = c.a;
  j["b"] = c.b;
  j["branch_s_min"] = c.branch_s_min;
  j["branch_r0"] = c.branch_r0;
  j["branch_points"] = c.branch_points;
  j["gap_s_min"] = c.gap_s_min;
  j["gap_s_max"] = c.gap_s_max;
  j["gap_points"] = c.gap_points;
  j["grid_s_min"] = c.grid_s_min;
  j["grid_s_max"] = c.grid_s_max;
  j["grid_points"] = c.grid_points;
  j["time_step"] = c.time_step;
  j["time_max"] = c.time_max;
  j["fit_t_lo"] = c.fit_t_lo;
  j["fit_t_hi"] = c.fit_t_hi;
  j["d0"] = c.d0;
  j["d1"] = c.d1;
  j["r_param"] = c.r_param;
  j["dispersion_n_re"] = c.dispersion_n_re;
  j["dispersion_n_im"] = c.dispersion_n_im;
  j["dispersion_n_s"] = c.dispersion_n_s;
  j["dispersion_re_max"] = c.dispersion_re_max;
  j["dispersion_im_max"] = c.dispersion_im_max;
  j["out_dir"] = c.out_dir;
  j["cache_dir"] = c.effective_cache_dir();
  return j;
}

inline Json diagnostics_json(const AssemblyDiagnostics& d) {
  Json j;
  j["op_norm"] = d.op_norm;
  j["null_residual_raw"] = std::vector<double>(d.null_residual_raw,
                                               d.null_residual_raw + 5);
  j["null_residual_l1_raw"] = d.null_residual_l1_raw;
  j["null_residual"] = std::vector<double>(d.null_residual, d.null_residual + 5);
  j["null_residual_l1"] = d.null_residual_l1;
  j["max_asymmetry_raw"] = d.max_asymmetry_raw;
  j["max_entry_se"] = d.max_entry_se;
  j["isotropy_removed_fraction"] = d.isotropy_removed_fraction;
  j["assembly_seconds"] = d.assembly_seconds;
  return j;
}

/// Provenance record emitted once per run; every data file references its
/// manifest by name. Wall-clock fields make manifests run-dependent, so they
/// are excluded from the byte-determinism contract that data files obey.
class RunManifest {
 public:
  RunManifest(const RunConfig& cfg, const std::string& command)
      : cfg_(cfg), command_(command) {
    name_ = command + "_" + cfg.reference_hash() + ".manifest.json";
  }

  const std::string& name() const { return name_; }

  void stage_seconds(const std::string& stage, double seconds) {
    stages_[stage] = seconds;
  }
  void diagnostics(const AssemblyDiagnostics& d) { diag_ = diagnostics_json(d); }
  void note(const std::string& key, const Json& value) { notes_[key] = value; }

  void write() const {
    std::filesystem::create_directories(cfg_.out_dir);
    Json j;
    j["command"] = command_;
    j["code_version"] = "vpblab 1.0.0";
    j["config"] = config_json(cfg_);
    j["config_hash"] = cfg_.reference_hash();
    j["assembly_diagnostics"] = diag_;
    j["stage_seconds"] = stages_;
    for (auto it = notes_.begin(); it != notes_.end(); ++it) j[it.key()] = it.value();
    std::ofstream out(cfg_.out_dir + "/" + name_);
    out << j.dump(2) << "\n";
  }

 private:
  RunConfig cfg_;
  std::string command_;
  std::string name_;
  Json stages_ = Json::object();
  Json diag_ = Json::object();
  Json notes_ = Json::object();
};

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace vpblab
