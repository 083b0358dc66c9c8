#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vpblab {

/// Run configuration. Every field is echoed into the output manifests.
/// Precedence: command-line flags > config file > these defaults.
struct RunConfig {
  int degree = 10;
  std::int64_t samples = 10'000'000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency; never affects results

  std::string family = "Bm";  // E | B | Bm | Bm_general
  double a = 1.0, b = 1.0;    // Bm_general field-equation parameters

  // branch window
  double branch_s_min = 1e-3;
  double branch_r0 = 0.3;
  int branch_points = 40;

  // gap scan
  double gap_s_min = 1e-2;
  double gap_s_max = 10.0;
  int gap_points = 40;

  // radial grid for global norms
  double grid_s_min = 1e-3;
  double grid_s_max = 8.0;
  int grid_points = 64;

  // time grid and fit window
  double time_step = 2.5;
  double time_max = 100.0;
  double fit_t_lo = 10.0;
  double fit_t_hi = 100.0;

  // initial data
  double d0 = 1.0;
  double d1 = 3.0;
  double r_param = 0.3;

  // dispersion scan
  int dispersion_n_re = 50;
  int dispersion_n_im = 50;
  int dispersion_n_s = 20;
  double dispersion_re_max = 1.0;
  double dispersion_im_max = 1.0;

  std::string out_dir = "out";
  std::string cache_dir;  // default: <out_dir>/cache

  std::string effective_cache_dir() const {
    return cache_dir.empty() ? out_dir + "/cache" : cache_dir;
  }

  /// Canonical serialization of the physics-relevant parameters; used for the
  /// manifest reference hash. Output location and thread count are excluded,
  /// as they must not influence any emitted number.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "degree=" << degree << ";samples=" << samples << ";seed=" << seed
       << ";family=" << family << ";a=" << a << ";b=" << b
       << ";branch_s_min=" << branch_s_min << ";branch_r0=" << branch_r0
       << ";branch_points=" << branch_points << ";gap_s_min=" << gap_s_min
       << ";gap_s_max=" << gap_s_max << ";gap_points=" << gap_points
       << ";grid_s_min=" << grid_s_min << ";grid_s_max=" << grid_s_max
       << ";grid_points=" << grid_points << ";time_step=" << time_step
       << ";time_max=" << time_max << ";fit_t_lo=" << fit_t_lo
       << ";fit_t_hi=" << fit_t_hi << ";d0=" << d0 << ";d1=" << d1
       << ";r_param=" << r_param << ";dispersion_n_re=" << dispersion_n_re
       << ";dispersion_n_im=" << dispersion_n_im
       << ";dispersion_n_s=" << dispersion_n_s
       << ";dispersion_re_max=" << dispersion_re_max
       << ";dispersion_im_max=" << dispersion_im_max;
    return os.str();
  }

  std::string reference_hash() const {
    // FNV-1a, printed as 16 hex digits
    const std::string c = canonical();
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char ch : c) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

/// Reads a flat key = value file ('#' comments, blank lines allowed;
/// [section] headers are accepted and ignored).
inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\"");
      const auto e = s.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string t = trim(line);
    if (t.empty() || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  auto geti = [&](const char* k, auto& field) {
    if (auto it = kv.find(k); it != kv.end()) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(
          std::stoll(it->second));
      kv.erase(it);
    }
  };
  auto getd = [&](const char* k, double& field) {
    if (auto it = kv.find(k); it != kv.end()) {
      field = std::stod(it->second);
      kv.erase(it);
    }
  };
  auto gets = [&](const char* k, std::string& field) {
    if (auto it = kv.find(k); it != kv.end()) {
      field = it->second;
      kv.erase(it);
    }
  };
  geti("degree", cfg.degree);
  geti("samples", cfg.samples);
  geti("seed", cfg.seed);
  geti("threads", cfg.threads);
  gets("family", cfg.family);
  getd("a", cfg.a);
  getd("b", cfg.b);
  getd("branch_s_min", cfg.branch_s_min);
  getd("branch_r0", cfg.branch_r0);
  geti("branch_points", cfg.branch_points);
  getd("gap_s_min", cfg.gap_s_min);
  getd("gap_s_max", cfg.gap_s_max);
  geti("gap_points", cfg.gap_points);
  getd("grid_s_min", cfg.grid_s_min);
  getd("grid_s_max", cfg.grid_s_max);
  geti("grid_points", cfg.grid_points);
  getd("time_step", cfg.time_step);
  getd("time_max", cfg.time_max);
  getd("fit_t_lo", cfg.fit_t_lo);
  getd("fit_t_hi", cfg.fit_t_hi);
  getd("d0", cfg.d0);
  getd("d1", cfg.d1);
  getd("r_param", cfg.r_param);
  geti("dispersion_n_re", cfg.dispersion_n_re);
  geti("dispersion_n_im", cfg.dispersion_n_im);
  geti("dispersion_n_s", cfg.dispersion_n_s);
  getd("dispersion_re_max", cfg.dispersion_re_max);
  getd("dispersion_im_max", cfg.dispersion_im_max);
  gets("out_dir", cfg.out_dir);
  gets("cache_dir", cfg.cache_dir);
  if (!kv.empty())
    throw std::runtime_error("unknown config key: " + kv.begin()->first);
}

}  // namespace vpblab
