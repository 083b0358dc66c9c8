#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>

#include "vpblab/collision.hpp"

namespace vpblab {

/// Binary cache for assembled collision matrices, keyed by
/// (degree_cutoff, samples, seed): a JSON header with all parameters and
/// residual diagnostics, followed by raw little-endian doubles for L, L1 and
/// nu_diag (K and K1 are reconstructed as L + nu).
namespace cache {

constexpr char kMagic[8] = {'V', 'P', 'B', 'C', 'A', 'S', 'H', '1'};
constexpr int kFormatVersion = 1;

inline std::string file_name(int degree, std::int64_t samples, std::uint64_t seed) {
  return "collision_d" + std::to_string(degree) + "_n" + std::to_string(samples) +
         "_s" + std::to_string(seed) + ".bin";
}

inline void store(const std::string& dir, const CollisionAssembly& asmbl) {
  std::filesystem::create_directories(dir);
  const std::string path =
      dir + "/" +
      file_name(asmbl.basis.degree_cutoff(), asmbl.sample_count, asmbl.assembly_seed);
  nlohmann::ordered_json h;
  h["format_version"] = kFormatVersion;
  h["degree"] = asmbl.basis.degree_cutoff();
  h["dimension"] = asmbl.basis.dimension();
  h["samples"] = asmbl.sample_count;
  h["seed"] = asmbl.assembly_seed;
  h["op_norm"] = asmbl.diagnostics.op_norm;
  h["null_residual_raw"] = std::vector<double>(asmbl.diagnostics.null_residual_raw,
                                               asmbl.diagnostics.null_residual_raw + 5);
  h["null_residual_l1_raw"] = asmbl.diagnostics.null_residual_l1_raw;
  h["max_entry_se"] = asmbl.diagnostics.max_entry_se;
  h["isotropy_removed_fraction"] = asmbl.diagnostics.isotropy_removed_fraction;
  h["mu"] = asmbl.gap.mu;
  h["mu_l"] = asmbl.gap.mu_l;
  h["mu_l1"] = asmbl.gap.mu_l1;
  h["nu0"] = asmbl.gap.nu0;
  h["nu1"] = asmbl.gap.nu1;
  h["assembly_seconds"] = asmbl.diagnostics.assembly_seconds;
  const std::string header = h.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cache: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = header.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header.data(), static_cast<std::streamsize>(hlen));
  auto dump = [&](const RealMatrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  };
  dump(asmbl.L);
  dump(asmbl.L1);
  dump(asmbl.nu_diag);
}

inline std::optional<CollisionAssembly> load(const std::string& dir,
                                             const BasisSet& basis,
                                             std::int64_t samples,
                                             std::uint64_t seed) {
  const std::string path =
      dir + "/" + file_name(basis.degree_cutoff(), samples, seed);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) return std::nullopt;
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) return std::nullopt;
  const auto h = nlohmann::json::parse(header, nullptr, false);
  if (h.is_discarded() || h.value("format_version", -1) != kFormatVersion ||
      h.value("degree", -1) != basis.degree_cutoff() ||
      h.value("samples", std::int64_t(-1)) != samples ||
      h.value("seed", std::uint64_t(0)) != seed ||
      h.value("dimension", -1) != basis.dimension())
    return std::nullopt;

  CollisionAssembly asmbl(basis);
  asmbl.sample_count = samples;
  asmbl.assembly_seed = seed;
  const int dim = basis.dimension();
  auto slurp = [&](RealMatrix& m) {
    m.resize(dim, dim);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  };
  slurp(asmbl.L);
  slurp(asmbl.L1);
  slurp(asmbl.nu_diag);
  if (!in) return std::nullopt;
  asmbl.K = asmbl.L + asmbl.nu_diag;
  asmbl.K1 = asmbl.L1 + asmbl.nu_diag;
  auto& d = asmbl.diagnostics;
  d.op_norm = h.value("op_norm", 0.0);
  const auto rr = h.value("null_residual_raw", std::vector<double>{});
  for (size_t j = 0; j < rr.size() && j < 5; ++j) d.null_residual_raw[j] = rr[j];
  d.null_residual_l1_raw = h.value("null_residual_l1_raw", 0.0);
  d.max_entry_se = h.value("max_entry_se", 0.0);
  d.isotropy_removed_fraction = h.value("isotropy_removed_fraction", 0.0);
  d.assembly_seconds = h.value("assembly_seconds", 0.0);
  for (int j = 0; j < 5; ++j) d.null_residual[j] = (asmbl.L * basis.chi(j)).norm();
  d.null_residual_l1 = (asmbl.L1 * basis.chi(0)).norm();
  asmbl.gap.mu = h.value("mu", 0.0);
  asmbl.gap.mu_l = h.value("mu_l", 0.0);
  asmbl.gap.mu_l1 = h.value("mu_l1", 0.0);
  asmbl.gap.nu0 = h.value("nu0", 0.0);
  asmbl.gap.nu1 = h.value("nu1", 0.0);
  return asmbl;
}

}  // namespace cache

/// Assembly with cache reuse keyed by (degree, samples, seed).
inline CollisionAssembly assemble_cached(const BasisSet& basis, std::int64_t samples,
                                         std::uint64_t seed, int threads,
                                         const std::string& cache_dir) {
  if (!cache_dir.empty())
    if (auto hit = cache::load(cache_dir, basis, samples, seed)) return *std::move(hit);
  CollisionAssembly asmbl = assemble(basis, samples, seed, threads);
  if (!cache_dir.empty()) cache::store(cache_dir, asmbl);
  return asmbl;
}

}  // namespace vpblab
