#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vpblab/basis.hpp"
#include "vpblab/collision_frequency.hpp"
#include "vpblab/rotation.hpp"
#include "vpblab/sobol.hpp"

namespace vpblab {

struct AssemblyDiagnostics {
  double op_norm = 0.0;             // largest |eigenvalue| of L
  double null_residual_raw[5] = {};    // ||L_raw chi_j|| before isotropization
  double null_residual_l1_raw = 0.0;   // ||L1_raw chi_0||
  double null_residual[5] = {};        // after isotropization
  double null_residual_l1 = 0.0;
  double max_asymmetry_raw = 0.0;   // before the (A+A^T)/2 cleanup
  double max_entry_se = 0.0;        // batch-means standard error, worst entry
  double isotropy_removed_fraction = 0.0;  // |L_iso - L_raw|_F / |L_raw|_F
  double assembly_seconds = 0.0;
};

/// Coercivity constants measured from the assembled operators.
struct GapReport {
  double mu = 0.0;      // min of the two restricted gaps
  double mu_l = 0.0;    // gap of L on the complement of N_0
  double mu_l1 = 0.0;   // gap of L1 on the complement of N_1
  double nu0 = 0.0;     // fitted lower bound in nu0 (1+|v|) <= nu(v)
  double nu1 = 0.0;     // fitted upper bound
};

/// Galerkin matrices of the linearized hard-sphere collision operators.
///
/// L and L1 are accumulated directly through their Dirichlet forms
///   (L f, g)  = -(1/4) Int B(v-v_*,w) (Df)(Dg)   M M_* dw dv_* dv,
///   (L1 f, g) = -(1/2) Int B(v-v_*,w) (D1 f)(D1 g) M M_* dw dv_* dv,
/// with Df = F' + F'_* - F - F_* and D1 f = F' - F for F = f/sqrt(M),
/// which follow from L f = M^{-1/2}[Q(M, sqrt(M) f) + Q(sqrt(M) f, M)] and
/// L1 f = M^{-1/2} Q(sqrt(M) f, M). Each sample contributes a negative
/// rank-one term, so symmetry, nonpositivity and the null spaces hold
/// exactly at any sample count; sampling error only perturbs the strictly
/// negative part of the spectrum. K and K1 are recovered as L + nu.
struct CollisionAssembly {
  BasisSet basis;
  RealMatrix K, K1, nu_diag;
  RealMatrix L, L1;
  std::int64_t sample_count = 0;
  std::uint64_t assembly_seed = 0;
  AssemblyDiagnostics diagnostics;
  GapReport gap;

  explicit CollisionAssembly(const BasisSet& b) : basis(b) {}
};

namespace detail {

struct SuperblockResult {
  RealMatrix L, L1;
};

inline void accumulate_superblock(const BasisSet& basis, std::uint64_t seed,
                                  std::int64_t first, std::int64_t count,
                                  SuperblockResult& out) {
  const int dim = basis.dimension();
  constexpr int kBlock = 128;
  out.L = RealMatrix::Zero(dim, dim);
  out.L1 = RealMatrix::Zero(dim, dim);
  Sobol8 gen(seed);
  gen.seek(static_cast<std::uint64_t>(first));

  RealMatrix G(kBlock, dim), G1(kBlock, dim);
  std::vector<double> hv(dim), hvs(dim), hvp(dim), hvps(dim);
  double u[8];
  std::int64_t done = 0;
  while (done < count) {
    const int n = static_cast<int>(std::min<std::int64_t>(kBlock, count - done));
    for (int row = 0; row < n; ++row) {
      gen.next(u);
      for (int d = 0; d < 6; ++d)
        u[d] = std::min(std::max(u[d], 1e-15), 1.0 - 1e-15);
      double v[3], vs[3], vp[3], vps[3], om[3];
      for (int d = 0; d < 3; ++d) {
        v[d] = normal_quantile(u[d]);
        vs[d] = normal_quantile(u[3 + d]);
      }
      const double z = 1.0 - 2.0 * u[6];
      const double phi = 2.0 * M_PI * u[7];
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      om[0] = rho * std::cos(phi);
      om[1] = rho * std::sin(phi);
      om[2] = z;
      const double dp = (v[0] - vs[0]) * om[0] + (v[1] - vs[1]) * om[1] +
                        (v[2] - vs[2]) * om[2];
      for (int d = 0; d < 3; ++d) {
        vp[d] = v[d] - dp * om[d];
        vps[d] = vs[d] + dp * om[d];
      }
      basis.evaluate(v, hv.data());
      basis.evaluate(vs, hvs.data());
      basis.evaluate(vp, hvp.data());
      basis.evaluate(vps, hvps.data());
      const double kern = std::abs(dp);
      const double wL = std::sqrt(0.25 * kern);
      const double wL1 = std::sqrt(0.5 * kern);
      for (int d = 0; d < dim; ++d) {
        G(row, d) = wL * (hvp[d] + hvps[d] - hv[d] - hvs[d]);
        G1(row, d) = wL1 * (hvp[d] - hv[d]);
      }
    }
    const auto Gb = G.topRows(n);
    const auto G1b = G1.topRows(n);
    out.L.selfadjointView<Eigen::Lower>().rankUpdate(Gb.transpose(), -1.0);
    out.L1.selfadjointView<Eigen::Lower>().rankUpdate(G1b.transpose(), -1.0);
    done += n;
  }
  out.L = RealMatrix(out.L.selfadjointView<Eigen::Lower>());
  out.L1 = RealMatrix(out.L1.selfadjointView<Eigen::Lower>());
}

}  // namespace detail

/// Matrix of nu(v) multiplication assembled by deterministic quadrature.
inline RealMatrix nu_matrix(const BasisSet& basis) {
  const auto& quad = basis.quadrature();
  RealVector nu(quad.nodes.rows());
  for (Eigen::Index p = 0; p < quad.nodes.rows(); ++p)
    nu[p] = collision_frequency_radial(quad.nodes.row(p).norm());
  const RealMatrix phi = basis.evaluate_at(quad.nodes);
  RealMatrix out = phi.transpose() *
                   ((quad.weights.array() * nu.array()).matrix().asDiagonal() * phi);
  return 0.5 * (out + out.transpose());
}

inline CollisionAssembly assemble(const BasisSet& basis, std::int64_t samples,
                                  std::uint64_t seed, int threads = 0) {
  if (samples <= 0) throw std::invalid_argument("assemble: samples must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const int dim = basis.dimension();
  constexpr int kSuperblocks = 64;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, kSuperblocks));

  // fixed partition of the sample index range, independent of thread count
  std::vector<std::int64_t> first(kSuperblocks + 1);
  for (int sb = 0; sb <= kSuperblocks; ++sb)
    first[sb] = samples * sb / kSuperblocks;

  std::vector<detail::SuperblockResult> partial(kSuperblocks);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int sb = next.fetch_add(1);
      if (sb >= kSuperblocks) return;
      detail::accumulate_superblock(basis, seed, first[sb], first[sb + 1] - first[sb],
                                    partial[sb]);
    }
  };
  {
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  // batch-means standard error from the superblock partial sums
  RealMatrix mean_sum = RealMatrix::Zero(dim, dim);
  RealMatrix sq_sum = RealMatrix::Zero(dim, dim);
  for (int sb = 0; sb < kSuperblocks; ++sb) {
    const double n_sb = static_cast<double>(first[sb + 1] - first[sb]);
    const RealMatrix m = partial[sb].L * (4.0 * M_PI / n_sb);
    mean_sum += m;
    sq_sum += m.cwiseProduct(m);
  }
  const RealMatrix var =
      (sq_sum - mean_sum.cwiseProduct(mean_sum) / static_cast<double>(kSuperblocks)) /
      ((kSuperblocks - 1.0) * kSuperblocks);
  const double max_entry_se = var.cwiseMax(0.0).cwiseSqrt().maxCoeff();

  // tree reduction in a fixed order; bit-identical for any thread count
  for (int gap = 1; gap < kSuperblocks; gap *= 2)
    for (int sb = 0; sb + gap < kSuperblocks; sb += 2 * gap) {
      partial[sb].L += partial[sb + gap].L;
      partial[sb].L1 += partial[sb + gap].L1;
    }

  CollisionAssembly asmbl(basis);
  asmbl.sample_count = samples;
  asmbl.assembly_seed = seed;
  const double scale = 4.0 * M_PI / static_cast<double>(samples);
  RealMatrix L_raw = partial[0].L * scale;
  RealMatrix L1_raw = partial[0].L1 * scale;

  auto& diag = asmbl.diagnostics;
  diag.max_entry_se = max_entry_se;
  diag.max_asymmetry_raw = (L_raw - L_raw.transpose()).cwiseAbs().maxCoeff();
  L_raw = 0.5 * (L_raw + L_raw.transpose()).eval();
  L1_raw = 0.5 * (L1_raw + L1_raw.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<RealMatrix> esL(L_raw, Eigen::EigenvaluesOnly);
  diag.op_norm = esL.eigenvalues().cwiseAbs().maxCoeff();
  for (int j = 0; j < 5; ++j)
    diag.null_residual_raw[j] = (L_raw * basis.chi(j)).norm();
  diag.null_residual_l1_raw = (L1_raw * basis.chi(0)).norm();

  const Isotropizer iso(basis);
  asmbl.L = iso.apply(L_raw);
  asmbl.L1 = iso.apply(L1_raw);
  asmbl.L = (0.5 * (asmbl.L + asmbl.L.transpose())).eval();
  asmbl.L1 = (0.5 * (asmbl.L1 + asmbl.L1.transpose())).eval();
  diag.isotropy_removed_fraction = (asmbl.L - L_raw).norm() / L_raw.norm();
  for (int j = 0; j < 5; ++j)
    diag.null_residual[j] = (asmbl.L * basis.chi(j)).norm();
  diag.null_residual_l1 = (asmbl.L1 * basis.chi(0)).norm();

  asmbl.nu_diag = nu_matrix(basis);
  asmbl.K = asmbl.L + asmbl.nu_diag;
  asmbl.K1 = asmbl.L1 + asmbl.nu_diag;

  const double tol = 1e-4 * diag.op_norm;
  for (int j = 0; j < 5; ++j)
    if (diag.null_residual_raw[j] > tol)
      throw std::runtime_error(
          "assemble: null-space residual ||L chi_" + std::to_string(j) +
          "|| = " + std::to_string(diag.null_residual_raw[j]) +
          " exceeds 1e-4 * ||L||; increase the sample budget");

  asmbl.gap = [&] {
    GapReport g;
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(asmbl.L, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es1(asmbl.L1, Eigen::EigenvaluesOnly);
    // eigenvalues ascending: null modes sit at the top of the spectrum
    g.mu_l = -es.eigenvalues()[dim - 6];
    g.mu_l1 = -es1.eigenvalues()[dim - 2];
    // a sound hard-sphere assembly has mu of order op_norm/5; a collapsed gap
    // means the sample budget cannot support this basis size
    if (g.mu_l <= 0.02 * diag.op_norm || g.mu_l1 <= 0.02 * diag.op_norm)
      throw std::runtime_error(
          "assemble: coercivity gap collapsed (mu_l=" + std::to_string(g.mu_l) +
          ", mu_l1=" + std::to_string(g.mu_l1) +
          "); increase the sample budget for this basis size");
    g.mu = std::min(g.mu_l, g.mu_l1);
    const auto& quad = basis.quadrature();
    g.nu0 = std::numeric_limits<double>::infinity();
    g.nu1 = 0.0;
    for (Eigen::Index p = 0; p < quad.nodes.rows(); ++p) {
      const double r = quad.nodes.row(p).norm();
      const double ratio = collision_frequency_radial(r) / (1.0 + r);
      g.nu0 = std::min(g.nu0, ratio);
      g.nu1 = std::max(g.nu1, ratio);
    }
    return g;
  }();

  diag.assembly_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return asmbl;
}

inline GapReport coercivity_gap(const CollisionAssembly& asmbl) { return asmbl.gap; }

enum class WhichOperator { L, L1 };

/// Solves the restricted system A x = P rhs on the complement of the null
/// space (P = P1 for L, P_r for L1), returning the unique solution in the
/// complement. Uses a Cholesky factorization of -A deflated by the null
/// projector, which is symmetric positive definite there.
class RestrictedSolver {
 public:
  RestrictedSolver(const CollisionAssembly& asmbl, WhichOperator which) {
    const RealMatrix& A = which == WhichOperator::L ? asmbl.L : asmbl.L1;
    const int nnull = which == WhichOperator::L ? 5 : 1;
    null_.resize(asmbl.basis.dimension(), nnull);
    for (int j = 0; j < nnull; ++j) null_.col(j) = asmbl.basis.chi(j);
    RealMatrix M = -A + null_ * null_.transpose();
    llt_.compute(M);
    if (llt_.info() != Eigen::Success)
      throw std::runtime_error("RestrictedSolver: restricted system is singular");
  }

  VelocityFunction solve(const VelocityFunction& rhs) const {
    const VelocityFunction p = rhs - null_.cast<Complex>() *
                                         (null_.transpose().cast<Complex>() * rhs);
    VelocityFunction x(rhs.size());
    x.real() = -llt_.solve(p.real().eval());
    x.imag() = -llt_.solve(p.imag().eval());
    return x;
  }

  double residual(const RealMatrix& A, const VelocityFunction& rhs,
                  const VelocityFunction& x) const {
    const VelocityFunction p = rhs - null_.cast<Complex>() *
                                         (null_.transpose().cast<Complex>() * rhs);
    return (A.cast<Complex>() * x - p).norm();
  }

 private:
  RealMatrix null_;
  Eigen::LLT<RealMatrix> llt_;
};

inline VelocityFunction solve_restricted(const CollisionAssembly& asmbl,
                                         WhichOperator which,
                                         const VelocityFunction& rhs) {
  return RestrictedSolver(asmbl, which).solve(rhs);
}

}  // namespace vpblab
