#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "vpblab/collision.hpp"
#include "vpblab/mode_operators.hpp"

namespace vpblab {

struct EigenPair {
  Complex lambda;
  VelocityFunction vector;  // unit norm in the mode's weighted product
  bool resolved = false;    // inside the window Re > -nu0 + delta
};

struct SpectrumOptions {
  double nu0 = 0.0;          // collision-frequency lower bound (from GapReport)
  double delta_frac = 0.1;   // window margin delta = delta_frac * nu0
  bool use_sectors = true;   // parity-in-(v2,v3) block diagonalization at xi = s e1
};

namespace detail {

/// Index lists of the four (parity in v2) x (parity in v3) sectors. Operators
/// at xi = s e1 built from the isotropic collision matrices commute with both
/// reflections, so the eigenproblem decouples exactly.
inline std::array<std::vector<int>, 4> parity_sectors(const BasisSet& basis) {
  std::array<std::vector<int>, 4> sec;
  for (int i = 0; i < basis.dimension(); ++i) {
    const auto& a = basis.index_map()[i];
    sec[(a[1] % 2) * 2 + (a[2] % 2)].push_back(i);
  }
  return sec;
}

inline void solve_block(const Matrix& M, const std::vector<int>& ix, int dim,
                        std::vector<EigenPair>& out) {
  const int n = static_cast<int>(ix.size());
  Matrix sub(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) sub(r, c) = M(ix[r], ix[c]);
  Eigen::ComplexEigenSolver<Matrix> es(sub);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigens: complex eigensolver failed to converge");
  for (int k = 0; k < n; ++k) {
    EigenPair p;
    p.lambda = es.eigenvalues()[k];
    p.vector = VelocityFunction::Zero(dim);
    for (int r = 0; r < n; ++r) p.vector[ix[r]] = es.eigenvectors()(r, k);
    out.push_back(std::move(p));
  }
}

}  // namespace detail

/// Full non-Hermitian eigendecomposition of a mode operator. Eigenvalues with
/// Re > -nu0 + delta are flagged resolved; deeper ones sit where the
/// discretized continuous spectrum accumulates and are not meaningful
/// pointwise.
inline std::vector<EigenPair> eigens(const ModeOperator& mode, const BasisSet& basis,
                                     const SpectrumOptions& opts) {
  std::vector<EigenPair> out;
  out.reserve(basis.dimension());
  if (opts.use_sectors) {
    for (const auto& ix : detail::parity_sectors(basis))
      detail::solve_block(mode.matrix, ix, basis.dimension(), out);
  } else {
    std::vector<int> all(basis.dimension());
    for (int i = 0; i < basis.dimension(); ++i) all[i] = i;
    detail::solve_block(mode.matrix, all, basis.dimension(), out);
  }
  const double cutoff = -opts.nu0 * (1.0 - opts.delta_frac);
  for (auto& p : out) {
    const double n = weighted_norm(basis, p.vector, mode.product);
    p.vector /= n;
    p.resolved = p.lambda.real() > cutoff;
  }
  std::sort(out.begin(), out.end(), [](const EigenPair& a, const EigenPair& b) {
    return a.lambda.real() > b.lambda.real();
  });
  return out;
}

/// One tracked point of an eigenvalue branch.
struct BranchSample {
  double s = 0.0;
  Complex lambda;
  VelocityFunction vector;   // bilinearly normalized: psi^T W psi = 1
  double overlap_prev = 1.0; // |<psi(s_k), psi(s_{k-1})>_W| continuity measure
};

struct ExpansionFit {
  double c_imag = 0.0;    // coefficient of i s
  double c_real = 0.0;    // coefficient of -s^2
  double residual_imag = 0.0;
  double residual_real = 0.0;
  double half_window_drift = 0.0;  // relative change of c_real on s <= r0/2
  bool stable = true;
};

struct SpectrumBranch {
  ModeKind kind = ModeKind::Bm;
  int label = 0;  // in {-1, 0, 1, 2, 3}
  std::vector<BranchSample> samples;
  ExpansionFit fit;
  double seed_overlap = 0.0;  // overlap with the analytic leading eigenvector
};

namespace detail {

/// Weight matrix of the mode product applied to a vector: W f = f + w <f,chi0> chi0.
inline VelocityFunction apply_weight(const BasisSet& basis, const ProductKind& p,
                                     const VelocityFunction& f) {
  const double w = p.mass_weight();
  if (w == 0.0) return f;
  const Eigen::VectorXcd c = basis.chi(0).cast<Complex>();
  return f + w * (c.dot(f)) * c;
}

inline Complex bilinear(const BasisSet& basis, const ProductKind& p,
                        const VelocityFunction& a, const VelocityFunction& b) {
  return a.transpose() * apply_weight(basis, p, b);
}

inline double overlap(const BasisSet& basis, const ProductKind& p,
                      const VelocityFunction& a, const VelocityFunction& b) {
  const Complex ip = b.dot(apply_weight(basis, p, a));
  return std::abs(ip) /
         (weighted_norm(basis, a, p) * weighted_norm(basis, b, p));
}

/// Analytic leading-order eigenvectors at s -> 0. For the screened family
/// these are the expansion heads; for the plain transport family they follow
/// from first-order degenerate perturbation on the five-fold null space.
inline std::vector<VelocityFunction> leading_vectors(ModeKind kind,
                                                     const BasisSet& basis) {
  const auto chi = [&](int j) { return basis.chi(j).cast<Complex>().eval(); };
  std::vector<VelocityFunction> seeds(5);  // order: -1, 0, 1, 2, 3
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  if (kind == ModeKind::E) {
    const double c = std::sqrt(5.0 / 3.0);
    const double n1 = std::sqrt(10.0 / 3.0);
    seeds[0] = (chi(0) + c * chi(1) + std::sqrt(2.0 / 3.0) * chi(4)) / n1;
    seeds[1] = std::sqrt(2.0 / 5.0) * chi(0) - std::sqrt(3.0 / 5.0) * chi(4);
    seeds[2] = (chi(0) - c * chi(1) + std::sqrt(2.0 / 3.0) * chi(4)) / n1;
  } else {
    seeds[0] = (s3 / 4.0) * chi(0) + (s2 / 2.0) * chi(1) + (s2 / 4.0) * chi(4);
    seeds[1] = (s2 / 4.0) * chi(0) - (s3 / 2.0) * chi(4);
    seeds[2] = (s3 / 4.0) * chi(0) - (s2 / 2.0) * chi(1) + (s2 / 4.0) * chi(4);
  }
  seeds[3] = chi(2);
  seeds[4] = chi(3);
  return seeds;
}

}  // namespace detail

/// Tracks the five low-frequency eigenvalue branches over an ascending grid.
/// Branches are seeded at the smallest s by overlap with the analytic leading
/// eigenvectors and continued by maximal-overlap matching; the interval is
/// bisected automatically when continuity drops below the threshold.
inline std::vector<SpectrumBranch> track_branches(
    ModeKind kind, const CollisionAssembly& asmbl, std::vector<double> s_grid,
    double a = 1.0, double b = 1.0, double overlap_threshold = 0.9,
    int max_bisections = 6) {
  if (kind == ModeKind::B)
    throw std::invalid_argument(
        "track_branches: the bipolar family has a uniform spectral gap, "
        "no low-frequency branches to track");
  if (s_grid.empty() || s_grid.front() <= 0.0)
    throw std::invalid_argument("track_branches: grid must be positive ascending");

  const BasisSet& basis = asmbl.basis;
  const double mu = asmbl.gap.mu;
  SpectrumOptions opts;
  opts.nu0 = asmbl.gap.nu0;

  static const int kLabels[5] = {-1, 0, 1, 2, 3};
  std::vector<SpectrumBranch> branches(5);
  const auto seeds = detail::leading_vectors(kind, basis);

  auto window_pairs = [&](double s) {
    const ModeOperator mode = assemble_mode(kind, s, asmbl, a, b);
    auto all = eigens(mode, basis, opts);
    std::vector<EigenPair> win;
    for (auto& p : all)
      if (p.lambda.real() > -mu / 2.0) win.push_back(std::move(p));
    return std::make_pair(win, mode.product);
  };

  // seed at the smallest grid point
  {
    const double s0 = s_grid.front();
    auto [win, prod] = window_pairs(s0);
    if (win.size() != 5)
      throw std::runtime_error(
          "track_branches: expected exactly 5 eigenvalues in Re > -mu/2 at s = " +
          std::to_string(s0) + ", found " + std::to_string(win.size()));
    std::vector<bool> used(win.size(), false);
    for (int j = 0; j < 5; ++j) {
      int best = -1;
      double best_ov = -1.0;
      for (size_t k = 0; k < win.size(); ++k) {
        if (used[k]) continue;
        const double ov = detail::overlap(basis, prod, win[k].vector, seeds[j]);
        if (ov > best_ov) {
          best_ov = ov;
          best = static_cast<int>(k);
        }
      }
      used[best] = true;
      branches[j].kind = kind;
      branches[j].label = kLabels[j];
      branches[j].seed_overlap = best_ov;
      BranchSample smp;
      smp.s = s0;
      smp.lambda = win[best].lambda;
      smp.vector = win[best].vector;
      branches[j].samples.push_back(std::move(smp));
    }
  }

  // continuation
  std::function<void(double, double, int)> advance = [&](double s_prev, double s,
                                                         int depth) {
    auto [win, prod] = window_pairs(s);
    std::vector<bool> used(win.size(), false);
    std::vector<int> chosen(5, -1);
    std::vector<double> ovs(5, 0.0);
    for (int j = 0; j < 5; ++j) {
      const auto& prev = branches[j].samples.back().vector;
      int best = -1;
      double best_ov = -1.0;
      for (size_t k = 0; k < win.size(); ++k) {
        if (used[k]) continue;
        const double ov = detail::overlap(basis, prod, win[k].vector, prev);
        if (ov > best_ov) {
          best_ov = ov;
          best = static_cast<int>(k);
        }
      }
      if (best < 0 || best_ov < overlap_threshold) {
        if (depth >= max_bisections)
          throw std::runtime_error(
              "track_branches: continuity lost near s = " + std::to_string(s) +
              " (overlap " + std::to_string(best_ov) + "); grid refinement exhausted");
        const double mid = 0.5 * (s_prev + s);
        advance(s_prev, mid, depth + 1);
        advance(mid, s, depth + 1);
        return;
      }
      used[best] = true;
      chosen[j] = best;
      ovs[j] = best_ov;
    }
    for (int j = 0; j < 5; ++j) {
      BranchSample smp;
      smp.s = s;
      smp.lambda = win[chosen[j]].lambda;
      smp.vector = win[chosen[j]].vector;
      smp.overlap_prev = ovs[j];
      branches[j].samples.push_back(std::move(smp));
    }
  };
  for (size_t g = 1; g < s_grid.size(); ++g)
    advance(s_grid[g - 1], s_grid[g], 0);

  // bilinear renormalization psi^T W psi = 1, phase-aligned along the branch;
  // the degenerate shear pair is orthogonalized inside its eigenspace.
  for (auto& br : branches) {
    VelocityFunction* prev = nullptr;
    for (auto& smp : br.samples) {
      const ProductKind prod = mode_product(kind, smp.s);
      if (prev) {
        const Complex al = prev->dot(detail::apply_weight(basis, prod, smp.vector));
        if (std::abs(al) > 0) smp.vector *= std::conj(al) / std::abs(al);
      }
      const Complex q = detail::bilinear(basis, prod, smp.vector, smp.vector);
      smp.vector /= std::sqrt(q);
      prev = &smp.vector;
    }
  }
  for (size_t i = 0; i < branches[3].samples.size(); ++i) {
    auto& p2 = branches[3].samples[i];
    auto& p3 = branches[4].samples[i];
    const ProductKind prod = mode_product(kind, p2.s);
    const Complex c = detail::bilinear(basis, prod, p3.vector, p2.vector);
    p3.vector = (p3.vector - c * p2.vector).eval();
    p3.vector /= std::sqrt(detail::bilinear(basis, prod, p3.vector, p3.vector));
  }
  return branches;
}

/// Weighted least squares of the branch expansion lambda ~ i c_imag s - c_real s^2
/// on the window s <= r0, with a half-window stability check.
inline ExpansionFit fit_expansion(const SpectrumBranch& branch, double r0) {
  std::vector<double> ss, im, re;
  for (const auto& smp : branch.samples)
    if (smp.s <= r0) {
      ss.push_back(smp.s);
      im.push_back(smp.lambda.imag());
      re.push_back(smp.lambda.real());
    }
  if (ss.size() < 6)
    throw std::invalid_argument("fit_expansion: need at least 6 samples with s <= r0");
  auto fit_ratio = [&](const std::vector<double>& y, int order, size_t count) {
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i) acc += y[i] / std::pow(ss[i], order);
    return acc / static_cast<double>(count);
  };
  ExpansionFit f;
  f.c_imag = fit_ratio(im, 1, ss.size());
  f.c_real = -fit_ratio(re, 2, ss.size());
  double r2i = 0.0, r2r = 0.0;
  for (size_t i = 0; i < ss.size(); ++i) {
    r2i += std::pow(im[i] - f.c_imag * ss[i], 2);
    r2r += std::pow(re[i] + f.c_real * ss[i] * ss[i], 2);
  }
  f.residual_imag = std::sqrt(r2i / ss.size());
  f.residual_real = std::sqrt(r2r / ss.size());
  size_t nhalf = 0;
  while (nhalf < ss.size() && ss[nhalf] <= r0 / 2.0) ++nhalf;
  if (nhalf >= 4) {
    const double ch = -fit_ratio(re, 2, nhalf);
    f.half_window_drift = std::abs(ch - f.c_real) / std::max(1e-300, std::abs(f.c_real));
    f.stable = f.half_window_drift <= 0.02;
  }
  return f;
}

/// Expansion curvatures and transport coefficients from the restricted
/// inverses; all positive when the assembly is sound.
struct ExpansionCoefficients {
  double a_plus1 = 0.0, a_0 = 0.0, a_2 = 0.0;  // screened-family curvatures
  double kappa1 = 0.0, kappa2 = 0.0, kappa3 = 0.0;
  double kappa5 = 0.0, kappa6 = 0.0;
  double mu = 0.0;
  double a0_lemma37 = 0.0;    // min(mu, kappa3): dispersion root-free radius scale
  double j1 = 0.0;            // -(L^{-1} P1 (v1 chi1), v1 chi1)

  double a_plus1_general(double bparam) const {
    return bparam / (5.0 * bparam + 3.0) * kappa2 + 0.5 * j1;
  }
  double a_0_general(double bparam) const {
    return 3.0 * (bparam + 1.0) / (5.0 * bparam + 3.0) * kappa2;
  }
  static double sound_speed_general(double bparam) {
    return std::sqrt(1.0 / bparam + 5.0 / 3.0);
  }
};

inline ExpansionCoefficients analytic_coefficients(const CollisionAssembly& asmbl) {
  const BasisSet& basis = asmbl.basis;
  const RealMatrix V1 = multiplication_v1(basis);
  RestrictedSolver solL(asmbl, WhichOperator::L);
  RestrictedSolver solL1(asmbl, WhichOperator::L1);

  auto coef = [&](int j) {
    const VelocityFunction rhs = (V1 * basis.chi(j)).cast<Complex>();
    const VelocityFunction x = solL.solve(rhs);
    return -std::real(rhs.dot(x));  // -(L^{-1} P1 rhs, rhs); solution lies in P1
  };
  ExpansionCoefficients c;
  c.kappa1 = coef(2);
  c.kappa2 = coef(4);
  c.j1 = coef(1);
  {
    const VelocityFunction rhs = basis.chi(1).cast<Complex>();
    const VelocityFunction x = solL1.solve(rhs);
    c.kappa3 = -std::real(rhs.dot(x));
  }
  c.kappa5 = c.kappa1;
  c.kappa6 = c.kappa2;
  c.a_2 = c.kappa1;
  c.a_0 = 0.75 * c.kappa2;
  c.a_plus1 = 0.125 * c.kappa2 + 0.5 * c.j1;
  c.mu = asmbl.gap.mu;
  c.a0_lemma37 = std::min(c.mu, c.kappa3);
  if (c.kappa1 <= 0 || c.kappa2 <= 0 || c.kappa3 <= 0 || c.j1 <= 0)
    throw std::runtime_error(
        "analytic_coefficients: nonpositive coefficient, assembly invalid");
  return c;
}

/// Evaluator of the scalar dispersion function
///   D(lambda, s) = (1 + s^2) (R(lambda, s e1) chi_1, chi_1),
///   R = [L1 - lambda P_r - i P_r (v . xi) P_r]^{-1} on the complement of chi_0.
/// A Schur factorization at fixed s makes repeated lambda evaluations O(n^2).
class DispersionEvaluator {
 public:
  DispersionEvaluator(const CollisionAssembly& asmbl, double s)
      : s_(s), mu_(asmbl.gap.mu) {
    const BasisSet& basis = asmbl.basis;
    const RealVector chi0 = basis.chi(0);
    const RealVector chi1 = basis.chi(1);
    const RealMatrix V1 = multiplication_v1(basis);
    RealMatrix PrV1Pr = V1;
    PrV1Pr -= chi0 * (chi0.transpose() * V1);
    PrV1Pr -= (PrV1Pr * chi0) * chi0.transpose();
    Matrix A = asmbl.L1.cast<Complex>() -
               Complex(0, 1) * s * PrV1Pr.cast<Complex>() +
               kDeflation * (chi0 * chi0.transpose()).cast<Complex>();
    schur_.compute(A);
    if (schur_.info() != Eigen::Success)
      throw std::runtime_error("DispersionEvaluator: Schur factorization failed");
    uchi1_ = schur_.matrixU().adjoint() * chi1.cast<Complex>();
    chi1_ = chi1.cast<Complex>();
  }

  /// D(lambda, s); defined on Re lambda > -mu where the restriction is invertible.
  Complex operator()(Complex lambda) const {
    if (lambda.real() <= -mu_)
      throw std::domain_error(
          "dispersion_eval: Re lambda <= -mu, outside the invertibility half-plane");
    const Matrix& T = schur_.matrixT();
    // solve (T - (lambda - deflation-on-chi0) I) y = U^H chi1; the deflation
    // only shifts the chi_0 direction, which chi_1 has no component in.
    Vector y = uchi1_;
    Matrix Ts = T;
    Ts.diagonal().array() -= lambda;
    y = Ts.triangularView<Eigen::Upper>().solve(y);
    const Complex val = chi1_.transpose() * (schur_.matrixU() * y);
    return (1.0 + s_ * s_) * val;
  }

  double s() const { return s_; }

 private:
  static constexpr double kDeflation = 32.0;
  double s_ = 0.0;
  double mu_ = 0.0;
  Eigen::ComplexSchur<Matrix> schur_;
  Vector uchi1_;
  Vector chi1_;
};

inline Complex dispersion_eval(const CollisionAssembly& asmbl, Complex lambda,
                               double s) {
  return DispersionEvaluator(asmbl, s)(lambda);
}

/// One row of a spectral-gap scan.
struct GapScanRow {
  double s = 0.0;
  double max_re_resolved = std::numeric_limits<double>::quiet_NaN();
  int resolved_count = 0;
};

inline std::vector<GapScanRow> gap_scan(ModeKind kind, const CollisionAssembly& asmbl,
                                        const std::vector<double>& s_grid,
                                        double a = 1.0, double b = 1.0,
                                        int threads = 0) {
  SpectrumOptions opts;
  opts.nu0 = asmbl.gap.nu0;
  std::vector<GapScanRow> rows(s_grid.size());
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= s_grid.size()) return;
      const ModeOperator mode = assemble_mode(kind, s_grid[i], asmbl, a, b);
      const auto pairs = eigens(mode, asmbl.basis, opts);
      GapScanRow row;
      row.s = s_grid[i];
      for (const auto& p : pairs)
        if (p.resolved) {
          ++row.resolved_count;
          if (std::isnan(row.max_re_resolved) || p.lambda.real() > row.max_re_resolved)
            row.max_re_resolved = p.lambda.real();
        }
      rows[i] = row;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

/// Winding-number scan for roots of lambda = D(lambda, s) over a rectangle in
/// the lambda plane, per frequency. The total winding of g = lambda - D along
/// the grid cells counts roots with multiplicity; the root-free statement of
/// the gap lemma corresponds to an identically zero count.
struct DispersionScanResult {
  int total_winding = 0;
  double min_abs_g = std::numeric_limits<double>::infinity();
  double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
};

inline DispersionScanResult dispersion_root_scan(const CollisionAssembly& asmbl,
                                                 double s, double re_lo, double re_hi,
                                                 double im_lo, double im_hi, int n_re,
                                                 int n_im) {
  DispersionEvaluator D(asmbl, s);
  DispersionScanResult res;
  res.re_lo = re_lo;
  res.re_hi = re_hi;
  res.im_lo = im_lo;
  res.im_hi = im_hi;
  Eigen::MatrixXcd g(n_re + 1, n_im + 1);
  for (int i = 0; i <= n_re; ++i)
    for (int j = 0; j <= n_im; ++j) {
      const Complex lam(re_lo + (re_hi - re_lo) * i / n_re,
                        im_lo + (im_hi - im_lo) * j / n_im);
      g(i, j) = lam - D(lam);
      res.min_abs_g = std::min(res.min_abs_g, std::abs(g(i, j)));
    }

  // argument increment along a segment, subdividing until each step is < pi/2
  std::function<double(Complex, Complex, Complex, Complex, int)> darg =
      [&](Complex za, Complex zb, Complex ga, Complex gb, int depth) -> double {
    const double d = std::arg(gb / ga);
    if (std::abs(d) < M_PI / 2.0 || depth >= 24) return d;
    const Complex zm = 0.5 * (za + zb);
    const Complex gm = zm - D(zm);
    return darg(za, zm, ga, gm, depth + 1) + darg(zm, zb, gm, gb, depth + 1);
  };
  auto node = [&](int i, int j) {
    return Complex(re_lo + (re_hi - re_lo) * i / n_re,
                   im_lo + (im_hi - im_lo) * j / n_im);
  };
  double total = 0.0;
  for (int i = 0; i < n_re; ++i) {
    total += darg(node(i, 0), node(i + 1, 0), g(i, 0), g(i + 1, 0), 0);
    total -= darg(node(i, n_im), node(i + 1, n_im), g(i, n_im), g(i + 1, n_im), 0);
  }
  for (int j = 0; j < n_im; ++j) {
    total += darg(node(n_re, j), node(n_re, j + 1), g(n_re, j), g(n_re, j + 1), 0);
    total -= darg(node(0, j), node(0, j + 1), g(0, j), g(0, j + 1), 0);
  }
  res.total_winding = static_cast<int>(std::lround(total / (2.0 * M_PI)));
  return res;
}

}  // namespace vpblab
