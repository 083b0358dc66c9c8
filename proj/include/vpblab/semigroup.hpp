#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "vpblab/mode_operators.hpp"
#include "vpblab/spectral.hpp"

namespace vpblab {

/// Propagates one Fourier mode under exp(t * mode.matrix). Diagonalizes once
/// and exponentiates eigenvalues per time; falls back to scaling-and-squaring
/// when the eigenvector matrix is too ill-conditioned to invert reliably.
class ModePropagator {
 public:
  explicit ModePropagator(const ModeOperator& mode, double cond_limit = 1e8)
      : matrix_(mode.matrix) {
    Eigen::ComplexEigenSolver<Matrix> es(mode.matrix);
    if (es.info() == Eigen::Success) {
      lambda_ = es.eigenvalues();
      V_ = es.eigenvectors();
      Eigen::PartialPivLU<Matrix> lu(V_);
      Vinv_ = lu.inverse();
      cond_ = V_.cwiseAbs().rowwise().sum().maxCoeff() *
              Vinv_.cwiseAbs().rowwise().sum().maxCoeff();
      diagonalized_ = cond_ < cond_limit;
    }
    if (!diagonalized_ && mode.matrix.rows() > 0) {
      // keep the matrix; states computed by expm per time
    }
  }

  bool diagonalized() const { return diagonalized_; }
  double condition_estimate() const { return cond_; }

  VelocityFunction at(double t, const VelocityFunction& f0) const {
    if (diagonalized_) {
      const Vector c = Vinv_ * f0;
      return V_ * (lambda_.array() * t).exp().matrix().asDiagonal() * c;
    }
    const Matrix expm = (matrix_ * t).exp();
    return expm * f0;
  }

 private:
  Matrix matrix_;
  Vector lambda_;
  Matrix V_, Vinv_;
  double cond_ = std::numeric_limits<double>::infinity();
  bool diagonalized_ = false;
};

struct ModeTrajectory {
  double s = 0.0;
  std::vector<double> times;
  std::vector<VelocityFunction> states;
};

inline ModeTrajectory propagate_mode(const ModeOperator& mode,
                                     const VelocityFunction& f0,
                                     const std::vector<double>& times) {
  for (size_t i = 0; i + 1 < times.size(); ++i)
    if (times[i + 1] <= times[i])
      throw std::invalid_argument("propagate_mode: times must be increasing");
  if (!times.empty() && times.front() < 0.0)
    throw std::invalid_argument("propagate_mode: times must start at >= 0");
  ModePropagator prop(mode);
  ModeTrajectory traj;
  traj.s = mode.s;
  traj.times = times;
  traj.states.reserve(times.size());
  for (const double t : times)
    traj.states.push_back(t == 0.0 ? f0 : prop.at(t, f0));
  return traj;
}

/// Radial frequency grid with trapezoidal weights for Int_{R^3} dxi
/// reconstruction = Int 4 pi s^2 (.) ds over radially symmetric data.
struct RadialGrid {
  std::vector<double> s;
  std::vector<double> weight;  // includes the 4 pi s^2 factor

  static RadialGrid geometric(double s_min, double s_max, int n) {
    if (!(s_min > 0.0) || s_max <= s_min || n < 2)
      throw std::invalid_argument("RadialGrid: need 0 < s_min < s_max, n >= 2");
    RadialGrid g;
    g.s.resize(n);
    const double ratio = std::pow(s_max / s_min, 1.0 / (n - 1));
    for (int i = 0; i < n; ++i) g.s[i] = s_min * std::pow(ratio, i);
    g.weight.resize(n);
    for (int i = 0; i < n; ++i) {
      const double lo = i == 0 ? g.s[0] : 0.5 * (g.s[i - 1] + g.s[i]);
      const double hi = i == n - 1 ? g.s[n - 1] : 0.5 * (g.s[i] + g.s[i + 1]);
      g.weight[i] = 4.0 * M_PI * g.s[i] * g.s[i] * (hi - lo);
    }
    return g;
  }
};

/// Radial-in-xi initial data: a velocity profile per grid point.
struct InitialData {
  RadialGrid grid;
  std::vector<VelocityFunction> profile;
  std::string description;
};

/// The Gaussian-in-x example profile: hat f_0(xi) = d0 e^{r^2/2} e^{-|xi|^2/2}
/// (chi_0 + d1 chi_4). Checks the hypotheses of the two-sided decay theorem
/// on the grid: a mass lower bound, zero momentum, and an energy-moment lower
/// bound relative to the mass moment.
inline InitialData build_initial_gaussian(const BasisSet& basis, const RadialGrid& grid,
                                          double d0, double d1, double r_param) {
  if (d0 <= 0.0 || d1 <= 0.0)
    throw std::invalid_argument("build_initial_gaussian: requires d0, d1 > 0");
  InitialData data;
  data.grid = grid;
  data.description = "gaussian profile d0=" + std::to_string(d0) +
                     " d1=" + std::to_string(d1) + " r=" + std::to_string(r_param);
  const VelocityFunction shape =
      (basis.chi(0) + d1 * basis.chi(4)).cast<Complex>();
  const double amp = d0 * std::exp(0.5 * r_param * r_param);
  data.profile.reserve(grid.s.size());
  for (const double s : grid.s)
    data.profile.push_back(amp * std::exp(-0.5 * s * s) * shape);

  // hypothesis checks on s <= r_param
  double inf_mass = std::numeric_limits<double>::infinity();
  double sup_mass = 0.0, inf_energy = std::numeric_limits<double>::infinity();
  double max_momentum = 0.0;
  for (size_t i = 0; i < grid.s.size(); ++i) {
    if (grid.s[i] > r_param) continue;
    const auto& f = data.profile[i];
    const double mass = std::abs(basis.chi(0).cast<Complex>().dot(f));
    const double energy = std::abs(basis.chi(4).cast<Complex>().dot(f));
    for (int j = 1; j <= 3; ++j)
      max_momentum =
          std::max(max_momentum, std::abs(basis.chi(j).cast<Complex>().dot(f)));
    inf_mass = std::min(inf_mass, mass);
    sup_mass = std::max(sup_mass, mass);
    inf_energy = std::min(inf_energy, energy);
  }
  const double d1_effective = d1 * std::exp(-0.5 * r_param * r_param);
  if (inf_mass < d0 * (1.0 - 1e-12))
    throw std::runtime_error("build_initial_gaussian: mass lower bound violated");
  if (max_momentum > 1e-14)
    throw std::runtime_error("build_initial_gaussian: momentum is not zero");
  if (inf_energy < d1_effective * sup_mass * (1.0 - 1e-12))
    throw std::runtime_error("build_initial_gaussian: energy lower bound violated");
  return data;
}

/// Arbitrary radial initial data; the caller owns the physics. The zero
/// momentum condition is only verified when requested.
inline InitialData build_initial_custom(const BasisSet& basis, const RadialGrid& grid,
                                        std::vector<VelocityFunction> profile,
                                        std::string description,
                                        bool require_zero_momentum = false) {
  if (profile.size() != grid.s.size())
    throw std::invalid_argument("build_initial_custom: one profile per grid point");
  if (require_zero_momentum)
    for (const auto& f : profile)
      for (int j = 1; j <= 3; ++j)
        if (std::abs(basis.chi(j).cast<Complex>().dot(f)) > 1e-12 * f.norm())
          throw std::runtime_error("build_initial_custom: momentum is not zero");
  InitialData data;
  data.grid = grid;
  data.profile = std::move(profile);
  data.description = std::move(description);
  return data;
}

enum class NormQuantity { Macro0, Macro1, Macro2, Macro3, Macro4, MicroP1, Field, Total };

inline const char* norm_quantity_name(NormQuantity q) {
  switch (q) {
    case NormQuantity::Macro0: return "macro0";
    case NormQuantity::Macro1: return "macro1";
    case NormQuantity::Macro2: return "macro2";
    case NormQuantity::Macro3: return "macro3";
    case NormQuantity::Macro4: return "macro4";
    case NormQuantity::MicroP1: return "micro_p1";
    case NormQuantity::Field: return "field";
    case NormQuantity::Total: return "total";
  }
  return "?";
}

struct DecayModelFit {
  enum class Model { Algebraic, Exponential, Undetermined } selected = Model::Undetermined;
  double exponent = 0.0;       // value ~ C (1+t)^exponent
  double rate = 0.0;           // value ~ C e^{rate t} (rate < 0 for decay)
  double residual_algebraic = 0.0;
  double residual_exponential = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
};

struct DecaySeries {
  NormQuantity quantity = NormQuantity::Macro0;
  int derivative_order = 0;
  ModeKind family = ModeKind::Bm;
  std::vector<double> times;
  std::vector<double> values;
  DecayModelFit fit;
};

/// Parseval reconstruction of a global space-time norm from per-mode
/// trajectories. The field weight follows the theorem being tested: for the
/// screened system it is the H^1_x norm of (I - Delta_x)^{-1} n (mass moment
/// weighted by 1/(1+s^2)); for the bipolar system it is the L^2_x norm of
/// grad_x Delta^{-1} n (weight 1/s^2).
inline DecaySeries global_norms(const std::vector<ModeTrajectory>& trajs,
                                const RadialGrid& grid, const BasisSet& basis,
                                NormQuantity quantity, int k, ModeKind family) {
  if (trajs.size() != grid.s.size())
    throw std::invalid_argument("global_norms: one trajectory per grid point required");
  DecaySeries out;
  out.quantity = quantity;
  out.derivative_order = k;
  out.family = family;
  out.times = trajs.front().times;
  const size_t nt = out.times.size();
  out.values.assign(nt, 0.0);

  const RealMatrix chi = basis.chi_all();
  for (size_t i = 0; i < trajs.size(); ++i) {
    const double s = grid.s[i];
    double w = grid.weight[i] * std::pow(s, 2 * k);
    if (quantity == NormQuantity::Field) {
      if (family == ModeKind::B)
        w = grid.weight[i] * std::pow(s, 2 * k) / (s * s);
      else
        w = grid.weight[i] * std::pow(s, 2 * k) / (1.0 + s * s);
    }
    for (size_t ti = 0; ti < nt; ++ti) {
      const VelocityFunction& f = trajs[i].states[ti];
      double contrib = 0.0;
      switch (quantity) {
        case NormQuantity::Macro0:
        case NormQuantity::Macro1:
        case NormQuantity::Macro2:
        case NormQuantity::Macro3:
        case NormQuantity::Macro4: {
          const int j = static_cast<int>(quantity);
          contrib = std::norm(chi.col(j).cast<Complex>().dot(f));
          break;
        }
        case NormQuantity::Field:
          contrib = std::norm(chi.col(0).cast<Complex>().dot(f));
          break;
        case NormQuantity::MicroP1: {
          const Eigen::VectorXcd macro = chi.transpose().cast<Complex>() * f;
          contrib = f.squaredNorm() - macro.squaredNorm();
          break;
        }
        case NormQuantity::Total:
          contrib = f.squaredNorm();
          break;
      }
      out.values[ti] += w * std::max(0.0, contrib);
    }
  }
  for (auto& v : out.values) v = std::sqrt(v);
  return out;
}

/// Fits both candidate decay models on [t_lo, t_hi] and keeps the one with
/// the smaller log-space residual; refuses to decide when both fit poorly.
inline DecayModelFit fit_decay(const DecaySeries& series, double t_lo, double t_hi,
                               double residual_threshold = 0.5) {
  std::vector<double> ts, lv;
  for (size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (t >= t_lo && t <= t_hi && series.values[i] > 0.0) {
      ts.push_back(t);
      lv.push_back(std::log(series.values[i]));
    }
  }
  if (ts.size() < 4)
    throw std::invalid_argument("fit_decay: fewer than 4 usable samples in window");
  auto regress = [&](const std::vector<double>& x) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      sx += x[i];
      sy += lv[i];
      sxx += x[i] * x[i];
      sxy += x[i] * lv[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icept = (sy - slope * sx) / n;
    double r2 = 0.0;
    for (size_t i = 0; i < n; ++i) r2 += std::pow(lv[i] - slope * x[i] - icept, 2);
    return std::make_pair(slope, std::sqrt(r2 / n));
  };
  std::vector<double> logt(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) logt[i] = std::log1p(ts[i]);
  const auto [p, res_a] = regress(logt);
  const auto [r, res_e] = regress(ts);

  DecayModelFit fit;
  fit.exponent = p;
  fit.rate = r;
  fit.residual_algebraic = res_a;
  fit.residual_exponential = res_e;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  if (res_a > residual_threshold && res_e > residual_threshold)
    fit.selected = DecayModelFit::Model::Undetermined;
  else
    fit.selected = res_a <= res_e ? DecayModelFit::Model::Algebraic
                                  : DecayModelFit::Model::Exponential;
  return fit;
}

/// Propagates the whole radial family of modes; parallel over grid points.
inline std::vector<ModeTrajectory> propagate_family(
    ModeKind kind, const CollisionAssembly& asmbl, const InitialData& data,
    const std::vector<double>& times, double a = 1.0, double b = 1.0,
    int threads = 0) {
  const size_t n = data.grid.s.size();
  std::vector<ModeTrajectory> trajs(n);
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      const ModeOperator mode = assemble_mode(kind, data.grid.s[i], asmbl, a, b);
      trajs[i] = propagate_mode(mode, data.profile[i], times);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return trajs;
}

/// Leading-order macroscopic moments of the low-frequency semigroup part,
/// evaluated from tracked branch data: returns ((S1 f, chi_0),
/// (S1 f, v sqrt(M)) . e_1, (S1 f, chi_4)) with the O(s) remainder dropped.
struct S1Macro {
  Complex mass;
  Complex momentum1;
  Complex energy;
};

inline S1Macro s1_macro(const std::vector<SpectrumBranch>& branches, double t,
                        double s, Complex n0, Complex m0_omega, Complex q0,
                        double r0) {
  if (s > r0)
    throw std::invalid_argument("s1_macro: s exceeds the low-frequency radius r0");
  auto lambda_at = [&](int label) {
    for (const auto& br : branches)
      if (br.label == label) {
        // nearest tracked sample
        const auto& smp = *std::min_element(
            br.samples.begin(), br.samples.end(),
            [&](const BranchSample& x, const BranchSample& y) {
              return std::abs(x.s - s) < std::abs(y.s - s);
            });
        return smp.lambda;
      }
    throw std::invalid_argument("s1_macro: branch data missing label");
  };
  const double sq2 = std::sqrt(2.0), sq3 = std::sqrt(3.0);
  const Complex e1 = std::exp(lambda_at(1) * t);
  const Complex em1 = std::exp(lambda_at(-1) * t);
  const Complex e0 = std::exp(lambda_at(0) * t);
  auto acoustic = [&](double j) {
    return (sq3 / 2.0) * n0 - j * (sq2 / 2.0) * m0_omega + (sq2 / 4.0) * q0;
  };
  const Complex theta = (sq2 / 2.0) * n0 - (sq3 / 2.0) * q0;
  S1Macro out;
  out.mass = (sq3 / 4.0) * (e1 * acoustic(1.0) + em1 * acoustic(-1.0)) +
             (sq2 / 4.0) * e0 * theta;
  out.momentum1 = -(sq2 / 2.0) * (e1 * acoustic(1.0) - em1 * acoustic(-1.0));
  out.energy = (sq2 / 4.0) * (e1 * acoustic(1.0) + em1 * acoustic(-1.0)) -
               (sq3 / 2.0) * e0 * theta;
  return out;
}

}  // namespace vpblab
