#pragma once

#include <cmath>

#include "vpblab/quadrature.hpp"

namespace vpblab {

namespace detail {

/// Nodes/weights of an n-point Gauss-Legendre rule on [a, b].
inline void gauss_legendre(int n, double a, double b, Eigen::VectorXd& x,
                           Eigen::VectorXd& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double bk = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = bk;
    J(k - 1, k) = bk;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    w[i] = (b - a) * v0 * v0;
  }
}

}  // namespace detail

/// Hard-sphere collision frequency nu(|v|). The angular integral reduces to
/// 2*pi*|v - v_*| and the remaining Gaussian integral collapses to one radial
/// dimension through the radius density of |v - Z| for Z standard normal:
///   nu(r) = 2*pi * Int_0^inf u^2 / (r*sqrt(2*pi)) *
///           [exp(-(u-r)^2/2) - exp(-(u+r)^2/2)] du.
inline double collision_frequency_radial(double r) {
  static const double nu0_limit = 4.0 * std::sqrt(2.0 * M_PI);
  if (r < 1e-6) return nu0_limit;
  static const auto ref = [] {
    Eigen::VectorXd x, w;
    detail::gauss_legendre(200, -1.0, 1.0, x, w);
    return std::make_pair(x, w);
  }();
  const double lo = std::max(0.0, r - 12.0);
  const double hi = r + 12.0;
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ref.first.size(); ++i) {
    const double u = mid + half * ref.first[i];
    const double d = std::exp(-0.5 * (u - r) * (u - r)) - std::exp(-0.5 * (u + r) * (u + r));
    acc += half * ref.second[i] * u * u * d;
  }
  return 2.0 * M_PI * acc / (r * std::sqrt(2.0 * M_PI));
}

inline double collision_frequency(const double v[3]) {
  return collision_frequency_radial(
      std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
}

}  // namespace vpblab
