#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "vpblab/quadrature.hpp"

namespace vpblab {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// A velocity-space element expressed by its coefficients in the basis.
using VelocityFunction = Eigen::VectorXcd;

/// Orthonormal velocity basis: tensor products of normalized probabilists'
/// Hermite polynomials times sqrt(M), truncated by total degree. The five
/// collision invariants are exact finite combinations of basis elements.
class BasisSet {
 public:
  explicit BasisSet(int degree_cutoff)
      : degree_cutoff_(degree_cutoff),
        quadrature_(degree_cutoff + 6) {
    if (degree_cutoff < 4)
      throw std::invalid_argument(
          "BasisSet: degree_cutoff must be >= 4 so that chi_4 and the "
          "Burnett-type functions v1*chi_1, v1*chi_4 are representable");
    if (degree_cutoff > 63)
      throw std::invalid_argument("BasisSet: degree_cutoff too large");
    for (int tot = 0; tot <= degree_cutoff; ++tot)
      for (int a = tot; a >= 0; --a)
        for (int b = tot - a; b >= 0; --b)
          index_map_.push_back({a, b, tot - a - b});
    dim_ = static_cast<int>(index_map_.size());
    const int n1 = degree_cutoff + 1;
    lookup_.assign(n1 * n1 * n1, -1);
    for (int i = 0; i < dim_; ++i) {
      const auto& a = index_map_[i];
      lookup_[(a[0] * n1 + a[1]) * n1 + a[2]] = i;
    }
  }

  int dimension() const { return dim_; }
  int degree_cutoff() const { return degree_cutoff_; }
  const std::vector<std::array<int, 3>>& index_map() const { return index_map_; }
  const TensorQuadrature3D& quadrature() const { return quadrature_; }

  int total_degree(int i) const {
    const auto& a = index_map_[i];
    return a[0] + a[1] + a[2];
  }

  int find(int a, int b, int c) const {
    const int n1 = degree_cutoff_ + 1;
    if (a < 0 || b < 0 || c < 0 || a + b + c > degree_cutoff_) return -1;
    return lookup_[(a * n1 + b) * n1 + c];
  }

  /// Values of the normalized 1-D Hermite polynomials he_0..he_n at x.
  static void hermite_row(double x, int n, double* out) {
    out[0] = 1.0;
    if (n >= 1) out[1] = x;
    for (int k = 1; k < n; ++k)
      out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                   std::sqrt(static_cast<double>(k + 1));
  }

  /// Polynomial parts of all basis functions at one velocity point.
  void evaluate(const double v[3], double* out) const {
    constexpr int kMaxDegree = 63;
    const int n = degree_cutoff_;
    double hx[kMaxDegree + 1], hy[kMaxDegree + 1], hz[kMaxDegree + 1];
    hermite_row(v[0], n, hx);
    hermite_row(v[1], n, hy);
    hermite_row(v[2], n, hz);
    for (int i = 0; i < dim_; ++i) {
      const auto& a = index_map_[i];
      out[i] = hx[a[0]] * hy[a[1]] * hz[a[2]];
    }
  }

  /// Dense evaluation matrix at a set of points, one row per point.
  RealMatrix evaluate_at(const Eigen::MatrixX3d& pts) const {
    RealMatrix out(pts.rows(), dim_);
    std::vector<double> buf(dim_);
    for (Eigen::Index p = 0; p < pts.rows(); ++p) {
      const double v[3] = {pts(p, 0), pts(p, 1), pts(p, 2)};
      evaluate(v, buf.data());
      out.row(p) = Eigen::Map<const Eigen::RowVectorXd>(buf.data(), dim_);
    }
    return out;
  }

  /// Gram matrix under the quadrature rule; equals identity up to rounding.
  RealMatrix gram() const {
    const RealMatrix phi = evaluate_at(quadrature_.nodes);
    return phi.transpose() * (quadrature_.weights.asDiagonal() * phi);
  }

  /// Coefficients of the collision invariant chi_j, j = 0..4.
  RealVector chi(int j) const {
    if (j < 0 || j > 4) throw std::out_of_range("chi: index must be in 0..4");
    RealVector c = RealVector::Zero(dim_);
    if (j == 0) {
      c[find(0, 0, 0)] = 1.0;
    } else if (j <= 3) {
      int a[3] = {0, 0, 0};
      a[j - 1] = 1;
      c[find(a[0], a[1], a[2])] = 1.0;
    } else {
      // |v|^2 - 3 = sum_i sqrt(2) he_2(v_i), normalized by sqrt(6)
      const double w = 1.0 / std::sqrt(3.0);
      c[find(2, 0, 0)] = w;
      c[find(0, 2, 0)] = w;
      c[find(0, 0, 2)] = w;
    }
    return c;
  }

  /// All five invariants as columns of a dim x 5 matrix.
  RealMatrix chi_all() const {
    RealMatrix c(dim_, 5);
    for (int j = 0; j < 5; ++j) c.col(j) = chi(j);
    return c;
  }

 private:
  int degree_cutoff_;
  int dim_ = 0;
  std::vector<std::array<int, 3>> index_map_;
  std::vector<int> lookup_;
  TensorQuadrature3D quadrature_;
};

enum class Projector { P0, P1, Pd, Pr };

inline VelocityFunction project(const BasisSet& basis, const VelocityFunction& f,
                                Projector which) {
  switch (which) {
    case Projector::P0: {
      VelocityFunction out = VelocityFunction::Zero(f.size());
      for (int j = 0; j < 5; ++j) {
        const RealVector c = basis.chi(j);
        out += (c.cast<Complex>().dot(f)) * c.cast<Complex>();
      }
      return out;
    }
    case Projector::P1:
      return f - project(basis, f, Projector::P0);
    case Projector::Pd: {
      const RealVector c = basis.chi(0);
      return (c.cast<Complex>().dot(f)) * c.cast<Complex>();
    }
    case Projector::Pr:
      return f - project(basis, f, Projector::Pd);
  }
  throw std::logic_error("project: unreachable");
}

/// The three inner products in use: the plain L^2 product, the 1/|xi|^2
/// mass-weighted product of the bipolar system, and the 1/(1+|xi|^2)
/// screened product of the modified system.
struct ProductKind {
  enum class Kind { Plain, BvpbWeighted, MvpbWeighted } kind = Kind::Plain;
  double s = 0.0;

  static ProductKind plain() { return {Kind::Plain, 0.0}; }
  static ProductKind bvpb(double s) {
    if (s == 0.0)
      throw std::invalid_argument("ProductKind::bvpb: requires s != 0");
    return {Kind::BvpbWeighted, s};
  }
  static ProductKind mvpb(double s) { return {Kind::MvpbWeighted, s}; }

  double mass_weight() const {
    switch (kind) {
      case Kind::Plain: return 0.0;
      case Kind::BvpbWeighted: return 1.0 / (s * s);
      case Kind::MvpbWeighted: return 1.0 / (1.0 + s * s);
    }
    return 0.0;
  }
};

/// (f, g) + w (P_d f, P_d g) with the convention (f, g) = sum_k f_k conj(g_k).
inline Complex inner(const BasisSet& basis, const VelocityFunction& f,
                     const VelocityFunction& g, const ProductKind& p) {
  Complex out = g.dot(f);  // Eigen dot conjugates its *this* argument
  const double w = p.mass_weight();
  if (w != 0.0) {
    const Eigen::VectorXcd c = basis.chi(0).cast<Complex>();
    out += w * (c.dot(f)) * std::conj(c.dot(g));
  }
  return out;
}

inline double weighted_norm(const BasisSet& basis, const VelocityFunction& f,
                            const ProductKind& p) {
  return std::sqrt(std::real(inner(basis, f, f, p)));
}

}  // namespace vpblab
