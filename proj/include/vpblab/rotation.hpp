#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "vpblab/basis.hpp"

namespace vpblab {

namespace detail {

/// Ladder matrices on the polynomial part of the basis: multiplication by
/// v_axis (X) and differentiation d/dv_axis (D), both exact through the
/// normalized-Hermite three-term relations. X is truncated at the degree
/// cutoff; D is degree-lowering and needs no truncation.
inline RealMatrix axis_multiplication(const BasisSet& basis, int axis) {
  const int dim = basis.dimension();
  RealMatrix X = RealMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    auto a = basis.index_map()[i];
    const int k = a[axis];
    a[axis] = k + 1;
    if (const int up = basis.find(a[0], a[1], a[2]); up >= 0)
      X(up, i) += std::sqrt(static_cast<double>(k + 1));
    if (k >= 1) {
      a[axis] = k - 1;
      X(basis.find(a[0], a[1], a[2]), i) += std::sqrt(static_cast<double>(k));
    }
  }
  return X;
}

inline RealMatrix axis_derivative(const BasisSet& basis, int axis) {
  const int dim = basis.dimension();
  RealMatrix D = RealMatrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    auto a = basis.index_map()[i];
    const int k = a[axis];
    if (k >= 1) {
      a[axis] = k - 1;
      D(basis.find(a[0], a[1], a[2]), i) += std::sqrt(static_cast<double>(k));
    }
  }
  return D;
}

}  // namespace detail

/// Orthogonal projection of operators onto the commutant of the SO(3) action
/// on the truncated basis (which is rotation-invariant as a space, being a
/// direct sum of total-degree shells). The angular-momentum generators
/// A_k = v_i d_j - v_j d_i are degree-preserving and exactly antisymmetric,
/// so the projection is exact up to rounding. Averaging a collision matrix
/// over rotations this way removes the anisotropic part of the sampling
/// error while leaving the physical (isotropic) operator untouched.
class Isotropizer {
 public:
  explicit Isotropizer(const BasisSet& basis) {
    const int dim = basis.dimension();
    RealMatrix X[3], D[3];
    for (int ax = 0; ax < 3; ++ax) {
      X[ax] = detail::axis_multiplication(basis, ax);
      D[ax] = detail::axis_derivative(basis, ax);
    }
    const RealMatrix A1 = X[1] * D[2] - X[2] * D[1];
    const RealMatrix A2 = X[2] * D[0] - X[0] * D[2];
    const RealMatrix A3 = X[0] * D[1] - X[1] * D[0];
    const RealMatrix casimir = -(A1 * A1 + A2 * A2 + A3 * A3);

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(casimir);
    const RealVector ev = es.eigenvalues();
    const RealMatrix U = es.eigenvectors();

    const Matrix Jz = Complex(0, 1) * A3.cast<Complex>();
    const Matrix Jminus = Complex(0, 1) * A1.cast<Complex>() - A2.cast<Complex>();

    // group eigenvectors into isotypic components by l(l+1)
    int i = 0;
    while (i < dim) {
      const int l = static_cast<int>(std::lround((std::sqrt(4.0 * ev[i] + 1.0) - 1.0) / 2.0));
      int j = i;
      while (j < dim &&
             std::lround((std::sqrt(4.0 * ev[j] + 1.0) - 1.0) / 2.0) == l)
        ++j;
      const Matrix comp = U.middleCols(i, j - i).cast<Complex>();
      i = j;

      // highest-weight (m = l) subspace inside the component
      Matrix Jzb = comp.adjoint() * Jz * comp;
      Eigen::SelfAdjointEigenSolver<Matrix> esz(Jzb);
      std::vector<int> sel;
      for (int k = 0; k < esz.eigenvalues().size(); ++k)
        if (std::abs(esz.eigenvalues()[k] - l) < 0.4) sel.push_back(k);
      Matrix hw(comp.rows(), sel.size());
      for (size_t k = 0; k < sel.size(); ++k)
        hw.col(k) = comp * esz.eigenvectors().col(sel[k]);

      Block blk;
      blk.l = l;
      blk.m_bases.reserve(2 * l + 1);
      blk.m_bases.push_back(hw);
      for (int m = l; m > -l; --m) {
        const double nrm = std::sqrt(static_cast<double>(l) * (l + 1) - static_cast<double>(m) * (m - 1));
        blk.m_bases.push_back(Jminus * blk.m_bases.back() / nrm);
      }
      blocks_.push_back(std::move(blk));
    }
  }

  /// Project a (real, basis-sized) operator matrix onto the commutant.
  RealMatrix apply(const RealMatrix& M) const {
    const Matrix Mc = M.cast<Complex>();
    Matrix out = Matrix::Zero(M.rows(), M.cols());
    for (const auto& blk : blocks_) {
      const int nm = static_cast<int>(blk.m_bases.size());
      Matrix avg = Matrix::Zero(blk.m_bases[0].cols(), blk.m_bases[0].cols());
      for (const auto& B : blk.m_bases) avg += B.adjoint() * Mc * B;
      avg /= static_cast<double>(nm);
      for (const auto& B : blk.m_bases) out += B * avg * B.adjoint();
    }
    return out.real();
  }

 private:
  struct Block {
    int l = 0;
    std::vector<Matrix> m_bases;  // dim x multiplicity, for m = l down to -l
  };
  std::vector<Block> blocks_;
};

/// Exact matrix of the basis change induced by an orthogonal map v -> R^T v,
/// computed by quadrature (exact for polynomial integrands at this order).
/// Used to probe rotational invariance of assembled operators.
inline RealMatrix rotation_representation(const BasisSet& basis,
                                          const Eigen::Matrix3d& R) {
  const auto& quad = basis.quadrature();
  const Eigen::MatrixX3d rotated = quad.nodes * R;  // row p: R^T * node_p
  const RealMatrix phi = basis.evaluate_at(quad.nodes);
  const RealMatrix phi_rot = basis.evaluate_at(rotated);
  return phi.transpose() * (quad.weights.asDiagonal() * phi_rot);
}

}  // namespace vpblab
