#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "vpblab/collision.hpp"
#include "vpblab/rotation.hpp"

namespace vpblab {

enum class ModeKind { E, B, Bm, BmGeneral };

inline const char* mode_kind_name(ModeKind k) {
  switch (k) {
    case ModeKind::E: return "E";
    case ModeKind::B: return "B";
    case ModeKind::Bm: return "Bm";
    case ModeKind::BmGeneral: return "Bm_general";
  }
  return "?";
}

/// Exact multiplication-by-v1 matrix (three-term Hermite recurrence).
inline RealMatrix multiplication_v1(const BasisSet& basis) {
  return detail::axis_multiplication(basis, 0);
}

/// Fourier-mode operator at xi = s e_1, dense in the velocity basis.
struct ModeOperator {
  ModeKind kind = ModeKind::E;
  double s = 0.0;
  double a = 1.0, b = 1.0;  // Bm_general field-equation parameters
  Matrix matrix;
  ProductKind product;
};

inline ProductKind mode_product(ModeKind kind, double s) {
  switch (kind) {
    case ModeKind::E: return ProductKind::plain();
    case ModeKind::B: return ProductKind::bvpb(s);
    case ModeKind::Bm:
    case ModeKind::BmGeneral: return ProductKind::mvpb(s);
  }
  return ProductKind::plain();
}

/// Mode operator at a general wavevector xi; used by the rotational
/// invariance check. The collision part is shared, the transport part is
/// xi_1 V_1 + xi_2 V_2 + xi_3 V_3.
inline ModeOperator assemble_mode_at(ModeKind kind, const Eigen::Vector3d& xi,
                                     const CollisionAssembly& asmbl,
                                     double a = 1.0, double b = 1.0) {
  const double s = xi.norm();
  if (kind == ModeKind::B && s == 0.0)
    throw std::invalid_argument(
        "assemble_mode: kind B requires s > 0 (the 1/|xi|^2 coupling is singular)");
  if (kind == ModeKind::BmGeneral && (a <= 0.0 || b <= 0.0))
    throw std::invalid_argument("assemble_mode: Bm_general requires a, b > 0");

  const BasisSet& basis = asmbl.basis;
  const int dim = basis.dimension();
  RealMatrix Vxi = RealMatrix::Zero(dim, dim);
  for (int ax = 0; ax < 3; ++ax)
    if (xi[ax] != 0.0) Vxi += xi[ax] * detail::axis_multiplication(basis, ax);

  const RealVector chi0 = basis.chi(0);
  const RealVector vxi_chi0 = Vxi * chi0;  // V_xi P_d = (V_xi chi0) chi0^T
  const Complex i1(0.0, 1.0);

  ModeOperator mode;
  mode.kind = kind;
  mode.s = s;
  mode.a = a;
  mode.b = b;
  mode.product = mode_product(kind, s);
  switch (kind) {
    case ModeKind::E:
      mode.matrix = asmbl.L.cast<Complex>() - i1 * Vxi.cast<Complex>();
      break;
    case ModeKind::B:
      mode.matrix = asmbl.L1.cast<Complex>() - i1 * Vxi.cast<Complex>() -
                    (i1 / (s * s)) * (vxi_chi0 * chi0.transpose()).cast<Complex>();
      break;
    case ModeKind::Bm:
      mode.matrix = asmbl.L.cast<Complex>() - i1 * Vxi.cast<Complex>() -
                    (i1 / (1.0 + s * s)) * (vxi_chi0 * chi0.transpose()).cast<Complex>();
      break;
    case ModeKind::BmGeneral:
      mode.matrix = asmbl.L.cast<Complex>() - i1 * Vxi.cast<Complex>() -
                    (i1 / (b + a * s * s)) * (vxi_chi0 * chi0.transpose()).cast<Complex>();
      break;
  }
  return mode;
}

/// Mode operator at xi = s e_1 (the Lemma-3.6 reduction used everywhere).
inline ModeOperator assemble_mode(ModeKind kind, double s,
                                  const CollisionAssembly& asmbl, double a = 1.0,
                                  double b = 1.0) {
  return assemble_mode_at(kind, Eigen::Vector3d(s, 0.0, 0.0), asmbl, a, b);
}

}  // namespace vpblab
