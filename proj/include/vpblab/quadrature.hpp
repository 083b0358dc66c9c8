#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vpblab {

/// One-dimensional Gauss quadrature for the standard Gaussian weight
/// gamma(x) = exp(-x^2/2)/sqrt(2*pi), i.e. probabilists' Gauss-Hermite.
/// An n-point rule integrates polynomials up to degree 2n-1 exactly.
struct GaussHermite1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // sum to 1

  explicit GaussHermite1D(int n) {
    if (n < 1) throw std::invalid_argument("GaussHermite1D: n must be positive");
    // Golub-Welsch on the Jacobi matrix of the He_k recurrence (beta_k = k).
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
      const double b = std::sqrt(static_cast<double>(k));
      J(k, k - 1) = b;
      J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
      const double w0 = es.eigenvectors()(0, i);
      weights[i] = w0 * w0;
    }
  }
};

/// Tensorized 3-D rule for the weight M(v) = (2*pi)^{-3/2} exp(-|v|^2/2).
struct TensorQuadrature3D {
  Eigen::MatrixX3d nodes;   // one row per point
  Eigen::VectorXd weights;  // sum to 1
  int points_per_axis = 0;

  explicit TensorQuadrature3D(int n) : points_per_axis(n) {
    GaussHermite1D q1(n);
    const int total = n * n * n;
    nodes.resize(total, 3);
    weights.resize(total);
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++p) {
          nodes(p, 0) = q1.nodes[i];
          nodes(p, 1) = q1.nodes[j];
          nodes(p, 2) = q1.nodes[k];
          weights[p] = q1.weights[i] * q1.weights[j] * q1.weights[k];
        }
  }
};

}  // namespace vpblab
