#pragma once

#include <Eigen/Dense>

namespace tflow {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Where along an arc the position weights are sampled.
enum class PositionWeighting {
  Linear,      // x/l upstream, (l-x)/l downstream, midpoint rule over cells
  PointQueue,  // weight 1 everywhere: upstream term at x = l, downstream term at x = 0
};

/// Midpoint-rule weights of (x/l) on a uniform grid of `cells` cells, unscaled by dx.
template <typename Scalar>
ArrayX<Scalar> upstream_position_weights(Eigen::Index cells,
                                         PositionWeighting mode = PositionWeighting::Linear) {
  if (mode == PositionWeighting::PointQueue) return ArrayX<Scalar>::Ones(cells);
  return (ArrayX<Scalar>::LinSpaced(cells, Scalar(0), Scalar(cells - 1)) + Scalar(0.5)) /
         Scalar(cells);
}

/// Midpoint-rule weights of ((l-x)/l).
template <typename Scalar>
ArrayX<Scalar> downstream_position_weights(Eigen::Index cells,
                                           PositionWeighting mode = PositionWeighting::Linear) {
  if (mode == PositionWeighting::PointQueue) return ArrayX<Scalar>::Ones(cells);
  return Scalar(1) - upstream_position_weights<Scalar>(cells);
}

/// Unit kernel K_ij = |1 - (i + j + 1)/N|, the midpoint sample of |l - x - x'|/l.
/// The double integral of a cell profile rho is dx^2 * rho^T K rho.
template <typename Scalar>
MatrixX<Scalar> lyapunov_kernel(Eigen::Index cells) {
  MatrixX<Scalar> k(cells, cells);
  const Scalar n = Scalar(cells);
  for (Eigen::Index j = 0; j < cells; ++j) {
    for (Eigen::Index i = 0; i < cells; ++i) {
      k(i, j) = std::abs(Scalar(1) - Scalar(i + j + 1) / n);
    }
  }
  return k;
}

/// (1/2) c dx^2 rho^T K rho for one commodity profile.
template <typename Scalar, typename Derived>
Scalar arc_energy(const Eigen::MatrixBase<Derived>& rho, const MatrixX<Scalar>& kernel,
                  Scalar cell_length, Scalar weight_constant) {
  return Scalar(0.5) * weight_constant * cell_length * cell_length *
         rho.dot(kernel * rho);
}

}  // namespace tflow
