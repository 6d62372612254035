#pragma once

#include "lrmr/numerics.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

namespace lrmr::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng &rng)
{
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix                           M(rows, cols);
  for (Eigen::Index k = 0; k < M.size(); ++k) { M.data()[k] = unit(rng); }
  return M;
}

inline Vector random_vector(Eigen::Index size, Rng &rng) { return random_matrix(size, 1, rng).col(0); }

inline Matrix random_symmetric(Eigen::Index n, Rng &rng)
{
  Matrix const M = random_matrix(n, n, rng);
  return 0.5 * (M + M.transpose());
}

inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng &rng)
{
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline double rel_diff(Matrix const &a, Matrix const &b)
{
  double const scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Central finite-difference Jacobian of f at x: column k is
/// (f(x + h e_k) - f(x - h e_k)) / 2h.
inline Matrix finite_difference_jacobian(std::function<Vector(Vector const &)> const &f, Vector const &x,
                                         double step = 1e-6)
{
  Vector const f0 = f(x);
  Matrix       J(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    J.col(k) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return J;
}

/// Explicit Kronecker product, used only as an oracle.
inline Matrix kron(Matrix const &A, Matrix const &B)
{
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) { K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B; }
  }
  return K;
}

} // namespace lrmr::testing
