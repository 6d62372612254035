#pragma once

#include "lrmr/numerics.hpp"

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace lrmr {

/// Entry (row, col) of an n x p matrix, zero-based.
struct MatrixIndex
{
  Eigen::Index row;
  Eigen::Index col;
};

/// Dense linear map from n x p matrices to m measurements, y = A vec(X).
/// Immutable once built; selection operators additionally keep their index
/// list so apply() can gather instead of multiplying.
class SensingOperator
{
public:
  SensingOperator(Matrix a, Eigen::Index n, Eigen::Index p);

  static SensingOperator selection(Eigen::Index n, Eigen::Index p, std::vector<MatrixIndex> const &omega);

  Matrix const &matrix() const { return a_; }
  Eigen::Index  n() const { return n_; }
  Eigen::Index  p() const { return p_; }
  Eigen::Index  m() const { return a_.rows(); }
  bool          is_selection() const { return selected_.has_value(); }

  /// A * vec(X).
  Vector apply(Matrix const &X) const;

  /// A^T y reshaped to n x p.
  Matrix adjoint(Vector const &y) const;

  /// A (I_p kron L), m x (r p), assembled block by block.
  Matrix factored_for_right(Matrix const &L) const;

  /// A (R^T kron I_n), m x (n r), assembled block by block.
  Matrix factored_for_left(Matrix const &R) const;

private:
  Matrix                                   a_;
  Eigen::Index                             n_;
  Eigen::Index                             p_;
  std::optional<std::vector<Eigen::Index>> selected_; // linear indices into vec(X)
};

/// Entries i.i.d. N(0, 1/m).
SensingOperator make_gaussian_operator(Eigen::Index n, Eigen::Index p, Eigen::Index m, Rng &rng);

/// Row k selects entry omega[k] of X. Throws std::domain_error on
/// out-of-range or duplicate indices.
SensingOperator make_selection_operator(Eigen::Index n, Eigen::Index p, std::vector<MatrixIndex> const &omega);

inline Vector apply(SensingOperator const &op, Matrix const &X) { return op.apply(X); }
inline Matrix factored_operator_R(SensingOperator const &op, Matrix const &L) { return op.factored_for_right(L); }
inline Matrix factored_operator_L(SensingOperator const &op, Matrix const &R) { return op.factored_for_left(R); }

/// Measurement noise: i.i.d. N(0, sigma2) or a general SPD covariance.
/// sigma2 == 0 is accepted and means noiseless measurements.
class NoiseModel
{
public:
  struct Iid
  {
    double sigma2;
  };
  struct General
  {
    Matrix C;
  };

  static NoiseModel iid(double sigma2);
  static NoiseModel general(Matrix C);

  bool   is_iid() const { return std::holds_alternative<Iid>(kind_); }
  double sigma2() const;       // iid only
  Matrix covariance(Eigen::Index m) const;

  /// W with W C W^T = I (W = I/sigma or the inverse Cholesky factor).
  Matrix whiten(Matrix const &B) const;

  /// One draw of the noise vector.
  Vector draw(Eigen::Index m, Rng &rng) const;

private:
  explicit NoiseModel(std::variant<Iid, General> kind, Matrix chol = {});
  std::variant<Iid, General> kind_;
  Matrix                     chol_; // lower Cholesky factor of C (General only)
};

/// y = A vec(X) + noise.
Vector measure(SensingOperator const &op, Matrix const &X, NoiseModel const &noise, Rng &rng);

/// Symmetric inverse square root of an SPD matrix. Throws std::domain_error
/// when C is not positive definite.
Matrix inverse_sqrt_spd(Matrix const &C);

/// (C^{-1/2} A, C^{-1/2} y); afterwards the noise covariance is I_m.
std::pair<SensingOperator, Vector> prewhiten(SensingOperator const &op, Vector const &y, Matrix const &C);

} // namespace lrmr
