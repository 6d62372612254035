#pragma once

#include "lrmr/sensing.hpp"
#include "lrmr/structures.hpp"

#include <span>
#include <string>

namespace lrmr {

/// Lower bound on E||X - Xhat||_F^2 for unbiased estimators. When the bound
/// does not exist for the instance, `valid` is false, `value` is NaN and
/// `diagnostic` says why.
struct CrbResult
{
  double      value;
  bool        valid;
  std::string diagnostic;

  static CrbResult ok(double value, std::string diagnostic = {});
  static CrbResult invalid(std::string diagnostic);
};

/// Orthonormal basis of the tangent space of the rank-r manifold at X:
/// P = [V1 kron U0, V0 kron U0, V0 kron U1], np x (r(n+p) - r^2).
struct TangentBasis
{
  Matrix P;
  Matrix U0, U1, V0, V1;
};

/// Throws std::domain_error when sigma_r / sigma_1 <= 1e-10.
TangentBasis tangent_basis(Matrix const &X, Eigen::Index r);

/// tr((P^T A^T C^-1 A P)^-1), valid when rank(A P) = r(n+p) - r^2.
CrbResult crb_unstructured(SensingOperator const &op, NoiseModel const &noise, Matrix const &X, Eigen::Index r);

/// Delta A^T C^-1 A Delta^T for a k x np parameter Jacobian Delta.
Matrix fim(SensingOperator const &op, NoiseModel const &noise, Matrix const &delta);

/// tr(Delta^T J^-1 Delta) with Delta = (dg/dalpha)^T S^T for the canonical
/// controllable Hankel parametrization. Invalid when cond(J) >= 1e12.
CrbResult crb_hankel(SensingOperator const &op, NoiseModel const &noise, HankelParams const &params, Eigen::Index n,
                     Eigen::Index p);

/// tr(Delta^T J^+ Delta) for X = M M^T. Invalid when the rows of Delta are
/// not inside the range of J, ||(I - J J^+) Delta||_F > 1e-6 ||Delta||_F.
CrbResult crb_psd(SensingOperator const &op, NoiseModel const &noise, PsdFactor const &factor);

/// 10 log10(mean energy / mean CRB). Throws std::domain_error on empty or
/// mismatched inputs.
double crb_to_srer_bound(std::span<double const> crb_values, std::span<double const> signal_energies);

} // namespace lrmr
