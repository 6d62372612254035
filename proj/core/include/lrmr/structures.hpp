#pragma once

#include "lrmr/numerics.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace lrmr {

enum class StructureKind
{
  Unstructured,
  LinearSubspace,
  Hankel,
  Toeplitz,
  Psd,
};

std::string_view to_string(StructureKind kind);
StructureKind    structure_kind_from_string(std::string_view name);

/// Prior knowledge about X used by the structured solver and the bounds.
/// LinearSubspace carries its basis S (vec(X) = S theta) together with S^+,
/// computed once at construction.
class StructureSpec
{
public:
  static StructureSpec unstructured() { return StructureSpec(StructureKind::Unstructured); }
  static StructureSpec hankel() { return StructureSpec(StructureKind::Hankel); }
  static StructureSpec toeplitz() { return StructureSpec(StructureKind::Toeplitz); }
  static StructureSpec psd() { return StructureSpec(StructureKind::Psd); }
  /// Throws std::domain_error if S is rank deficient.
  static StructureSpec linear_subspace(Matrix S);
  static StructureSpec of_kind(StructureKind kind);

  StructureKind kind() const { return kind_; }
  Matrix const &basis() const;
  Matrix const &basis_pinv() const;

  /// Throws std::domain_error when the structure cannot describe n x p matrices.
  void check_compatible(Eigen::Index n, Eigen::Index p) const;

private:
  explicit StructureSpec(StructureKind kind)
    : kind_{kind}
  {
  }
  struct Subspace
  {
    Matrix S;
    Matrix S_pinv;
  };
  StructureKind                   kind_;
  std::shared_ptr<Subspace const> subspace_;
};

/// 0/1 basis (np x (n+p-1)) for Hankel or Toeplitz matrices. Hankel entry
/// (i, j) is theta[i + j]; Toeplitz entry (i, j) is theta[i - j + p - 1]
/// (zero-based).
Matrix linear_basis(StructureKind kind, Eigen::Index n, Eigen::Index p);

Matrix hankel_matrix(Vector const &theta, Eigen::Index n, Eigen::Index p);
Matrix toeplitz_matrix(Vector const &theta, Eigen::Index n, Eigen::Index p);

/// Orthogonal projection onto {X : vec(X) = S theta}. Throws
/// std::domain_error when S is rank deficient.
Matrix project_linear(Matrix const &S, Matrix const &Z);

/// Hankel / Toeplitz projections by averaging each anti-diagonal / diagonal.
Matrix average_antidiagonals(Matrix const &Z);
Matrix average_diagonals(Matrix const &Z);

/// Nearest symmetric p.s.d. matrix of rank <= r: symmetrize, keep the top-r
/// eigenpairs and drop any retained eigenvalue that is not positive.
Matrix project_psd(Matrix const &Z, Eigen::Index r);

/// Dispatches to the projection for `spec`; identity for Unstructured.
Matrix project(StructureSpec const &spec, Matrix const &Z, Eigen::Index r);

/// Canonical controllable form of a rank-r Hankel matrix:
/// [X]_ij = b^T Phi^(i+j) e_1 with Phi the companion matrix of a.
struct HankelParams
{
  Vector a;
  Vector b;

  Eigen::Index order() const { return a.size(); }
  Matrix       companion() const;
};

/// h_k = b^T Phi^k e_1 for k = 0 .. length-1. Throws std::overflow_error
/// when the recurrence leaves [-1e12, 1e12].
Vector hankel_sequence(HankelParams const &params, Eigen::Index length);

Matrix hankel_from_params(HankelParams const &params, Eigen::Index n, Eigen::Index p);

/// d h / d [a; b] for the n+p-1 sequence behind hankel_from_params,
/// (n+p-1) x 2r with the a-block first.
Matrix hankel_gradient(HankelParams const &params, Eigen::Index n, Eigen::Index p);

/// Order-r Prony fit of h. Poles outside the unit circle are pulled back
/// onto it before b is refit. Throws std::domain_error if the
/// linear-prediction system has rank < r or h is shorter than 2r.
HankelParams prony_fit(Vector const &h, Eigen::Index r);

/// p.s.d. factor, X = M M^T.
struct PsdFactor
{
  Matrix M;

  Matrix product() const { return M * M.transpose(); }
};

/// Jacobian of vec(M M^T) with respect to vec(M), n^2 x nr.
Matrix psd_gradient(PsdFactor const &factor);

enum class HankelGenerator
{
  PronyOnNoise,
  UnitCirclePoles,
};

std::string_view to_string(HankelGenerator method);
HankelGenerator  hankel_generator_from_string(std::string_view name);

struct HankelSample
{
  Matrix       X;
  HankelParams params;
  /// Modal amplitudes for UnitCirclePoles (one per real mode, a cosine and a
  /// sine weight per pole pair); max |X_ij| <= sum |amplitudes|. Empty for
  /// PronyOnNoise.
  Vector modal_amplitudes;
};

/// Random rank-<=r Hankel matrix together with its parameters. PronyOnNoise
/// retries with fresh draws up to 10 times before throwing
/// std::runtime_error.
HankelSample generate_hankel_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, HankelGenerator method, Rng &rng);

/// Hankel sample with its rows reversed, which is Toeplitz of the same rank.
HankelSample generate_toeplitz_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, HankelGenerator method,
                                       Rng &rng);

struct PsdSample
{
  Matrix    X;
  PsdFactor factor;
};

/// X = M M^T with M (n x r) i.i.d. N(0, 1).
PsdSample generate_psd_lowrank(Eigen::Index n, Eigen::Index r, Rng &rng);

/// X = L R with both factors i.i.d. N(0, 1).
Matrix generate_generic_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, Rng &rng);

} // namespace lrmr
