#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace lrmr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Every random draw in the library flows through an explicitly owned engine.
using Rng = std::mt19937_64;

/// Column-major stacking of M.
Vector vec(Matrix const &M);

/// Inverse of vec: reshapes a length rows*cols vector column-major.
Matrix mat(Vector const &v, Eigen::Index rows, Eigen::Index cols);

struct TruncatedSvd
{
  Matrix U0;    // n x r, orthonormal columns
  Vector sigma; // r, non-increasing
  Matrix V0;    // p x r, orthonormal columns

  Matrix reconstruct() const { return U0 * sigma.asDiagonal() * V0.transpose(); }
};

/// Top-r singular triplets of Z. In each column of U0 the entry of largest
/// magnitude is made nonnegative (lowest index wins ties) and the matching
/// column of V0 is flipped with it, so the result is fully determined by Z.
/// Throws std::domain_error unless 1 <= r <= min(rows, cols).
TruncatedSvd svd_trunc(Matrix const &Z, Eigen::Index r);

/// Full SVD with the same sign convention. U is n x n, V is p x p and sigma
/// has min(n, p) entries.
struct FullSvd
{
  Matrix U;
  Vector sigma;
  Matrix V;
};
FullSvd svd_full(Matrix const &Z);

/// Relative cutoff used for pseudoinverses and rank decisions:
/// max(rows, cols) * machine epsilon.
double default_rcond(Eigen::Index rows, Eigen::Index cols);

/// Moore-Penrose pseudoinverse. Singular values at or below
/// default_rcond * sigma_max are treated as zero.
Matrix pinv(Matrix const &A);

/// pinv(A) * B without forming pinv(A).
Matrix pinv_solve(Matrix const &A, Matrix const &B);

/// Number of singular values above default_rcond * sigma_max.
Eigen::Index numerical_rank(Matrix const &A);

struct SymEigTrunc
{
  Matrix vectors; // n x r, orthonormal
  Vector values;  // r, non-increasing
};

/// Top-r eigenpairs of the symmetric part (H + H^T)/2, largest first.
/// Eigenvectors follow the svd_trunc sign convention.
SymEigTrunc sym_eig_trunc(Matrix const &H, Eigen::Index r);

/// Permutation T (nr x nr) with T * vec(M) = vec(M^T) for every n x r M.
Matrix commutation_matrix(Eigen::Index n, Eigen::Index r);

/// Flips column signs so the largest-magnitude entry of each column of
/// `primary` is nonnegative; the same flips are applied to `companion` when
/// it is non-null.
void canonicalize_signs(Matrix &primary, Matrix *companion = nullptr);

} // namespace lrmr
