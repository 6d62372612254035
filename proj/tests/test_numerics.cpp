#include "lrmr/numerics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace lrmr {
namespace {

using testing::random_matrix;
using testing::rel_diff;
using Eigen::Vector2d;
using Eigen::Vector3d;

TEST(Vec, ColumnMajorStacking)
{
  Matrix M(2, 2);
  M << 1, 2, 4, 3;
  Vector expected(4);
  expected << 1, 4, 2, 3;
  EXPECT_EQ(vec(M), expected);

  Matrix one(1, 1);
  one << 5;
  EXPECT_EQ(vec(one), Vector::Constant(1, 5.0));
}

TEST(Vec, MatIsExactInverse)
{
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix const M = random_matrix(2, 2, rng);
    EXPECT_EQ(mat(vec(M), 2, 2), M);
  }
  Matrix const tall = random_matrix(5, 3, rng);
  EXPECT_EQ(mat(vec(tall), 5, 3), tall);
  EXPECT_THROW(mat(Vector::Zero(5), 2, 2), std::domain_error);
}

TEST(SvdTrunc, DiagonalCase)
{
  Matrix const Z = Vector3d(3, 2, 1).asDiagonal();
  auto const   svd = svd_trunc(Z, 2);
  EXPECT_NEAR(svd.sigma(0), 3.0, 1e-14);
  EXPECT_NEAR(svd.sigma(1), 2.0, 1e-14);
  Matrix const expected = Vector3d(3, 2, 0).asDiagonal();
  EXPECT_LT((svd.reconstruct() - expected).norm(), 1e-14);
}

TEST(SvdTrunc, ExactRankReconstructs)
{
  Rng          rng(3);
  Matrix const Z = random_matrix(9, 3, rng) * random_matrix(3, 7, rng);
  auto const   svd = svd_trunc(Z, 3);
  EXPECT_LE((Z - svd.reconstruct()).norm(), 1e-10 * Z.norm());
  EXPECT_LT((svd.U0.transpose() * svd.U0 - Matrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LT((svd.V0.transpose() * svd.V0 - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(SvdTrunc, TailEnergyMatchesFullDecomposition)
{
  Rng          rng(5);
  Matrix const Z = random_matrix(8, 6, rng);
  auto const   svd = svd_trunc(Z, 3);
  // Oracle: singular values from an independent one-sided Jacobi SVD.
  Eigen::JacobiSVD<Matrix> full(Z);
  double const             tail = full.singularValues().tail(3).squaredNorm();
  double const             err = (Z - svd.reconstruct()).squaredNorm();
  EXPECT_NEAR(err, tail, 1e-10 * tail);
  for (Eigen::Index k = 0; k + 1 < svd.sigma.size(); ++k) { EXPECT_GE(svd.sigma(k), svd.sigma(k + 1)); }
}

TEST(SvdTrunc, FullRankReconstructs)
{
  Rng          rng(8);
  Matrix const Z = random_matrix(6, 9, rng);
  EXPECT_LE((Z - svd_trunc(Z, 6).reconstruct()).norm(), 1e-10 * Z.norm());
}

TEST(SvdTrunc, SignConventionAndDeterminism)
{
  Rng          rng(13);
  Matrix const Z = random_matrix(7, 5, rng);
  auto const   a = svd_trunc(Z, 4);
  auto const   b = svd_trunc(Z, 4);
  EXPECT_EQ(a.U0, b.U0);
  EXPECT_EQ(a.V0, b.V0);
  EXPECT_EQ(a.sigma, b.sigma);
  for (Eigen::Index j = 0; j < a.U0.cols(); ++j) {
    Eigen::Index imax = 0;
    a.U0.col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GE(a.U0(imax, j), 0.0);
  }
  // Negating the input flips V only.
  auto const neg = svd_trunc(-Z, 4);
  EXPECT_LT((neg.U0 - a.U0).norm(), 1e-12);
  EXPECT_LT((neg.V0 + a.V0).norm(), 1e-12);
}

TEST(SvdTrunc, RankOutOfRange)
{
  Matrix const Z = Matrix::Ones(3, 4);
  EXPECT_THROW(svd_trunc(Z, 0), std::domain_error);
  EXPECT_THROW(svd_trunc(Z, 4), std::domain_error);
}

TEST(Pinv, DiagonalCase)
{
  Matrix const A = Vector2d(2, 0).asDiagonal();
  Matrix const expected = Vector2d(0.5, 0).asDiagonal();
  EXPECT_LT((pinv(A) - expected).norm(), 1e-15);
}

TEST(Pinv, OrthonormalColumns)
{
  Rng          rng(17);
  Matrix const Q = testing::random_orthonormal(8, 3, rng);
  EXPECT_LT((pinv(Q) - Q.transpose()).norm(), 1e-12);
}

TEST(Pinv, ZeroMatrix)
{
  Matrix const Z = Matrix::Zero(3, 5);
  Matrix const P = pinv(Z);
  EXPECT_EQ(P.rows(), 5);
  EXPECT_EQ(P.cols(), 3);
  EXPECT_EQ(P.norm(), 0.0);
}

TEST(Pinv, MatchesNormalEquationsOnFullColumnRank)
{
  Rng          rng(19);
  Matrix const A = random_matrix(10, 4, rng);
  Matrix const oracle = (A.transpose() * A).inverse() * A.transpose();
  EXPECT_LT(rel_diff(pinv(A), oracle), 1e-8);
}

TEST(Pinv, MoorePenroseIdentities)
{
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    // Alternate full-rank and rank-deficient inputs.
    Matrix const A = trial % 2 == 0 ? random_matrix(10, 6, rng) : Matrix(random_matrix(10, 4, rng) * random_matrix(4, 6, rng));
    Matrix const P = pinv(A);
    double const scale = A.norm();
    EXPECT_LT((A * P * A - A).norm(), 1e-8 * scale);
    EXPECT_LT((P * A * P - P).norm(), 1e-8 * P.norm());
    EXPECT_LT((A * P - (A * P).transpose()).norm(), 1e-8);
    EXPECT_LT((P * A - (P * A).transpose()).norm(), 1e-8);
  }
}

TEST(Pinv, SolveMatchesExplicitPseudoinverse)
{
  Rng          rng(29);
  Matrix const A = random_matrix(30, 5, rng) * random_matrix(5, 8, rng);
  Matrix const B = random_matrix(30, 2, rng);
  EXPECT_LT(rel_diff(pinv_solve(A, B), pinv(A) * B), 1e-10);
  Matrix const wide = random_matrix(4, 9, rng);
  Matrix const Bw = random_matrix(4, 3, rng);
  EXPECT_LT(rel_diff(pinv_solve(wide, Bw), pinv(wide) * Bw), 1e-10);
  EXPECT_THROW(pinv_solve(A, Matrix::Zero(3, 1)), std::domain_error);
}

TEST(NumericalRank, CountsAboveCutoff)
{
  Rng rng(31);
  EXPECT_EQ(numerical_rank(random_matrix(9, 3, rng) * random_matrix(3, 7, rng)), 3);
  EXPECT_EQ(numerical_rank(Matrix::Zero(4, 4)), 0);
  EXPECT_EQ(numerical_rank(Matrix::Identity(5, 5)), 5);
}

TEST(SymEigTrunc, DiagonalCase)
{
  Matrix const H = Vector3d(5, 1, -2).asDiagonal();
  auto const   eig = sym_eig_trunc(H, 2);
  EXPECT_NEAR(eig.values(0), 5.0, 1e-14);
  EXPECT_NEAR(eig.values(1), 1.0, 1e-14);
}

TEST(SymEigTrunc, Identity)
{
  auto const eig = sym_eig_trunc(Matrix::Identity(3, 3), 3);
  EXPECT_LT((eig.values - Vector::Ones(3)).norm(), 1e-14);
  EXPECT_LT((eig.vectors.transpose() * eig.vectors - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(SymEigTrunc, EigenResidual)
{
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix const H = testing::random_symmetric(6, rng);
    auto const   eig = sym_eig_trunc(H, 6);
    for (Eigen::Index k = 0; k < 6; ++k) {
      EXPECT_LE((H * eig.vectors.col(k) - eig.values(k) * eig.vectors.col(k)).norm(), 1e-9);
      if (k > 0) { EXPECT_GE(eig.values(k - 1), eig.values(k)); }
    }
  }
}

TEST(SymEigTrunc, SymmetrizesInput)
{
  Matrix H(2, 2);
  H << 2, 1, 0, 2; // symmetric part has eigenvalues 2.5 and 1.5
  auto const eig = sym_eig_trunc(H, 2);
  EXPECT_NEAR(eig.values(0), 2.5, 1e-14);
  EXPECT_NEAR(eig.values(1), 1.5, 1e-14);
}

TEST(SymEigTrunc, Errors)
{
  EXPECT_THROW(sym_eig_trunc(Matrix::Identity(3, 3), 4), std::domain_error);
  EXPECT_THROW(sym_eig_trunc(Matrix::Zero(2, 3), 1), std::domain_error);
}

TEST(CommutationMatrix, SmallCases)
{
  EXPECT_EQ(commutation_matrix(2, 1), Matrix::Identity(2, 2));
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = expected(1, 2) = expected(2, 1) = expected(3, 3) = 1.0;
  EXPECT_EQ(commutation_matrix(2, 2), expected);
}

TEST(CommutationMatrix, ExhaustiveDefinitionCheck)
{
  Rng rng(41);
  for (Eigen::Index n = 1; n <= 4; ++n) {
    for (Eigen::Index r = 1; r <= 4; ++r) {
      Matrix const T = commutation_matrix(n, r);
      Matrix const M = random_matrix(n, r, rng);
      Matrix const Mt = M.transpose();
      EXPECT_EQ(T * vec(M), vec(Mt)) << "n=" << n << " r=" << r;
      EXPECT_EQ(T.transpose() * T, Matrix::Identity(n * r, n * r));
      EXPECT_EQ(commutation_matrix(n, r) * commutation_matrix(r, n), Matrix::Identity(n * r, n * r));
    }
  }
}

} // namespace
} // namespace lrmr
