#include "lrmr/numerics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrmr {

Vector vec(Matrix const &M)
{
  return M.reshaped();
}

Matrix mat(Vector const &v, Eigen::Index rows, Eigen::Index cols)
{
  if (v.size() != rows * cols) {
    throw std::domain_error(fmt::format("mat: vector of length {} cannot fill {}x{}", v.size(), rows, cols));
  }
  return v.reshaped(rows, cols);
}

void canonicalize_signs(Matrix &primary, Matrix *companion)
{
  for (Eigen::Index j = 0; j < primary.cols(); ++j) {
    Eigen::Index imax = 0;
    double       best = -1.0;
    for (Eigen::Index i = 0; i < primary.rows(); ++i) {
      double const a = std::abs(primary(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (primary.rows() > 0 && primary(imax, j) < 0.0) {
      primary.col(j) *= -1.0;
      if (companion != nullptr && j < companion->cols()) { companion->col(j) *= -1.0; }
    }
  }
}

TruncatedSvd svd_trunc(Matrix const &Z, Eigen::Index r)
{
  Eigen::Index const k = std::min(Z.rows(), Z.cols());
  if (r < 1 || r > k) {
    throw std::domain_error(fmt::format("svd_trunc: rank {} outside [1, {}] for {}x{} input", r, k, Z.rows(), Z.cols()));
  }
  Eigen::BDCSVD<Matrix> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd          out{svd.matrixU().leftCols(r), svd.singularValues().head(r), svd.matrixV().leftCols(r)};
  canonicalize_signs(out.U0, &out.V0);
  return out;
}

FullSvd svd_full(Matrix const &Z)
{
  Eigen::BDCSVD<Matrix> svd(Z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  FullSvd               out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  // Columns beyond min(n, p) carry no singular value; sign them independently.
  Eigen::Index const k = out.sigma.size();
  Matrix             Uk = out.U.leftCols(k);
  Matrix             Vk = out.V.leftCols(k);
  canonicalize_signs(Uk, &Vk);
  out.U.leftCols(k) = Uk;
  out.V.leftCols(k) = Vk;
  if (out.U.cols() > k) {
    Matrix tail = out.U.rightCols(out.U.cols() - k);
    canonicalize_signs(tail);
    out.U.rightCols(out.U.cols() - k) = tail;
  }
  if (out.V.cols() > k) {
    Matrix tail = out.V.rightCols(out.V.cols() - k);
    canonicalize_signs(tail);
    out.V.rightCols(out.V.cols() - k) = tail;
  }
  return out;
}

double default_rcond(Eigen::Index rows, Eigen::Index cols)
{
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

namespace {

// Thin SVD plus the count of singular values above the pinv cutoff.
struct ThinSvd
{
  Matrix       U;
  Vector       sigma;
  Matrix       V;
  Eigen::Index rank = 0;
};

ThinSvd thin_svd(Matrix const &A, double rcond)
{
  ThinSvd out;
  if (A.size() == 0) { return out; }
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = svd.matrixU();
  out.sigma = svd.singularValues();
  out.V = svd.matrixV();
  double const smax = out.sigma.size() > 0 ? out.sigma(0) : 0.0;
  double const cutoff = rcond * smax;
  for (Eigen::Index i = 0; i < out.sigma.size(); ++i) {
    if (out.sigma(i) > cutoff) { out.rank = i + 1; }
  }
  return out;
}

} // namespace

Matrix pinv(Matrix const &A)
{
  ThinSvd const s = thin_svd(A, default_rcond(A.rows(), A.cols()));
  if (s.rank == 0) { return Matrix::Zero(A.cols(), A.rows()); }
  auto const k = s.rank;
  return s.V.leftCols(k) * s.sigma.head(k).cwiseInverse().asDiagonal() * s.U.leftCols(k).transpose();
}

Matrix pinv_solve(Matrix const &A, Matrix const &B)
{
  if (B.rows() != A.rows()) {
    throw std::domain_error(fmt::format("pinv_solve: {} right-hand rows for a {}-row system", B.rows(), A.rows()));
  }
  if (A.rows() > A.cols() && A.cols() > 0) {
    // A = QR leaves the singular values unchanged, so pinv(A) B = pinv(R) Q^T B
    // with the cutoff still taken from A's shape.
    Eigen::HouseholderQR<Matrix> qr(A);
    Eigen::Index const           k = A.cols();
    Matrix const                 R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Matrix const                 QtB = (qr.householderQ().transpose() * B).topRows(k);
    double const                 rcond = default_rcond(A.rows(), A.cols());
    // sigma_min(R) >= 1/||R^-1||_F and sigma_max(R) <= ||R||_F. When these
    // bounds already clear the cutoff, R has full rank and pinv(R) = R^-1.
    auto const   upper = R.triangularView<Eigen::Upper>();
    Matrix const Rinv = upper.solve(Matrix::Identity(k, k));
    if (Rinv.allFinite() && 1.0 / Rinv.norm() > rcond * R.norm()) { return upper.solve(QtB); }
    ThinSvd const s = thin_svd(R, rcond);
    if (s.rank == 0) { return Matrix::Zero(A.cols(), B.cols()); }
    Matrix coeffs = s.U.leftCols(s.rank).transpose() * QtB;
    coeffs = s.sigma.head(s.rank).cwiseInverse().asDiagonal() * coeffs;
    return s.V.leftCols(s.rank) * coeffs;
  }
  ThinSvd const s = thin_svd(A, default_rcond(A.rows(), A.cols()));
  if (s.rank == 0) { return Matrix::Zero(A.cols(), B.cols()); }
  auto const k = s.rank;
  Matrix     coeffs = s.U.leftCols(k).transpose() * B;
  coeffs = s.sigma.head(k).cwiseInverse().asDiagonal() * coeffs;
  return s.V.leftCols(k) * coeffs;
}

Eigen::Index numerical_rank(Matrix const &A)
{
  if (A.size() == 0) { return 0; }
  Eigen::BDCSVD<Matrix> svd(A);
  Vector const          sv = svd.singularValues();
  double const          cutoff = default_rcond(A.rows(), A.cols()) * sv(0);
  return (sv.array() > cutoff).count();
}

SymEigTrunc sym_eig_trunc(Matrix const &H, Eigen::Index r)
{
  if (H.rows() != H.cols()) {
    throw std::domain_error(fmt::format("sym_eig_trunc: input is {}x{}, not square", H.rows(), H.cols()));
  }
  Eigen::Index const n = H.rows();
  if (r < 1 || r > n) { throw std::domain_error(fmt::format("sym_eig_trunc: rank {} outside [1, {}]", r, n)); }
  Matrix const                          sym = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  // Eigen sorts ascending.
  SymEigTrunc out{Matrix(n, r), Vector(r)};
  for (Eigen::Index k = 0; k < r; ++k) {
    out.values(k) = eig.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = eig.eigenvectors().col(n - 1 - k);
  }
  canonicalize_signs(out.vectors);
  return out;
}

Matrix commutation_matrix(Eigen::Index n, Eigen::Index r)
{
  Matrix T = Matrix::Zero(n * r, n * r);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      // M(i,j) sits at i + j*n in vec(M) and at j + i*r in vec(M^T).
      T(j + i * r, i + j * n) = 1.0;
    }
  }
  return T;
}

} // namespace lrmr
