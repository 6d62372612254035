#include "lrmr/sensing.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace lrmr {

SensingOperator::SensingOperator(Matrix a, Eigen::Index n, Eigen::Index p)
  : a_{std::move(a)}
  , n_{n}
  , p_{p}
{
  if (n < 1 || p < 1) { throw std::domain_error(fmt::format("sensing operator: invalid shape {}x{}", n, p)); }
  if (a_.cols() != n * p) {
    throw std::domain_error(fmt::format("sensing operator: matrix has {} columns, expected n*p = {}", a_.cols(), n * p));
  }
  if (a_.rows() < 1) { throw std::domain_error("sensing operator: needs at least one measurement"); }
  if (!a_.allFinite()) { throw std::domain_error("sensing operator: non-finite entry"); }
}

SensingOperator SensingOperator::selection(Eigen::Index n, Eigen::Index p, std::vector<MatrixIndex> const &omega)
{
  if (omega.empty()) { throw std::domain_error("selection operator: empty index set"); }
  std::vector<bool>         seen(static_cast<std::size_t>(n * p), false);
  std::vector<Eigen::Index> linear;
  linear.reserve(omega.size());
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(omega.size()), n * p);
  for (std::size_t k = 0; k < omega.size(); ++k) {
    auto const [i, j] = omega[k];
    if (i < 0 || i >= n || j < 0 || j >= p) {
      throw std::domain_error(fmt::format("selection operator: index ({}, {}) outside {}x{}", i, j, n, p));
    }
    Eigen::Index const lin = i + j * n;
    if (seen[static_cast<std::size_t>(lin)]) {
      throw std::domain_error(fmt::format("selection operator: duplicate index ({}, {})", i, j));
    }
    seen[static_cast<std::size_t>(lin)] = true;
    linear.push_back(lin);
    a(static_cast<Eigen::Index>(k), lin) = 1.0;
  }
  SensingOperator op(std::move(a), n, p);
  op.selected_ = std::move(linear);
  return op;
}

Vector SensingOperator::apply(Matrix const &X) const
{
  if (X.rows() != n_ || X.cols() != p_) {
    throw std::domain_error(fmt::format("apply: matrix is {}x{}, operator expects {}x{}", X.rows(), X.cols(), n_, p_));
  }
  if (selected_) {
    Vector y(m());
    for (Eigen::Index k = 0; k < m(); ++k) { y(k) = X.reshaped()((*selected_)[static_cast<std::size_t>(k)]); }
    return y;
  }
  return a_ * X.reshaped();
}

Matrix SensingOperator::adjoint(Vector const &y) const
{
  if (y.size() != m()) {
    throw std::domain_error(fmt::format("adjoint: vector of length {}, operator has {} rows", y.size(), m()));
  }
  Vector const v = a_.transpose() * y;
  return v.reshaped(n_, p_);
}

Matrix SensingOperator::factored_for_right(Matrix const &L) const
{
  if (L.rows() != n_) {
    throw std::domain_error(fmt::format("factored_operator_R: L has {} rows, expected n = {}", L.rows(), n_));
  }
  Eigen::Index const r = L.cols();
  Matrix             out(m(), r * p_);
  for (Eigen::Index j = 0; j < p_; ++j) { out.middleCols(j * r, r).noalias() = a_.middleCols(j * n_, n_) * L; }
  return out;
}

Matrix SensingOperator::factored_for_left(Matrix const &R) const
{
  if (R.cols() != p_) {
    throw std::domain_error(fmt::format("factored_operator_L: R has {} columns, expected p = {}", R.cols(), p_));
  }
  Eigen::Index const r = R.rows();
  Matrix             out = Matrix::Zero(m(), n_ * r);
  for (Eigen::Index c = 0; c < r; ++c) {
    auto block = out.middleCols(c * n_, n_);
    for (Eigen::Index j = 0; j < p_; ++j) {
      double const w = R(c, j);
      if (w != 0.0) { block.noalias() += w * a_.middleCols(j * n_, n_); }
    }
  }
  return out;
}

SensingOperator make_gaussian_operator(Eigen::Index n, Eigen::Index p, Eigen::Index m, Rng &rng)
{
  if (m < 1) { throw std::domain_error("make_gaussian_operator: m must be positive"); }
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  Matrix                           a(m, n * p);
  // Fill in a fixed (column-major) order so a seed fixes the operator.
  for (Eigen::Index k = 0; k < a.size(); ++k) { a.data()[k] = dist(rng); }
  return SensingOperator(std::move(a), n, p);
}

SensingOperator make_selection_operator(Eigen::Index n, Eigen::Index p, std::vector<MatrixIndex> const &omega)
{
  return SensingOperator::selection(n, p, omega);
}

NoiseModel::NoiseModel(std::variant<Iid, General> kind, Matrix chol)
  : kind_{std::move(kind)}
  , chol_{std::move(chol)}
{
}

NoiseModel NoiseModel::iid(double sigma2)
{
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::domain_error(fmt::format("noise model: variance {} must be finite and nonnegative", sigma2));
  }
  return NoiseModel(Iid{sigma2});
}

NoiseModel NoiseModel::general(Matrix C)
{
  if (C.rows() != C.cols()) { throw std::domain_error("noise model: covariance must be square"); }
  if (!C.isApprox(C.transpose(), 1e-10)) { throw std::domain_error("noise model: covariance is not symmetric"); }
  Eigen::LLT<Matrix> llt(C);
  if (llt.info() != Eigen::Success) { throw std::domain_error("noise model: covariance is not positive definite"); }
  Matrix chol = llt.matrixL();
  return NoiseModel(General{std::move(C)}, std::move(chol));
}

double NoiseModel::sigma2() const
{
  if (auto const *iid = std::get_if<Iid>(&kind_)) { return iid->sigma2; }
  throw std::logic_error("noise model: sigma2 requested from a general covariance");
}

Matrix NoiseModel::covariance(Eigen::Index m) const
{
  if (auto const *iid = std::get_if<Iid>(&kind_)) { return iid->sigma2 * Matrix::Identity(m, m); }
  auto const &C = std::get<General>(kind_).C;
  if (C.rows() != m) { throw std::domain_error(fmt::format("noise model: covariance is {}x{}, need {}", C.rows(), C.rows(), m)); }
  return C;
}

Matrix NoiseModel::whiten(Matrix const &B) const
{
  if (auto const *iid = std::get_if<Iid>(&kind_)) {
    if (iid->sigma2 <= 0.0) { throw std::domain_error("noise model: cannot whiten noiseless measurements"); }
    return B / std::sqrt(iid->sigma2);
  }
  if (chol_.rows() != B.rows()) {
    throw std::domain_error(fmt::format("noise model: covariance is {}x{}, data has {} rows", chol_.rows(), chol_.rows(), B.rows()));
  }
  return chol_.triangularView<Eigen::Lower>().solve(B);
}

Vector NoiseModel::draw(Eigen::Index m, Rng &rng) const
{
  std::normal_distribution<double> unit(0.0, 1.0);
  Vector                           z(m);
  for (Eigen::Index k = 0; k < m; ++k) { z(k) = unit(rng); }
  if (auto const *iid = std::get_if<Iid>(&kind_)) { return std::sqrt(iid->sigma2) * z; }
  if (chol_.rows() != m) { throw std::domain_error("noise model: covariance size does not match measurement count"); }
  return chol_ * z;
}

Vector measure(SensingOperator const &op, Matrix const &X, NoiseModel const &noise, Rng &rng)
{
  Vector y = op.apply(X);
  if (noise.is_iid() && noise.sigma2() == 0.0) { return y; }
  y += noise.draw(op.m(), rng);
  return y;
}

Matrix inverse_sqrt_spd(Matrix const &C)
{
  if (C.rows() != C.cols()) { throw std::domain_error("inverse_sqrt_spd: matrix is not square"); }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (C + C.transpose()));
  Vector const                          lambda = eig.eigenvalues();
  if (lambda.size() == 0 || lambda.minCoeff() <= 0.0) {
    throw std::domain_error("prewhiten: covariance is not positive definite");
  }
  return eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

std::pair<SensingOperator, Vector> prewhiten(SensingOperator const &op, Vector const &y, Matrix const &C)
{
  if (C.rows() != op.m() || y.size() != op.m()) {
    throw std::domain_error(fmt::format("prewhiten: covariance {}x{} and data length {} must match m = {}", C.rows(),
                                        C.cols(), y.size(), op.m()));
  }
  Matrix const W = inverse_sqrt_spd(C);
  return {SensingOperator(W * op.matrix(), op.n(), op.p()), W * y};
}

} // namespace lrmr
