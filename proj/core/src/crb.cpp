#include "lrmr/crb.hpp"

#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lrmr {

namespace {

constexpr double kTangentRankFloor = 1e-10;
constexpr double kFimConditionLimit = 1e12;
constexpr double kRangeTolerance = 1e-6;

bool noiseless(NoiseModel const &noise) { return noise.is_iid() && noise.sigma2() == 0.0; }

CrbResult noiseless_result() { return CrbResult::invalid("noise variance is zero; the bound degenerates to 0"); }

} // namespace

CrbResult CrbResult::ok(double value, std::string diagnostic) { return {value, true, std::move(diagnostic)}; }

CrbResult CrbResult::invalid(std::string diagnostic)
{
  return {std::numeric_limits<double>::quiet_NaN(), false, std::move(diagnostic)};
}

TangentBasis tangent_basis(Matrix const &X, Eigen::Index r)
{
  Eigen::Index const n = X.rows(), p = X.cols();
  if (r < 1 || r > std::min(n, p)) {
    throw std::domain_error(fmt::format("tangent_basis: rank {} outside [1, {}]", r, std::min(n, p)));
  }
  FullSvd const svd = svd_full(X);
  double const  s1 = svd.sigma(0);
  double const  sr = svd.sigma(r - 1);
  if (!(s1 > 0.0) || sr / s1 <= kTangentRankFloor) {
    throw std::domain_error(fmt::format(
      "tangent_basis: numerical rank below {} (sigma_{} / sigma_1 = {:.3e}, need > {:g})", r, r, s1 > 0.0 ? sr / s1 : 0.0,
      kTangentRankFloor));
  }
  TangentBasis tb;
  tb.U0 = svd.U.leftCols(r);
  tb.U1 = svd.U.rightCols(n - r);
  tb.V0 = svd.V.leftCols(r);
  tb.V1 = svd.V.rightCols(p - r);

  Eigen::Index const d = r * (n + p) - r * r;
  tb.P.resize(n * p, d);
  Eigen::Index col = 0;
  // Column-major vec: vec(U0 B V1^T) = (V1 kron U0) vec(B), and so on.
  tb.P.middleCols(col, r * (p - r)) = Eigen::kroneckerProduct(tb.V1, tb.U0);
  col += r * (p - r);
  tb.P.middleCols(col, r * r) = Eigen::kroneckerProduct(tb.V0, tb.U0);
  col += r * r;
  tb.P.middleCols(col, r * (n - r)) = Eigen::kroneckerProduct(tb.V0, tb.U1);
  return tb;
}

CrbResult crb_unstructured(SensingOperator const &op, NoiseModel const &noise, Matrix const &X, Eigen::Index r)
{
  if (X.rows() != op.n() || X.cols() != op.p()) {
    throw std::domain_error(fmt::format("crb_unstructured: X is {}x{}, operator expects {}x{}", X.rows(), X.cols(),
                                        op.n(), op.p()));
  }
  if (noiseless(noise)) { return noiseless_result(); }
  TangentBasis const tb = tangent_basis(X, r);
  Eigen::Index const required = tb.P.cols();
  Matrix const       AP = op.matrix() * tb.P;
  Eigen::Index const rank = numerical_rank(AP);
  if (rank < required) {
    return CrbResult::invalid(fmt::format("rank(AP) = {} < r(n+p) - r^2 = {} (m = {})", rank, required, op.m()));
  }
  Matrix const       B = noise.whiten(AP);
  Matrix const       G = B.transpose() * B;
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) { return CrbResult::invalid("P^T A^T C^-1 A P is not positive definite"); }
  double const value = llt.solve(Matrix::Identity(required, required)).trace();
  return CrbResult::ok(value, fmt::format("rank(AP) = {} = r(n+p) - r^2", rank));
}

Matrix fim(SensingOperator const &op, NoiseModel const &noise, Matrix const &delta)
{
  if (delta.cols() != op.n() * op.p()) {
    throw std::domain_error(fmt::format("fim: Jacobian has {} columns, expected n*p = {}", delta.cols(), op.n() * op.p()));
  }
  Matrix const B = noise.whiten(op.matrix() * delta.transpose());
  return B.transpose() * B;
}

CrbResult crb_hankel(SensingOperator const &op, NoiseModel const &noise, HankelParams const &params, Eigen::Index n,
                     Eigen::Index p)
{
  if (n != op.n() || p != op.p()) {
    throw std::domain_error(fmt::format("crb_hankel: {}x{} parameters for a {}x{} operator", n, p, op.n(), op.p()));
  }
  if (noiseless(noise)) { return noiseless_result(); }
  Matrix const S = linear_basis(StructureKind::Hankel, n, p);
  Matrix const delta = hankel_gradient(params, n, p).transpose() * S.transpose();
  Matrix const J = fim(op, noise, delta);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(J, Eigen::EigenvaluesOnly);
  double const                          lmin = eig.eigenvalues().minCoeff();
  double const                          lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin >= kFimConditionLimit) {
    return CrbResult::invalid(fmt::format("Fisher information is singular or ill-conditioned (cond = {:.3e}, limit {:g})",
                                          lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity(),
                                          kFimConditionLimit));
  }
  Eigen::LLT<Matrix> llt(J);
  if (llt.info() != Eigen::Success) { return CrbResult::invalid("Fisher information is not positive definite"); }
  double const value = (llt.solve(delta) * delta.transpose()).trace();
  return CrbResult::ok(value, fmt::format("cond(J) = {:.3e}", lmax / lmin));
}

CrbResult crb_psd(SensingOperator const &op, NoiseModel const &noise, PsdFactor const &factor)
{
  Eigen::Index const n = factor.M.rows();
  if (n != op.n() || n != op.p()) {
    throw std::domain_error(fmt::format("crb_psd: {}x{} factor for a {}x{} operator", n, factor.M.cols(), op.n(), op.p()));
  }
  if (noiseless(noise)) { return noiseless_result(); }
  Matrix const delta = psd_gradient(factor).transpose();

  // J = B^T B with B = C^{-1/2} A Delta^T. Pseudo-inverting J through the SVD
  // of B keeps the rotational null space of the factorization at eps-level
  // instead of eps^2-level.
  Matrix const          B = noise.whiten(op.matrix() * delta.transpose());
  Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinV);
  Vector const          s = svd.singularValues();
  double const          cutoff = default_rcond(B.rows(), B.cols()) * (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index const    rank = (s.array() > cutoff).count();
  if (rank == 0) { return CrbResult::invalid("Fisher information is zero"); }
  Matrix const Vk = svd.matrixV().leftCols(rank);
  Matrix const coords = Vk.transpose() * delta;

  double const outside = (delta - Vk * coords).norm();
  double const scale = delta.norm();
  if (outside > kRangeTolerance * scale) {
    return CrbResult::invalid(fmt::format("Delta leaves the range of J: ||(I - J J^+) Delta|| / ||Delta|| = {:.3e} > {:g} "
                                          "(rank(J) = {} of {})",
                                          outside / scale, kRangeTolerance, rank, delta.rows()));
  }
  double const value = (s.head(rank).cwiseInverse().asDiagonal() * coords).squaredNorm();
  return CrbResult::ok(value, fmt::format("rank(J) = {} of {}", rank, delta.rows()));
}

double crb_to_srer_bound(std::span<double const> crb_values, std::span<double const> signal_energies)
{
  if (crb_values.empty() || crb_values.size() != signal_energies.size()) {
    throw std::domain_error(fmt::format("crb_to_srer_bound: need matching nonempty lists, got {} and {}",
                                        crb_values.size(), signal_energies.size()));
  }
  double const crb_sum = std::accumulate(crb_values.begin(), crb_values.end(), 0.0);
  double const energy_sum = std::accumulate(signal_energies.begin(), signal_energies.end(), 0.0);
  return 10.0 * std::log10(energy_sum / crb_sum);
}

} // namespace lrmr
