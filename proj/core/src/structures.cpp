#include "lrmr/structures.hpp"

#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lrmr {

namespace {

constexpr double kOverflowLimit = 1e12;
constexpr int    kGeneratorAttempts = 10;

Vector standard_normal(Eigen::Index size, Rng &rng)
{
  std::normal_distribution<double> unit(0.0, 1.0);
  Vector                           v(size);
  for (Eigen::Index k = 0; k < size; ++k) { v(k) = unit(rng); }
  return v;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng &rng)
{
  return standard_normal(rows * cols, rng).reshaped(rows, cols);
}

void guard_overflow(double value, Eigen::Index k)
{
  if (!std::isfinite(value) || std::abs(value) > kOverflowLimit) {
    throw std::overflow_error(fmt::format(
      "hankel recurrence is unstable: |h_{}| exceeds {:g}; the companion matrix has poles outside the unit circle", k,
      kOverflowLimit));
  }
}

// Impulse response x_k = (Phi^k e_1)_1 of the recurrence x_k = -sum_l a_l x_{k-l},
// x_0 = 1. Then (Phi^k e_1)_j = x_{k-j} (zero-based j, x_negative = 0).
Vector impulse_response(Vector const &a, Eigen::Index length)
{
  Eigen::Index const r = a.size();
  Vector             x = Vector::Zero(length);
  if (length == 0) { return x; }
  x(0) = 1.0;
  for (Eigen::Index k = 1; k < length; ++k) {
    double acc = 0.0;
    for (Eigen::Index l = 1; l <= std::min(k, r); ++l) { acc -= a(l - 1) * x(k - l); }
    guard_overflow(acc, k);
    x(k) = acc;
  }
  return x;
}

// G(k, j) = (Phi^k e_1)_j, so h = G b.
Matrix state_matrix(Vector const &x, Eigen::Index r)
{
  Eigen::Index const length = x.size();
  Matrix             G = Matrix::Zero(length, r);
  for (Eigen::Index k = 0; k < length; ++k) {
    for (Eigen::Index j = 0; j < r && j <= k; ++j) { G(k, j) = x(k - j); }
  }
  return G;
}

void check_params(HankelParams const &params)
{
  if (params.a.size() < 1 || params.a.size() != params.b.size()) {
    throw std::domain_error(
      fmt::format("hankel params: need len(a) = len(b) >= 1, got {} and {}", params.a.size(), params.b.size()));
  }
}

std::vector<std::complex<double>> companion_roots(Vector const &a)
{
  HankelParams const              tmp{a, Vector::Zero(a.size())};
  Eigen::EigenSolver<Matrix>      eig(tmp.companion(), false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) { roots.push_back(eig.eigenvalues()(i)); }
  return roots;
}

// Monic polynomial z^r + a_1 z^{r-1} + ... + a_r with the given roots.
Vector coefficients_from_roots(std::vector<std::complex<double>> const &roots)
{
  std::vector<std::complex<double>> c{1.0};
  for (auto const &root : roots) {
    c.push_back(0.0);
    for (std::size_t k = c.size() - 1; k >= 1; --k) { c[k] -= root * c[k - 1]; }
  }
  Vector a(static_cast<Eigen::Index>(roots.size()));
  for (Eigen::Index l = 0; l < a.size(); ++l) { a(l) = c[static_cast<std::size_t>(l) + 1].real(); }
  return a;
}

} // namespace

std::string_view to_string(StructureKind kind)
{
  switch (kind) {
  case StructureKind::Unstructured: return "none";
  case StructureKind::LinearSubspace: return "subspace";
  case StructureKind::Hankel: return "hankel";
  case StructureKind::Toeplitz: return "toeplitz";
  case StructureKind::Psd: return "psd";
  }
  return "unknown";
}

StructureKind structure_kind_from_string(std::string_view name)
{
  if (name == "none" || name == "unstructured") { return StructureKind::Unstructured; }
  if (name == "hankel") { return StructureKind::Hankel; }
  if (name == "toeplitz") { return StructureKind::Toeplitz; }
  if (name == "psd") { return StructureKind::Psd; }
  if (name == "subspace") { return StructureKind::LinearSubspace; }
  throw std::domain_error(fmt::format("unknown structure '{}' (expected none|hankel|toeplitz|psd)", name));
}

StructureSpec StructureSpec::linear_subspace(Matrix S)
{
  if (S.cols() < 1 || S.cols() > S.rows()) {
    throw std::domain_error(fmt::format("linear structure: basis is {}x{}, need 1 <= q <= np", S.rows(), S.cols()));
  }
  if (numerical_rank(S) < S.cols()) { throw std::domain_error("linear structure: basis S is rank deficient"); }
  StructureSpec spec(StructureKind::LinearSubspace);
  Matrix        S_pinv = pinv(S);
  spec.subspace_ = std::make_shared<Subspace const>(Subspace{std::move(S), std::move(S_pinv)});
  return spec;
}

StructureSpec StructureSpec::of_kind(StructureKind kind)
{
  if (kind == StructureKind::LinearSubspace) {
    throw std::domain_error("linear structure: a basis is required, use StructureSpec::linear_subspace");
  }
  return StructureSpec(kind);
}

Matrix const &StructureSpec::basis() const
{
  if (!subspace_) { throw std::logic_error("structure has no explicit basis"); }
  return subspace_->S;
}

Matrix const &StructureSpec::basis_pinv() const
{
  if (!subspace_) { throw std::logic_error("structure has no explicit basis"); }
  return subspace_->S_pinv;
}

void StructureSpec::check_compatible(Eigen::Index n, Eigen::Index p) const
{
  if (kind_ == StructureKind::Psd && n != p) {
    throw std::domain_error(fmt::format("psd structure needs a square matrix, got n = {}, p = {}", n, p));
  }
  if (kind_ == StructureKind::LinearSubspace && subspace_->S.rows() != n * p) {
    throw std::domain_error(fmt::format("linear structure: basis has {} rows, need n*p = {}", subspace_->S.rows(), n * p));
  }
}

Matrix linear_basis(StructureKind kind, Eigen::Index n, Eigen::Index p)
{
  if (n < 1 || p < 1) { throw std::domain_error("linear_basis: dimensions must be positive"); }
  if (kind != StructureKind::Hankel && kind != StructureKind::Toeplitz) {
    throw std::domain_error("linear_basis: only hankel and toeplitz have a built-in basis");
  }
  Matrix S = Matrix::Zero(n * p, n + p - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index const t = kind == StructureKind::Hankel ? i + j : i - j + p - 1;
      S(i + j * n, t) = 1.0;
    }
  }
  return S;
}

Matrix hankel_matrix(Vector const &theta, Eigen::Index n, Eigen::Index p)
{
  if (theta.size() != n + p - 1) {
    throw std::domain_error(fmt::format("hankel_matrix: need {} parameters, got {}", n + p - 1, theta.size()));
  }
  Matrix X(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) { X(i, j) = theta(i + j); }
  }
  return X;
}

Matrix toeplitz_matrix(Vector const &theta, Eigen::Index n, Eigen::Index p)
{
  if (theta.size() != n + p - 1) {
    throw std::domain_error(fmt::format("toeplitz_matrix: need {} parameters, got {}", n + p - 1, theta.size()));
  }
  Matrix X(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) { X(i, j) = theta(i - j + p - 1); }
  }
  return X;
}

Matrix project_linear(Matrix const &S, Matrix const &Z)
{
  if (S.rows() != Z.size()) {
    throw std::domain_error(fmt::format("project_linear: basis has {} rows, matrix has {} entries", S.rows(), Z.size()));
  }
  if (numerical_rank(S) < S.cols()) { throw std::domain_error("project_linear: basis S is rank deficient"); }
  Vector const theta = pinv_solve(S, vec(Z));
  return mat(S * theta, Z.rows(), Z.cols());
}

Matrix average_antidiagonals(Matrix const &Z)
{
  Eigen::Index const n = Z.rows(), p = Z.cols();
  Vector             sum = Vector::Zero(n + p - 1);
  Vector             count = Vector::Zero(n + p - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sum(i + j) += Z(i, j);
      count(i + j) += 1.0;
    }
  }
  return hankel_matrix(sum.cwiseQuotient(count), n, p);
}

Matrix average_diagonals(Matrix const &Z)
{
  Eigen::Index const n = Z.rows(), p = Z.cols();
  Vector             sum = Vector::Zero(n + p - 1);
  Vector             count = Vector::Zero(n + p - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      sum(i - j + p - 1) += Z(i, j);
      count(i - j + p - 1) += 1.0;
    }
  }
  return toeplitz_matrix(sum.cwiseQuotient(count), n, p);
}

Matrix project_psd(Matrix const &Z, Eigen::Index r)
{
  if (Z.rows() != Z.cols()) {
    throw std::domain_error(fmt::format("project_psd: input is {}x{}, not square", Z.rows(), Z.cols()));
  }
  auto const eig = sym_eig_trunc(Z, r);
  Vector const kept = eig.values.cwiseMax(0.0);
  return eig.vectors * kept.asDiagonal() * eig.vectors.transpose();
}

Matrix project(StructureSpec const &spec, Matrix const &Z, Eigen::Index r)
{
  switch (spec.kind()) {
  case StructureKind::Unstructured: return Z;
  case StructureKind::Hankel: return average_antidiagonals(Z);
  case StructureKind::Toeplitz: return average_diagonals(Z);
  case StructureKind::Psd: return project_psd(Z, r);
  case StructureKind::LinearSubspace:
    spec.check_compatible(Z.rows(), Z.cols());
    return mat(spec.basis() * (spec.basis_pinv() * vec(Z)), Z.rows(), Z.cols());
  }
  throw std::logic_error("project: unhandled structure");
}

Matrix HankelParams::companion() const
{
  Eigen::Index const r = a.size();
  Matrix             Phi = Matrix::Zero(r, r);
  Phi.row(0) = -a.transpose();
  for (Eigen::Index i = 1; i < r; ++i) { Phi(i, i - 1) = 1.0; }
  return Phi;
}

Vector hankel_sequence(HankelParams const &params, Eigen::Index length)
{
  check_params(params);
  Eigen::Index const r = params.order();
  Eigen::Index const head = std::min(r, length);
  Vector const       x = impulse_response(params.a, head);
  Vector             h(length);
  for (Eigen::Index k = 0; k < head; ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j <= k; ++j) { acc += params.b(j) * x(k - j); }
    h(k) = acc;
  }
  // Cayley-Hamilton: the sequence obeys the same order-r recurrence as x.
  for (Eigen::Index k = r; k < length; ++k) {
    double acc = 0.0;
    for (Eigen::Index l = 1; l <= r; ++l) { acc -= params.a(l - 1) * h(k - l); }
    guard_overflow(acc, k);
    h(k) = acc;
  }
  return h;
}

Matrix hankel_from_params(HankelParams const &params, Eigen::Index n, Eigen::Index p)
{
  return hankel_matrix(hankel_sequence(params, n + p - 1), n, p);
}

Matrix hankel_gradient(HankelParams const &params, Eigen::Index n, Eigen::Index p)
{
  check_params(params);
  Eigen::Index const r = params.order();
  Eigen::Index const length = n + p - 1;
  Vector const       x = impulse_response(params.a, length);
  Vector const       h = hankel_sequence(params, length);
  Matrix             D = Matrix::Zero(length, 2 * r);

  // b-block: dh_k/db_j = (Phi^k e_1)_j.
  D.rightCols(r) = state_matrix(x, r);

  // Sensitivities of x: dx_k/da_j = -x_{k-j} - sum_l a_l dx_{k-l}/da_j.
  Matrix dx = Matrix::Zero(length, r);
  for (Eigen::Index k = 1; k < length; ++k) {
    for (Eigen::Index j = 1; j <= r; ++j) {
      double acc = k - j >= 0 ? -x(k - j) : 0.0;
      for (Eigen::Index l = 1; l <= std::min(k, r); ++l) { acc -= params.a(l - 1) * dx(k - l, j - 1); }
      dx(k, j - 1) = acc;
    }
  }
  // Leading terms k < r depend on a through x; later ones follow the
  // differentiated recurrence dh_k/da_j = -h_{k-j} - sum_l a_l dh_{k-l}/da_j.
  for (Eigen::Index k = 0; k < std::min(r, length); ++k) {
    for (Eigen::Index j = 0; j < r; ++j) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i <= k; ++i) { acc += params.b(i) * dx(k - i, j); }
      D(k, j) = acc;
    }
  }
  for (Eigen::Index k = r; k < length; ++k) {
    for (Eigen::Index j = 1; j <= r; ++j) {
      double acc = -h(k - j);
      for (Eigen::Index l = 1; l <= r; ++l) { acc -= params.a(l - 1) * D(k - l, j - 1); }
      guard_overflow(acc, k);
      D(k, j - 1) = acc;
    }
  }
  return D;
}

HankelParams prony_fit(Vector const &h, Eigen::Index r)
{
  Eigen::Index const N = h.size();
  if (r < 1 || N < 2 * r) {
    throw std::domain_error(fmt::format("prony_fit: order {} needs at least {} samples, got {}", r, 2 * r, N));
  }
  // Linear prediction: sum_l a_l h_{k-l} = -h_k for k = r .. N-1.
  Matrix P(N - r, r);
  Vector rhs(N - r);
  for (Eigen::Index k = r; k < N; ++k) {
    for (Eigen::Index l = 1; l <= r; ++l) { P(k - r, l - 1) = h(k - l); }
    rhs(k - r) = -h(k);
  }
  if (numerical_rank(P) < r) {
    throw std::domain_error(fmt::format("prony_fit: linear-prediction system has rank below {}", r));
  }
  Vector const a_ls = pinv_solve(P, rhs);

  auto roots = companion_roots(a_ls);
  for (auto &z : roots) {
    double const modulus = std::abs(z);
    if (modulus > 1.0) { z /= modulus; }
  }
  HankelParams out{coefficients_from_roots(roots), Vector()};
  Matrix const G = state_matrix(impulse_response(out.a, N), r);
  out.b = pinv_solve(G, h);
  return out;
}

Matrix psd_gradient(PsdFactor const &factor)
{
  Matrix const &M = factor.M;
  Eigen::Index const n = M.rows(), r = M.cols();
  Matrix const       In = Matrix::Identity(n, n);
  Matrix const       left = Eigen::kroneckerProduct(In, M);
  Matrix const       right = Eigen::kroneckerProduct(M, In);
  return left * commutation_matrix(n, r) + right;
}

std::string_view to_string(HankelGenerator method)
{
  return method == HankelGenerator::PronyOnNoise ? "prony" : "unit_circle";
}

HankelGenerator hankel_generator_from_string(std::string_view name)
{
  if (name == "prony") { return HankelGenerator::PronyOnNoise; }
  if (name == "unit_circle") { return HankelGenerator::UnitCirclePoles; }
  throw std::domain_error(fmt::format("unknown hankel generator '{}' (expected prony|unit_circle)", name));
}

namespace {

HankelSample unit_circle_sample(Eigen::Index n, Eigen::Index p, Eigen::Index r, Rng &rng)
{
  Eigen::Index const                     length = n + p - 1;
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::vector<std::complex<double>>      poles;
  std::vector<double>                    omegas;
  for (Eigen::Index i = 0; i + 1 < r; i += 2) {
    double const w = angle(rng);
    omegas.push_back(w);
    poles.push_back(std::polar(1.0, w));
    poles.push_back(std::polar(1.0, -w));
  }
  double real_pole = 0.0;
  if (r % 2 == 1) {
    real_pole = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    poles.emplace_back(real_pole, 0.0);
  }
  Vector const amplitudes = standard_normal(r, rng);
  Vector       h = Vector::Zero(length);
  for (Eigen::Index k = 0; k < length; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      double const w = omegas[i] * static_cast<double>(k);
      acc += amplitudes(2 * static_cast<Eigen::Index>(i)) * std::cos(w) +
             amplitudes(2 * static_cast<Eigen::Index>(i) + 1) * std::sin(w);
    }
    if (r % 2 == 1) { acc += amplitudes(r - 1) * std::pow(real_pole, static_cast<double>(k)); }
    h(k) = acc;
  }
  HankelParams params{coefficients_from_roots(poles), Vector()};
  Matrix const G = state_matrix(impulse_response(params.a, length), r);
  params.b = pinv_solve(G, h);
  return {hankel_from_params(params, n, p), params, amplitudes};
}

} // namespace

HankelSample generate_hankel_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, HankelGenerator method, Rng &rng)
{
  if (r < 1 || r > std::min(n, p)) {
    throw std::domain_error(fmt::format("generate_hankel_lowrank: rank {} outside [1, {}]", r, std::min(n, p)));
  }
  if (method == HankelGenerator::UnitCirclePoles) { return unit_circle_sample(n, p, r, rng); }
  std::string last_error;
  for (int attempt = 0; attempt < kGeneratorAttempts; ++attempt) {
    Vector const noise = standard_normal(n + p - 1, rng);
    try {
      HankelParams params = prony_fit(noise, r);
      Matrix       X = hankel_from_params(params, n, p);
      return {std::move(X), std::move(params), Vector()};
    } catch (std::exception const &e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error(
    fmt::format("generate_hankel_lowrank: Prony fit failed {} times, last error: {}", kGeneratorAttempts, last_error));
}

HankelSample generate_toeplitz_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, HankelGenerator method,
                                       Rng &rng)
{
  HankelSample sample = generate_hankel_lowrank(n, p, r, method, rng);
  sample.X = sample.X.colwise().reverse().eval();
  return sample;
}

PsdSample generate_psd_lowrank(Eigen::Index n, Eigen::Index r, Rng &rng)
{
  if (r < 1 || r > n) { throw std::domain_error(fmt::format("generate_psd_lowrank: rank {} outside [1, {}]", r, n)); }
  PsdFactor factor{standard_normal(n, r, rng)};
  Matrix    X = factor.product();
  return {std::move(X), std::move(factor)};
}

Matrix generate_generic_lowrank(Eigen::Index n, Eigen::Index p, Eigen::Index r, Rng &rng)
{
  if (r < 1 || r > std::min(n, p)) {
    throw std::domain_error(fmt::format("generate_generic_lowrank: rank {} outside [1, {}]", r, std::min(n, p)));
  }
  Matrix const L = standard_normal(n, r, rng);
  Matrix const R = standard_normal(r, p, rng);
  return L * R;
}

} // namespace lrmr
