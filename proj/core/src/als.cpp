#include "lrmr/als.hpp"

#include <fmt/format.h>

#include <limits>
#include <stdexcept>

namespace lrmr {

void SolverOptions::validate() const
{
  if (max_iters < 1) { throw std::domain_error(fmt::format("solver: max_iters must be positive, got {}", max_iters)); }
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw std::domain_error(fmt::format("solver: rel_tol must lie in (0, 1), got {}", rel_tol));
  }
}

std::string_view to_string(Termination t)
{
  switch (t) {
  case Termination::Converged: return "converged";
  case Termination::MaxIters: return "max_iters";
  case Termination::ResidualIncrease: return "residual_increase";
  }
  return "unknown";
}

namespace {

void check_rank(SensingOperator const &op, Eigen::Index r)
{
  if (r < 1 || r > std::min(op.n(), op.p())) {
    throw std::domain_error(fmt::format("rank {} outside [1, {}] for {}x{} matrices", r, std::min(op.n(), op.p()),
                                        op.n(), op.p()));
  }
}

void check_data(SensingOperator const &op, Vector const &y)
{
  if (y.size() != op.m()) {
    throw std::domain_error(fmt::format("measurement vector has length {}, operator has m = {}", y.size(), op.m()));
  }
}

bool is_zero(Matrix const &M) { return M.size() == 0 || (M.array() == 0.0).all(); }

// A fit to ten significant digits counts as exact; below that, J only moves
// with rounding in the LS solves and its evaluation.
double residual_floor(Vector const &y) { return 1e-20 * y.squaredNorm(); }

SolverReport run_als(SensingOperator const &op, Vector const &y, Eigen::Index r, StructureSpec const *structure,
                     SolverOptions const &opts)
{
  opts.validate();
  check_rank(op, r);
  check_data(op, y);
  if (structure != nullptr) { structure->check_compatible(op.n(), op.p()); }

  TruncatedSvd const init = svd_trunc(op.adjoint(y), r);
  Matrix const       L0 = init.U0 * init.sigma.asDiagonal();
  Matrix const       R0 = init.V0.transpose();
  bool const         data_nonzero = !is_zero(y);

  double const floor_J = residual_floor(y);

  FactorPair   f{L0, Matrix::Zero(r, op.p())};
  FactorPair   best = f;
  double       best_J = std::numeric_limits<double>::infinity();
  SolverReport report;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    // A factor that collapses to exactly zero would pin the iterate at zero.
    if (data_nonzero && is_zero(f.L)) { f.L = L0; }
    f.R = solve_r_step(op, y, f.L);
    report.half_step_history.push_back(residual(op, y, f));
    if (structure == nullptr && report.half_step_history.back() <= floor_J) {
      report.residual_history.push_back(report.half_step_history.back());
      report.iterations = iter;
      report.termination = Termination::Converged;
      best = f;
      break;
    }
    if (structure != nullptr) {
      Matrix const Xbar = project(*structure, f.product(), r);
      f.R = pinv_solve(f.L, Xbar);
    }

    if (data_nonzero && is_zero(f.R)) { f.R = R0; }
    f.L = solve_l_step(op, y, f.R);
    report.half_step_history.push_back(residual(op, y, f));
    if (structure != nullptr) {
      Matrix const Xbar = project(*structure, f.product(), r);
      f.L = pinv_solve(f.R.transpose(), Xbar.transpose()).transpose();
    }

    double const J = structure != nullptr ? residual(op, y, f) : report.half_step_history.back();
    report.residual_history.push_back(J);
    report.iterations = iter;
    if (J < best_J) {
      best_J = J;
      best = f;
    }
    if (J <= floor_J) {
      report.termination = Termination::Converged;
      break;
    }
    if (iter > 1) {
      double const prev = report.residual_history[report.residual_history.size() - 2];
      if (J > prev * (1.0 + opts.rel_tol)) {
        report.termination = Termination::ResidualIncrease;
        break;
      }
      if (prev - J <= opts.rel_tol * prev) {
        report.termination = Termination::Converged;
        break;
      }
    }
    report.termination = Termination::MaxIters;
  }

  report.factors = std::move(best);
  report.estimate = report.factors.product();
  if (structure != nullptr && opts.final_project) {
    report.projected_estimate = project(*structure, report.estimate, r);
  }
  return report;
}

} // namespace

FactorPair init_factors(SensingOperator const &op, Vector const &y, Eigen::Index r)
{
  check_rank(op, r);
  check_data(op, y);
  TruncatedSvd const svd = svd_trunc(op.adjoint(y), r);
  return {svd.U0 * svd.sigma.asDiagonal(), Matrix::Zero(r, op.p())};
}

double residual(SensingOperator const &op, Vector const &y, FactorPair const &factors)
{
  check_data(op, y);
  return (y - op.apply(factors.product())).squaredNorm();
}

Matrix solve_r_step(SensingOperator const &op, Vector const &y, Matrix const &L)
{
  check_data(op, y);
  Matrix const F = op.factored_for_right(L);
  return mat(pinv_solve(F, y), L.cols(), op.p());
}

Matrix solve_l_step(SensingOperator const &op, Vector const &y, Matrix const &R)
{
  check_data(op, y);
  Matrix const F = op.factored_for_left(R);
  return mat(pinv_solve(F, y), op.n(), R.rows());
}

SolverReport als_unstructured(SensingOperator const &op, Vector const &y, Eigen::Index r, SolverOptions const &opts)
{
  return run_als(op, y, r, nullptr, opts);
}

SolverReport als_structured(SensingOperator const &op, Vector const &y, Eigen::Index r, StructureSpec const &structure,
                            SolverOptions const &opts)
{
  if (structure.kind() == StructureKind::Unstructured) {
    SolverReport report = run_als(op, y, r, nullptr, opts);
    if (opts.final_project) { report.projected_estimate = report.estimate; }
    return report;
  }
  return run_als(op, y, r, &structure, opts);
}

} // namespace lrmr
