#pragma once

#include "lrmr/sensing.hpp"
#include "lrmr/structures.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace lrmr {

/// X = L R with L n x r and R r x p.
struct FactorPair
{
  Matrix L;
  Matrix R;

  Matrix product() const { return L * R; }
};

struct SolverOptions
{
  int    max_iters = 500;
  double rel_tol = 1e-8;
  /// Also report P(LR) for structured solves.
  bool final_project = false;

  void validate() const;
};

enum class Termination
{
  Converged,
  MaxIters,
  ResidualIncrease,
};

std::string_view to_string(Termination t);

struct SolverReport
{
  Matrix                estimate; // L R
  FactorPair            factors;
  std::vector<double>   residual_history;  // J after each full iteration
  std::vector<double>   half_step_history; // J after every factor update that ends a half-step
  int                   iterations = 0;
  Termination           termination = Termination::MaxIters;
  std::optional<Matrix> projected_estimate; // P(LR), when requested

  double final_residual() const { return residual_history.back(); }
};

/// L = U0 Sigma0 from the rank-r truncated SVD of mat(A^T y); R is left
/// empty (r x p zeros).
FactorPair init_factors(SensingOperator const &op, Vector const &y, Eigen::Index r);

/// J(L, R) = ||y - A vec(L R)||^2.
double residual(SensingOperator const &op, Vector const &y, FactorPair const &factors);

/// argmin_R J(L, R) = mat_{r,p}([A (I_p kron L)]^+ y).
Matrix solve_r_step(SensingOperator const &op, Vector const &y, Matrix const &L);

/// argmin_L J(L, R) = mat_{n,r}([A (R^T kron I_n)]^+ y).
Matrix solve_l_step(SensingOperator const &op, Vector const &y, Matrix const &R);

/// Plain alternating least squares. Stops when J drops by no more than
/// rel_tol relative over a full iteration, or after max_iters.
SolverReport als_unstructured(SensingOperator const &op, Vector const &y, Eigen::Index r,
                              SolverOptions const &opts = {});

/// ALS with lift-and-project onto the structure after each factor update:
///
///   R := argmin J(L, .);  Xbar := P(LR);  R := L^+ Xbar
///   L := argmin J(., R);  Xbar := P(LR);  L := Xbar R^+
///
/// J is evaluated at the end of each iteration; the loop stops as soon as J
/// fails to decrease by more than rel_tol (relative) and returns the
/// factors with the smallest J seen. For Unstructured the projection steps
/// are skipped and the trajectory equals als_unstructured.
SolverReport als_structured(SensingOperator const &op, Vector const &y, Eigen::Index r, StructureSpec const &structure,
                            SolverOptions const &opts = {});

} // namespace lrmr
