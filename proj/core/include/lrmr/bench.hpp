#pragma once

#include "lrmr/als.hpp"
#include "lrmr/crb.hpp"
#include "lrmr/structures.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lrmr {

/// One Monte Carlo experiment point. The rank is r = round(lambda_rel *
/// min(n, p)) and the measurement count m = ceil(rho * n * p).
struct ExperimentConfig
{
  Eigen::Index    n = 40;
  Eigen::Index    p = 40;
  double          lambda_rel = 0.05;
  double          rho = 0.3;
  double          smnr_db = 10.0;
  StructureKind   structure = StructureKind::Hankel;
  int             trials = 50;
  std::uint64_t   base_seed = 1;
  SolverOptions   solver;
  HankelGenerator generator_method = HankelGenerator::PronyOnNoise;
  bool            compute_crb = true;
  /// Overrides smnr_db with noise-free measurements.
  bool noiseless = false;
  /// Lifts the m < n*p requirement.
  bool allow_full_sampling = false;

  Eigen::Index rank() const;
  Eigen::Index measurements() const;

  /// Throws ConfigError naming every offending field.
  void validate() const;
};

class ConfigError : public std::domain_error
{
public:
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> const &problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

struct TrialResult
{
  int                      trial_index = 0;
  std::uint64_t            seed = 0;
  bool                     failed = false;
  std::string              failure;
  double                   signal_energy = 0.0;
  double                   sigma2 = 0.0;
  double                   err_unstructured = 0.0;
  std::optional<double>    err_structured;
  std::optional<CrbResult> crb_unstructured;
  std::optional<CrbResult> crb_structured;
  int                      iterations_unstructured = 0;
  int                      iterations_structured = 0;
  double                   residual_unstructured = 0.0;
  double                   residual_structured = 0.0;
  /// Largest relative rise of J between consecutive half-steps of the
  /// unstructured solve; zero when J never increased.
  double unstructured_max_rise = 0.0;
};

enum class Estimator
{
  Unstructured,
  Structured,
};

enum class SweepParameter
{
  Smnr,
  Rho,
  Lambda,
};

std::string_view to_string(SweepParameter parameter);
SweepParameter   sweep_parameter_from_string(std::string_view name);

struct SweepPoint
{
  double                value = 0.0;
  std::optional<double> srer_unstructured_db;
  std::optional<double> srer_structured_db;
  std::optional<double> bound_unstructured_db;
  std::optional<double> bound_structured_db;
  int                   trials_ok = 0;
  int                   trials_failed = 0;
  int                   crb_invalid_unstructured = 0;
  int                   crb_invalid_structured = 0;

  int crb_invalid() const { return crb_invalid_unstructured + crb_invalid_structured; }
};

struct SweepResult
{
  SweepParameter          parameter = SweepParameter::Smnr;
  ExperimentConfig        config;
  std::vector<SweepPoint> points;
  /// Every trial, point-major in trial-index order.
  std::vector<TrialResult> trials;
};

/// A config plus the parameter sweep to run over it, as read from JSON.
struct SweepPlan
{
  ExperimentConfig    config;
  SweepParameter      parameter = SweepParameter::Smnr;
  std::vector<double> values;
};

/// Largest relative increase between consecutive entries of `history`.
double max_relative_rise(std::vector<double> const &history);

/// sigma^2 = energy / (m 10^(smnr_db / 10)), so E||n||^2 = energy / SMNR.
double sigma_for_smnr(double signal_energy, Eigen::Index m, double smnr_db);

/// Seed of trial `index`: splitmix64 finalizer over base_seed and index.
std::uint64_t trial_seed(std::uint64_t base_seed, int index);

/// One realization of X, A and y followed by both solvers and the bounds.
/// Deterministic in (config, trial_index); failures are recorded, not thrown.
TrialResult run_trial(ExperimentConfig const &config, int trial_index);

/// 10 log10(sum energy / sum error) over non-failed trials. Throws
/// std::domain_error when no trial qualifies.
double aggregate_srer(std::span<TrialResult const> trials, Estimator which);

/// CRB-implied SRER bound over trials with a valid bound, together with the
/// number of invalid bounds. Empty when no valid bound exists.
struct BoundSummary
{
  std::optional<double> bound_db;
  int                   invalid = 0;
};
BoundSummary aggregate_bound(std::span<TrialResult const> trials, Estimator which);

/// Copy of `config` with the swept parameter set to `value`.
ExperimentConfig with_parameter(ExperimentConfig config, SweepParameter parameter, double value);

/// Runs every trial of every point on `threads` workers (0 = hardware
/// concurrency). The result does not depend on the worker count.
SweepResult sweep(ExperimentConfig const &config, SweepParameter parameter, std::span<double const> values,
                  unsigned threads = 1);

/// Aggregates the trials of one point (in trial-index order).
SweepPoint summarize_point(double value, std::span<TrialResult const> trials);

inline constexpr std::string_view kResultsHeader =
  "sweep_param,value,srer_unstr_db,srer_str_db,bound_unstr_db,bound_str_db,trials_ok,trials_failed,crb_invalid";

/// Writes the results CSV and a JSON sidecar (same stem, .json) holding the
/// config, the sweep and the library version. Throws IoError on failure.
void persist(SweepResult const &result, std::filesystem::path const &path);

std::filesystem::path sidecar_path(std::filesystem::path const &csv_path);

/// Rows of a persisted results CSV. Throws std::domain_error on schema
/// mismatch and IoError when unreadable.
struct PersistedSweep
{
  SweepParameter          parameter = SweepParameter::Smnr;
  std::vector<SweepPoint> points;
};
PersistedSweep load_results_csv(std::filesystem::path const &path);

/// JSON (de)serialization of configs and sweep plans.
std::string      config_to_json(ExperimentConfig const &config, int indent = 2);
ExperimentConfig config_from_json(std::string_view text);
SweepPlan        sweep_plan_from_json(std::string_view text);
SweepPlan        load_sweep_plan(std::filesystem::path const &path);

std::string_view library_version();

} // namespace lrmr
