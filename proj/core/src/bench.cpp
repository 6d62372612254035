#include "lrmr/bench.hpp"

#include "lrmr/matrix_io.hpp"
#include "lrmr/version.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace lrmr {

using json = nlohmann::json;

ConfigError::ConfigError(std::vector<std::string> problems)
  : std::domain_error(fmt::format("invalid configuration: {}", fmt::join(problems, "; ")))
  , problems_{std::move(problems)}
{
}

Eigen::Index ExperimentConfig::rank() const
{
  return static_cast<Eigen::Index>(std::lround(lambda_rel * static_cast<double>(std::min(n, p))));
}

Eigen::Index ExperimentConfig::measurements() const
{
  // The small slack keeps e.g. 0.3 * 1600 from rounding up to 481.
  double const exact = rho * static_cast<double>(n * p);
  return static_cast<Eigen::Index>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
}

void ExperimentConfig::validate() const
{
  std::vector<std::string> problems;
  if (n < 1) { problems.push_back(fmt::format("n: must be positive, got {}", n)); }
  if (p < 1) { problems.push_back(fmt::format("p: must be positive, got {}", p)); }
  if (!(lambda_rel > 0.0 && lambda_rel <= 1.0)) {
    problems.push_back(fmt::format("lambda: must lie in (0, 1], got {}", lambda_rel));
  }
  if (!(rho > 0.0 && rho <= 1.0)) { problems.push_back(fmt::format("rho: must lie in (0, 1], got {}", rho)); }
  if (!std::isfinite(smnr_db)) { problems.push_back("smnr_db: must be finite (use noiseless for noise-free runs)"); }
  if (trials < 1) { problems.push_back(fmt::format("trials: must be positive, got {}", trials)); }
  if (solver.max_iters < 1) { problems.push_back(fmt::format("solver.max_iters: must be positive, got {}", solver.max_iters)); }
  if (!(solver.rel_tol > 0.0 && solver.rel_tol < 1.0)) {
    problems.push_back(fmt::format("solver.rel_tol: must lie in (0, 1), got {}", solver.rel_tol));
  }
  if (structure == StructureKind::LinearSubspace) {
    problems.push_back("structure: experiments support none|hankel|toeplitz|psd");
  }
  if (structure == StructureKind::Psd && n != p) { problems.push_back("structure: psd requires n = p"); }
  if (problems.empty()) {
    if (rank() < 1) {
      problems.push_back(fmt::format("lambda: rank round({} * {}) is zero", lambda_rel, std::min(n, p)));
    }
    if (measurements() < 1) { problems.push_back("rho: gives no measurements"); }
    if (measurements() >= n * p && !allow_full_sampling) {
      problems.push_back(fmt::format("rho: m = {} is not below n*p = {} (set allow_full_sampling to permit)",
                                     measurements(), n * p));
    }
  }
  if (!problems.empty()) { throw ConfigError(std::move(problems)); }
}

std::string_view to_string(SweepParameter parameter)
{
  switch (parameter) {
  case SweepParameter::Smnr: return "smnr";
  case SweepParameter::Rho: return "rho";
  case SweepParameter::Lambda: return "lambda";
  }
  return "unknown";
}

SweepParameter sweep_parameter_from_string(std::string_view name)
{
  if (name == "smnr") { return SweepParameter::Smnr; }
  if (name == "rho") { return SweepParameter::Rho; }
  if (name == "lambda") { return SweepParameter::Lambda; }
  throw std::domain_error(fmt::format("unknown sweep parameter '{}' (expected smnr|rho|lambda)", name));
}

double sigma_for_smnr(double signal_energy, Eigen::Index m, double smnr_db)
{
  if (!(signal_energy > 0.0)) {
    throw std::domain_error(fmt::format("sigma_for_smnr: signal energy must be positive, got {}", signal_energy));
  }
  if (m < 1) { throw std::domain_error("sigma_for_smnr: m must be positive"); }
  return signal_energy / (static_cast<double>(m) * std::pow(10.0, smnr_db / 10.0));
}

double max_relative_rise(std::vector<double> const &history)
{
  double worst = 0.0;
  for (std::size_t k = 1; k < history.size(); ++k) {
    double const prev = history[k - 1];
    double const rise = history[k] - prev;
    if (rise > 0.0) { worst = std::max(worst, prev > 0.0 ? rise / prev : std::numeric_limits<double>::infinity()); }
  }
  return worst;
}

std::uint64_t trial_seed(std::uint64_t base_seed, int index)
{
  std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

struct GroundTruth
{
  Matrix                      X;
  std::optional<HankelParams> hankel;
  std::optional<PsdFactor>    psd;
};

GroundTruth generate_truth(ExperimentConfig const &config, Eigen::Index r, Rng &rng)
{
  switch (config.structure) {
  case StructureKind::Hankel: {
    auto sample = generate_hankel_lowrank(config.n, config.p, r, config.generator_method, rng);
    return {std::move(sample.X), std::move(sample.params), std::nullopt};
  }
  case StructureKind::Toeplitz: {
    auto sample = generate_toeplitz_lowrank(config.n, config.p, r, config.generator_method, rng);
    return {std::move(sample.X), std::nullopt, std::nullopt};
  }
  case StructureKind::Psd: {
    auto sample = generate_psd_lowrank(config.n, r, rng);
    return {std::move(sample.X), std::nullopt, std::move(sample.factor)};
  }
  default: return {generate_generic_lowrank(config.n, config.p, r, rng), std::nullopt, std::nullopt};
  }
}

template <typename F> CrbResult guarded_bound(F &&compute)
{
  try {
    return compute();
  } catch (std::exception const &e) {
    return CrbResult::invalid(e.what());
  }
}

} // namespace

TrialResult run_trial(ExperimentConfig const &config, int trial_index)
{
  TrialResult result;
  result.trial_index = trial_index;
  result.seed = trial_seed(config.base_seed, trial_index);
  try {
    config.validate();
    Eigen::Index const r = config.rank();
    Eigen::Index const m = config.measurements();
    Rng                rng(result.seed);

    GroundTruth const truth = generate_truth(config, r, rng);
    result.signal_energy = truth.X.squaredNorm();
    SensingOperator const op = make_gaussian_operator(config.n, config.p, m, rng);
    result.sigma2 = config.noiseless ? 0.0 : sigma_for_smnr(result.signal_energy, m, config.smnr_db);
    NoiseModel const noise = NoiseModel::iid(result.sigma2);
    Vector const     y = measure(op, truth.X, noise, rng);

    SolverReport const plain = als_unstructured(op, y, r, config.solver);
    result.err_unstructured = (truth.X - plain.estimate).squaredNorm();
    result.iterations_unstructured = plain.iterations;
    result.residual_unstructured = plain.final_residual();
    result.unstructured_max_rise = max_relative_rise(plain.half_step_history);

    if (config.structure != StructureKind::Unstructured) {
      SolverReport const structured = als_structured(op, y, r, StructureSpec::of_kind(config.structure), config.solver);
      Matrix const &estimate = structured.projected_estimate ? *structured.projected_estimate : structured.estimate;
      result.err_structured = (truth.X - estimate).squaredNorm();
      result.iterations_structured = structured.iterations;
      result.residual_structured = structured.final_residual();
    }

    if (config.compute_crb && !config.noiseless) {
      result.crb_unstructured = guarded_bound([&] { return crb_unstructured(op, noise, truth.X, r); });
      if (truth.hankel) {
        result.crb_structured = guarded_bound([&] { return crb_hankel(op, noise, *truth.hankel, config.n, config.p); });
      } else if (truth.psd) {
        result.crb_structured = guarded_bound([&] { return crb_psd(op, noise, *truth.psd); });
      }
    }
  } catch (std::exception const &e) {
    result.failed = true;
    result.failure = e.what();
  }
  return result;
}

double aggregate_srer(std::span<TrialResult const> trials, Estimator which)
{
  double energy = 0.0;
  double error = 0.0;
  int    used = 0;
  for (auto const &t : trials) {
    if (t.failed) { continue; }
    if (which == Estimator::Structured) {
      if (!t.err_structured) { continue; }
      error += *t.err_structured;
    } else {
      error += t.err_unstructured;
    }
    energy += t.signal_energy;
    ++used;
  }
  if (used == 0) { throw std::domain_error("aggregate_srer: no successful trials to aggregate"); }
  return 10.0 * std::log10(energy / error);
}

BoundSummary aggregate_bound(std::span<TrialResult const> trials, Estimator which)
{
  BoundSummary        out;
  std::vector<double> crbs;
  std::vector<double> energies;
  for (auto const &t : trials) {
    if (t.failed) { continue; }
    auto const &bound = which == Estimator::Structured ? t.crb_structured : t.crb_unstructured;
    if (!bound) { continue; }
    if (!bound->valid) {
      ++out.invalid;
      continue;
    }
    crbs.push_back(bound->value);
    energies.push_back(t.signal_energy);
  }
  if (!crbs.empty()) { out.bound_db = crb_to_srer_bound(crbs, energies); }
  return out;
}

ExperimentConfig with_parameter(ExperimentConfig config, SweepParameter parameter, double value)
{
  switch (parameter) {
  case SweepParameter::Smnr: config.smnr_db = value; break;
  case SweepParameter::Rho: config.rho = value; break;
  case SweepParameter::Lambda: config.lambda_rel = value; break;
  }
  return config;
}

SweepPoint summarize_point(double value, std::span<TrialResult const> trials)
{
  SweepPoint point;
  point.value = value;
  for (auto const &t : trials) { (t.failed ? point.trials_failed : point.trials_ok) += 1; }
  if (point.trials_ok > 0) {
    point.srer_unstructured_db = aggregate_srer(trials, Estimator::Unstructured);
    bool const structured = std::any_of(trials.begin(), trials.end(),
                                        [](TrialResult const &t) { return !t.failed && t.err_structured.has_value(); });
    if (structured) { point.srer_structured_db = aggregate_srer(trials, Estimator::Structured); }
  }
  BoundSummary const plain = aggregate_bound(trials, Estimator::Unstructured);
  BoundSummary const structured = aggregate_bound(trials, Estimator::Structured);
  point.bound_unstructured_db = plain.bound_db;
  point.bound_structured_db = structured.bound_db;
  point.crb_invalid_unstructured = plain.invalid;
  point.crb_invalid_structured = structured.invalid;
  return point;
}

SweepResult sweep(ExperimentConfig const &config, SweepParameter parameter, std::span<double const> values,
                  unsigned threads)
{
  if (values.empty()) { throw std::domain_error("sweep: no values to sweep"); }
  std::vector<ExperimentConfig> points;
  for (double v : values) {
    points.push_back(with_parameter(config, parameter, v));
    points.back().validate();
  }
  std::size_t const        per_point = static_cast<std::size_t>(config.trials);
  std::size_t const        total = points.size() * per_point;
  std::vector<TrialResult> results(total);

  if (threads == 0) { threads = std::max(1u, std::thread::hardware_concurrency()); }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::atomic<std::size_t> next{0};
  auto                     worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      results[task] = run_trial(points[task / per_point], static_cast<int>(task % per_point));
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) { pool.emplace_back(worker); }
  }

  SweepResult out;
  out.parameter = parameter;
  out.config = config;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::span<TrialResult const> slice(results.data() + i * per_point, per_point);
    out.points.push_back(summarize_point(values[i], slice));
  }
  out.trials = std::move(results);
  return out;
}

namespace {

std::string optional_field(std::optional<double> const &v) { return v ? format_real(*v) : std::string(); }

json config_json(ExperimentConfig const &c)
{
  return json{{"n", c.n},
              {"p", c.p},
              {"lambda", c.lambda_rel},
              {"rho", c.rho},
              {"smnr_db", c.smnr_db},
              {"structure", std::string(to_string(c.structure))},
              {"trials", c.trials},
              {"base_seed", c.base_seed},
              {"solver",
               {{"max_iters", c.solver.max_iters},
                {"rel_tol", c.solver.rel_tol},
                {"final_project", c.solver.final_project}}},
              {"generator", std::string(to_string(c.generator_method))},
              {"compute_crb", c.compute_crb},
              {"noiseless", c.noiseless},
              {"allow_full_sampling", c.allow_full_sampling}};
}

// Reads `key` into `out` when present, recording type errors in `problems`.
template <typename T>
void read_field(json const &obj, std::string const &key, std::string const &path, T &out,
                std::vector<std::string> &problems)
{
  auto it = obj.find(key);
  if (it == obj.end()) { return; }
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) { throw std::domain_error("expected a boolean"); }
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) { throw std::domain_error("expected an integer"); }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) { throw std::domain_error("expected a number"); }
    } else {
      if (!it->is_string()) { throw std::domain_error("expected a string"); }
    }
    out = it->get<T>();
  } catch (std::exception const &e) {
    problems.push_back(fmt::format("{}{}: {}", path, key, e.what()));
  }
}

void reject_unknown(json const &obj, std::vector<std::string> const &known, std::string const &path,
                    std::vector<std::string> &problems)
{
  for (auto const &[key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      problems.push_back(fmt::format("{}{}: unknown field", path, key));
    }
  }
}

ExperimentConfig parse_config(json const &obj, std::vector<std::string> &problems, std::vector<std::string> extra_known)
{
  ExperimentConfig c;
  if (!obj.is_object()) {
    problems.push_back("config: expected a JSON object");
    return c;
  }
  std::vector<std::string> known{"n",         "p",         "lambda",    "rho",         "smnr_db",  "structure",
                                 "trials",    "base_seed", "solver",    "generator",   "compute_crb", "noiseless",
                                 "allow_full_sampling"};
  known.insert(known.end(), extra_known.begin(), extra_known.end());
  reject_unknown(obj, known, "", problems);

  read_field(obj, "n", "", c.n, problems);
  read_field(obj, "p", "", c.p, problems);
  read_field(obj, "lambda", "", c.lambda_rel, problems);
  read_field(obj, "rho", "", c.rho, problems);
  read_field(obj, "smnr_db", "", c.smnr_db, problems);
  read_field(obj, "trials", "", c.trials, problems);
  read_field(obj, "base_seed", "", c.base_seed, problems);
  read_field(obj, "compute_crb", "", c.compute_crb, problems);
  read_field(obj, "noiseless", "", c.noiseless, problems);
  read_field(obj, "allow_full_sampling", "", c.allow_full_sampling, problems);

  std::string structure(to_string(c.structure));
  read_field(obj, "structure", "", structure, problems);
  try {
    c.structure = structure_kind_from_string(structure);
  } catch (std::exception const &e) {
    problems.push_back(fmt::format("structure: {}", e.what()));
  }
  std::string generator(to_string(c.generator_method));
  read_field(obj, "generator", "", generator, problems);
  try {
    c.generator_method = hankel_generator_from_string(generator);
  } catch (std::exception const &e) {
    problems.push_back(fmt::format("generator: {}", e.what()));
  }

  if (auto it = obj.find("solver"); it != obj.end()) {
    if (!it->is_object()) {
      problems.push_back("solver: expected an object");
    } else {
      reject_unknown(*it, {"max_iters", "rel_tol", "final_project"}, "solver.", problems);
      read_field(*it, "max_iters", "solver.", c.solver.max_iters, problems);
      read_field(*it, "rel_tol", "solver.", c.solver.rel_tol, problems);
      read_field(*it, "final_project", "solver.", c.solver.final_project, problems);
    }
  }
  if (problems.empty()) {
    try {
      c.validate();
    } catch (ConfigError const &e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  return c;
}

json parse_document(std::string_view text)
{
  try {
    return json::parse(text);
  } catch (json::parse_error const &e) {
    throw ConfigError({fmt::format("not valid JSON: {}", e.what())});
  }
}

} // namespace

void persist(SweepResult const &result, std::filesystem::path const &path)
{
  std::ostringstream csv;
  csv << kResultsHeader << '\n';
  for (auto const &pt : result.points) {
    csv << to_string(result.parameter) << ',' << format_real(pt.value) << ',' << optional_field(pt.srer_unstructured_db)
        << ',' << optional_field(pt.srer_structured_db) << ',' << optional_field(pt.bound_unstructured_db) << ','
        << optional_field(pt.bound_structured_db) << ',' << pt.trials_ok << ',' << pt.trials_failed << ','
        << pt.crb_invalid() << '\n';
  }
  json values = json::array();
  for (auto const &pt : result.points) { values.push_back(pt.value); }
  // Worst relative rise of the unstructured objective between half-steps, per point.
  json       rises = json::array();
  auto const per_point = static_cast<std::size_t>(std::max(result.config.trials, 0));
  if (per_point > 0 && result.trials.size() == per_point * result.points.size()) {
    for (std::size_t k = 0; k < result.points.size(); ++k) {
      double worst = 0.0;
      for (std::size_t t = k * per_point; t < (k + 1) * per_point; ++t) {
        worst = std::max(worst, result.trials[t].unstructured_max_rise);
      }
      rises.push_back(worst);
    }
  }
  json const sidecar{{"version", std::string(library_version())},
                     {"config", config_json(result.config)},
                     {"sweep", {{"parameter", std::string(to_string(result.parameter))}, {"values", values}}},
                     {"max_half_step_rise_unstructured", rises}};

  auto write = [](std::filesystem::path const &target, std::string const &content) {
    std::ofstream file(target, std::ios::binary);
    if (!file) { throw IoError(fmt::format("cannot open '{}' for writing", target.string())); }
    file << content;
    if (!file) { throw IoError(fmt::format("write to '{}' failed", target.string())); }
  };
  write(path, csv.str());
  write(sidecar_path(path), sidecar.dump(2) + "\n");
}

std::filesystem::path sidecar_path(std::filesystem::path const &csv_path)
{
  std::filesystem::path side = csv_path;
  side.replace_extension(".json");
  if (side == csv_path) { side += ".meta.json"; }
  return side;
}

PersistedSweep load_results_csv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("cannot open '{}' for reading", path.string())); }
  std::string line;
  if (!std::getline(in, line)) { throw std::domain_error(fmt::format("{}: empty file", path.string())); }
  if (!line.empty() && line.back() == '\r') { line.pop_back(); }
  if (line != kResultsHeader) {
    throw std::domain_error(fmt::format("{}: header does not match the results schema", path.string()));
  }
  PersistedSweep out;
  std::size_t    lineno = 1;
  bool           first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    std::vector<std::string> fields;
    std::stringstream        ss(line);
    std::string              field;
    while (std::getline(ss, field, ',')) { fields.push_back(field); }
    if (!line.empty() && line.back() == ',') { fields.emplace_back(); }
    if (fields.size() != 9) {
      throw std::domain_error(fmt::format("{}:{}: expected 9 fields, found {}", path.string(), lineno, fields.size()));
    }
    try {
      SweepParameter const param = sweep_parameter_from_string(fields[0]);
      if (first) {
        out.parameter = param;
        first = false;
      } else if (param != out.parameter) {
        throw std::domain_error("mixed sweep parameters");
      }
      auto opt = [](std::string const &s) -> std::optional<double> {
        if (s.empty()) { return std::nullopt; }
        return std::stod(s);
      };
      SweepPoint pt;
      pt.value = std::stod(fields[1]);
      pt.srer_unstructured_db = opt(fields[2]);
      pt.srer_structured_db = opt(fields[3]);
      pt.bound_unstructured_db = opt(fields[4]);
      pt.bound_structured_db = opt(fields[5]);
      pt.trials_ok = std::stoi(fields[6]);
      pt.trials_failed = std::stoi(fields[7]);
      // The file only carries the combined count.
      pt.crb_invalid_unstructured = std::stoi(fields[8]);
      out.points.push_back(pt);
    } catch (std::exception const &e) {
      throw std::domain_error(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

std::string config_to_json(ExperimentConfig const &config, int indent) { return config_json(config).dump(indent); }

ExperimentConfig config_from_json(std::string_view text)
{
  json const               doc = parse_document(text);
  std::vector<std::string> problems;
  ExperimentConfig         c = parse_config(doc, problems, {});
  if (!problems.empty()) { throw ConfigError(std::move(problems)); }
  return c;
}

SweepPlan sweep_plan_from_json(std::string_view text)
{
  json const               doc = parse_document(text);
  std::vector<std::string> problems;
  SweepPlan                plan;
  plan.config = parse_config(doc, problems, {"sweep"});
  if (doc.is_object()) {
    auto it = doc.find("sweep");
    if (it == doc.end() || !it->is_object()) {
      problems.push_back("sweep: required object with 'parameter' and 'values'");
    } else {
      reject_unknown(*it, {"parameter", "values"}, "sweep.", problems);
      std::string parameter;
      read_field(*it, "parameter", "sweep.", parameter, problems);
      try {
        plan.parameter = sweep_parameter_from_string(parameter);
      } catch (std::exception const &e) {
        problems.push_back(fmt::format("sweep.parameter: {}", e.what()));
      }
      auto values = it->find("values");
      if (values == it->end() || !values->is_array() || values->empty()) {
        problems.push_back("sweep.values: required nonempty array of numbers");
      } else {
        for (auto const &v : *values) {
          if (!v.is_number()) {
            problems.push_back("sweep.values: every entry must be a number");
            break;
          }
          plan.values.push_back(v.get<double>());
        }
      }
    }
  }
  if (problems.empty()) {
    for (double v : plan.values) {
      try {
        with_parameter(plan.config, plan.parameter, v).validate();
      } catch (ConfigError const &e) {
        for (auto const &p : e.problems()) { problems.push_back(fmt::format("sweep.values ({}): {}", v, p)); }
      }
    }
  }
  if (!problems.empty()) { throw ConfigError(std::move(problems)); }
  return plan;
}

SweepPlan load_sweep_plan(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("cannot open '{}' for reading", path.string())); }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return sweep_plan_from_json(buffer.str());
}

std::string_view library_version() { return kVersion; }

} // namespace lrmr
