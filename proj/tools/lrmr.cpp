// lrmr command-line front end: gen, reconstruct, crb, sweep, plot.

#include "lrmr/als.hpp"
#include "lrmr/bench.hpp"
#include "lrmr/crb.hpp"
#include "lrmr/matrix_io.hpp"
#include "lrmr/sensing.hpp"
#include "lrmr/structures.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lrmr::cli {
namespace {

constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;

json matrix_to_json(Matrix const &M)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) { row.push_back(M(i, j)); }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(json const &rows, std::string const &what)
{
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw std::domain_error(fmt::format("params: '{}' must be a nonempty array of rows", what));
  }
  auto const cols = static_cast<Eigen::Index>(rows.front().size());
  Matrix     M(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto const &row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::domain_error(fmt::format("params: '{}' row {} has the wrong length", what, i));
    }
    for (Eigen::Index j = 0; j < cols; ++j) { M(i, j) = row[static_cast<std::size_t>(j)].get<double>(); }
  }
  return M;
}

json vector_to_json(Vector const &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(json const &arr, std::string const &what)
{
  if (!arr.is_array() || arr.empty()) {
    throw std::domain_error(fmt::format("params: '{}' must be a nonempty array", what));
  }
  auto const values = arr.get<std::vector<double>>();
  return Eigen::Map<Vector const>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_text(fs::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw IoError(fmt::format("cannot open '{}' for writing", path.string())); }
  out << text;
  if (!out) { throw IoError(fmt::format("write to '{}' failed", path.string())); }
}

json read_json(fs::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("cannot open '{}' for reading", path.string())); }
  try {
    return json::parse(in);
  } catch (json::exception const &e) {
    throw std::domain_error(fmt::format("{}: not valid JSON: {}", path.string(), e.what()));
  }
}

void print_resolved(json const &config) { std::cout << "resolved config: " << config.dump() << '\n'; }

std::string number_or_dash(std::optional<double> const &v) { return v ? fmt::format("{:.3f}", *v) : "-"; }

// ---------------------------------------------------------------------------

struct GenArgs
{
  std::string   kind = "generic";
  Eigen::Index  n = 0;
  Eigen::Index  p = 0;
  Eigen::Index  r = 1;
  std::uint64_t seed = 1;
  std::string   generator = "prony";
  fs::path      out;
  fs::path      params_out;
  Eigen::Index  m = 0;
  double        sigma2 = 0.0;
  fs::path      op_out;
  fs::path      y_out;
};

int cmd_gen(GenArgs a)
{
  if (a.p == 0) { a.p = a.n; }
  if (a.n < 1 || a.p < 1) { throw std::domain_error(fmt::format("gen: invalid dimensions {}x{}", a.n, a.p)); }
  if (a.r < 1 || a.r > std::min(a.n, a.p)) {
    throw std::domain_error(fmt::format("gen: rank {} outside [1, {}]", a.r, std::min(a.n, a.p)));
  }
  if (a.kind == "psd" && a.n != a.p) { throw std::domain_error("gen: --kind psd requires n = p"); }
  bool const with_op = !a.op_out.empty() || !a.y_out.empty();
  if (with_op && (a.op_out.empty() || a.y_out.empty() || a.m < 1)) {
    throw std::domain_error("gen: --op-out, --y-out and --m must be given together");
  }
  if (a.sigma2 < 0.0) { throw std::domain_error("gen: --sigma2 must be nonnegative"); }

  json const resolved{{"command", "gen"},  {"kind", a.kind},           {"n", a.n},           {"p", a.p},
                      {"r", a.r},          {"seed", a.seed},           {"generator", a.generator},
                      {"m", a.m},          {"sigma2", a.sigma2},       {"out", a.out.string()},
                      {"params_out", a.params_out.string()}, {"op_out", a.op_out.string()}, {"y_out", a.y_out.string()}};
  print_resolved(resolved);

  Rng    rng(a.seed);
  Matrix X;
  json   params{{"kind", a.kind}, {"n", a.n}, {"p", a.p}, {"r", a.r}};
  if (a.kind == "hankel" || a.kind == "toeplitz") {
    HankelGenerator const method = hankel_generator_from_string(a.generator);
    auto sample = a.kind == "hankel" ? generate_hankel_lowrank(a.n, a.p, a.r, method, rng)
                                     : generate_toeplitz_lowrank(a.n, a.p, a.r, method, rng);
    X = std::move(sample.X);
    params["a"] = vector_to_json(sample.params.a);
    params["b"] = vector_to_json(sample.params.b);
    params["generator"] = a.generator;
    if (a.kind == "toeplitz") { params["hankel_rows_reversed"] = true; }
  } else if (a.kind == "psd") {
    auto sample = generate_psd_lowrank(a.n, a.r, rng);
    X = std::move(sample.X);
    params["M"] = matrix_to_json(sample.factor.M);
  } else {
    X = generate_generic_lowrank(a.n, a.p, a.r, rng);
  }
  write_matrix_csv(a.out, X);
  if (!a.params_out.empty()) { write_text(a.params_out, params.dump(2) + "\n"); }
  if (with_op) {
    SensingOperator const op = make_gaussian_operator(a.n, a.p, a.m, rng);
    Vector const          y = measure(op, X, NoiseModel::iid(a.sigma2), rng);
    write_matrix_csv(a.op_out, op.matrix());
    write_vector_csv(a.y_out, y);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ReconstructArgs
{
  fs::path     y;
  fs::path     op;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index r = 0;
  std::string  structure = "none";
  int          max_iters = SolverOptions{}.max_iters;
  double       tol = SolverOptions{}.rel_tol;
  bool         final_project = false;
  fs::path     out;
  fs::path     report;
};

int cmd_reconstruct(ReconstructArgs const &a)
{
  StructureKind const kind = structure_kind_from_string(a.structure);
  SolverOptions       opts;
  opts.max_iters = a.max_iters;
  opts.rel_tol = a.tol;
  opts.final_project = a.final_project;
  print_resolved(json{{"command", "reconstruct"},
                      {"y", a.y.string()},
                      {"op", a.op.string()},
                      {"n", a.n},
                      {"p", a.p},
                      {"r", a.r},
                      {"structure", a.structure},
                      {"max_iters", a.max_iters},
                      {"tol", a.tol},
                      {"final_project", a.final_project},
                      {"out", a.out.string()},
                      {"report", a.report.string()}});
  opts.validate();
  if (kind == StructureKind::LinearSubspace) {
    throw std::domain_error("reconstruct: --structure must be none|hankel|toeplitz|psd");
  }
  if (a.n < 1 || a.p < 1) { throw std::domain_error(fmt::format("reconstruct: invalid dimensions {}x{}", a.n, a.p)); }
  StructureSpec::of_kind(kind).check_compatible(a.n, a.p);
  if (a.r < 1 || a.r > std::min(a.n, a.p)) {
    throw std::domain_error(fmt::format("reconstruct: r = {} outside [1, min(n, p) = {}]", a.r, std::min(a.n, a.p)));
  }

  Matrix const A = read_matrix_csv(a.op);
  Vector const y = read_vector_csv(a.y);
  if (A.cols() != a.n * a.p) {
    throw std::domain_error(
      fmt::format("reconstruct: operator has {} columns but n*p = {}*{} = {}", A.cols(), a.n, a.p, a.n * a.p));
  }
  if (y.size() != A.rows()) {
    throw std::domain_error(fmt::format("reconstruct: y has length {} but the operator has m = {} rows", y.size(), A.rows()));
  }
  SensingOperator const op(A, a.n, a.p);
  SolverReport const    report = kind == StructureKind::Unstructured
                                   ? als_unstructured(op, y, a.r, opts)
                                   : als_structured(op, y, a.r, StructureSpec::of_kind(kind), opts);
  write_matrix_csv(a.out, report.projected_estimate ? *report.projected_estimate : report.estimate);
  if (!a.report.empty()) {
    json const doc{{"structure", a.structure},
                   {"iterations", report.iterations},
                   {"termination", std::string(to_string(report.termination))},
                   {"final_residual", report.final_residual()},
                   {"residual_history", report.residual_history},
                   {"half_step_history", report.half_step_history},
                   {"output", report.projected_estimate ? "projected" : "factor_product"}};
    write_text(a.report, doc.dump(2) + "\n");
  }
  std::cout << fmt::format("iterations = {}\ntermination = {}\nresidual = {}\n", report.iterations,
                           to_string(report.termination), format_real(report.final_residual()));
  return 0;
}

// ---------------------------------------------------------------------------

struct CrbArgs
{
  fs::path     op;
  double       sigma2 = 0.0;
  fs::path     truth;
  Eigen::Index r = 0;
  std::string  structure = "none";
  fs::path     params;
  bool         as_json = false;
};

int cmd_crb(CrbArgs const &a)
{
  json const resolved{{"command", "crb"},           {"op", a.op.string()},       {"sigma2", a.sigma2},
                      {"truth", a.truth.string()},  {"r", a.r},                  {"structure", a.structure},
                      {"params", a.params.string()}, {"json", a.as_json}};
  if (!a.as_json) { print_resolved(resolved); }
  if (!(a.sigma2 > 0.0)) { throw std::domain_error("crb: --sigma2 must be positive"); }
  StructureKind const kind = structure_kind_from_string(a.structure);
  if (kind != StructureKind::Unstructured && kind != StructureKind::Hankel && kind != StructureKind::Psd) {
    throw std::domain_error("crb: --structure must be none|hankel|psd");
  }

  Matrix const X = read_matrix_csv(a.truth);
  Matrix const A = read_matrix_csv(a.op);
  if (A.cols() != X.size()) {
    throw std::domain_error(fmt::format("crb: operator has {} columns but the truth is {}x{} ({} entries)", A.cols(),
                                        X.rows(), X.cols(), X.size()));
  }
  SensingOperator const op(A, X.rows(), X.cols());
  NoiseModel const      noise = NoiseModel::iid(a.sigma2);
  double const          scale = std::max(1.0, X.norm());

  CrbResult crb = CrbResult::invalid("not computed");
  if (kind == StructureKind::Unstructured) {
    if (a.r < 1) { throw std::domain_error("crb: --r is required for the unstructured bound"); }
    crb = crb_unstructured(op, noise, X, a.r);
  } else {
    if (a.params.empty()) {
      throw std::domain_error(fmt::format("crb: --params is required for --structure {}", a.structure));
    }
    json const params = read_json(a.params);
    try {
      if (kind == StructureKind::Hankel) {
        HankelParams const hp{vector_from_json(params.at("a"), "a"), vector_from_json(params.at("b"), "b")};
        if (hp.a.size() != hp.b.size()) { throw std::domain_error("params: 'a' and 'b' differ in length"); }
        if ((hankel_from_params(hp, X.rows(), X.cols()) - X).norm() > 1e-8 * scale) {
          throw std::domain_error("crb: the Hankel params do not reproduce the truth matrix");
        }
        crb = crb_hankel(op, noise, hp, X.rows(), X.cols());
      } else {
        PsdFactor const factor{matrix_from_json(params.at("M"), "M")};
        if (factor.M.rows() != X.rows() || X.rows() != X.cols() || (factor.product() - X).norm() > 1e-8 * scale) {
          throw std::domain_error("crb: the p.s.d. factor does not reproduce the truth matrix");
        }
        crb = crb_psd(op, noise, factor);
      }
    } catch (json::exception const &e) {
      throw std::domain_error(fmt::format("{}: {}", a.params.string(), e.what()));
    }
  }

  std::optional<double> srer_bound;
  if (crb.valid) { srer_bound = 10.0 * std::log10(X.squaredNorm() / crb.value); }
  if (a.as_json) {
    json doc{{"config", resolved},
             {"structure", a.structure},
             {"valid", crb.valid},
             {"value", crb.valid ? json(crb.value) : json(nullptr)},
             {"srer_bound_db", srer_bound ? json(*srer_bound) : json(nullptr)},
             {"diagnostic", crb.diagnostic}};
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << fmt::format("crb = {}\nvalid = {}\n", crb.valid ? format_real(crb.value) : "nan", crb.valid);
    if (srer_bound) { std::cout << fmt::format("srer_bound_db = {}\n", format_real(*srer_bound)); }
    if (!crb.diagnostic.empty()) { std::cout << "diagnostic = " << crb.diagnostic << '\n'; }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs
{
  fs::path                config;
  fs::path                out;
  std::optional<unsigned> threads;
};

unsigned resolve_threads(std::optional<unsigned> flag)
{
  if (flag) { return *flag; }
  if (char const *env = std::getenv("LRMR_THREADS"); env != nullptr && *env != '\0') {
    char         *end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') {
      throw std::domain_error(fmt::format("LRMR_THREADS: '{}' is not a nonnegative integer", env));
    }
    return static_cast<unsigned>(v);
  }
  return 0;
}

int cmd_sweep(SweepArgs const &a)
{
  SweepPlan const plan = load_sweep_plan(a.config);
  unsigned const  threads = resolve_threads(a.threads);
  json            resolved = json::parse(config_to_json(plan.config));
  resolved["sweep"] = {{"parameter", std::string(to_string(plan.parameter))}, {"values", plan.values}};
  resolved["threads"] = threads;
  resolved["rank"] = plan.config.rank();
  resolved["measurements"] = plan.config.measurements();
  print_resolved(resolved);

  SweepResult const result = sweep(plan.config, plan.parameter, plan.values, threads);
  persist(result, a.out);

  std::cout << fmt::format("{:>10} {:>12} {:>12} {:>12} {:>12} {:>6} {:>6} {:>8}\n", to_string(plan.parameter),
                           "srer_unstr", "srer_str", "bound_unstr", "bound_str", "ok", "fail", "invalid");
  for (auto const &pt : result.points) {
    std::cout << fmt::format("{:>10g} {:>12} {:>12} {:>12} {:>12} {:>6} {:>6} {:>8}\n", pt.value,
                             number_or_dash(pt.srer_unstructured_db), number_or_dash(pt.srer_structured_db),
                             number_or_dash(pt.bound_unstructured_db), number_or_dash(pt.bound_structured_db),
                             pt.trials_ok, pt.trials_failed, pt.crb_invalid());
  }
  std::cout << fmt::format("wrote {} and {}\n", a.out.string(), sidecar_path(a.out).string());
  return 0;
}

// ---------------------------------------------------------------------------

struct PlotArgs
{
  fs::path in;
  fs::path out;
};

std::string python_list(std::vector<double> const &v)
{
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) { s += (k ? ", " : "") + format_real(v[k]); }
  return s + "]";
}

int cmd_plot(PlotArgs const &a)
{
  print_resolved(json{{"command", "plot"}, {"in", a.in.string()}, {"out", a.out.string()}});
  PersistedSweep const data = load_results_csv(a.in);
  if (data.points.empty()) { throw std::domain_error(fmt::format("{}: no data rows", a.in.string())); }

  struct Series
  {
    char const                         *column;
    char const                         *label;
    char const                         *style;
    std::optional<double> SweepPoint::*field;
  };
  Series const all[] = {
    {"srer_unstr_db", "ALS (unstructured)", "o-", &SweepPoint::srer_unstructured_db},
    {"srer_str_db", "ALS (structured)", "s-", &SweepPoint::srer_structured_db},
    {"bound_unstr_db", "CRB (unstructured)", "k--", &SweepPoint::bound_unstructured_db},
    {"bound_str_db", "CRB (structured)", "k:", &SweepPoint::bound_structured_db},
  };

  std::vector<double> x;
  for (auto const &pt : data.points) { x.push_back(pt.value); }
  std::ostringstream script;
  script << "#!/usr/bin/env python3\n"
         << "# Generated by lrmr plot from " << a.in.filename().string() << ".\n"
         << "import math\n"
         << "import sys\n\n"
         << "import matplotlib\n"
         << "matplotlib.use(\"Agg\")\n"
         << "import matplotlib.pyplot as plt\n\n"
         << "SWEEP_PARAM = \"" << to_string(data.parameter) << "\"\n"
         << "X = " << python_list(x) << "\n"
         << "SERIES = [\n";
  int curves = 0;
  for (auto const &s : all) {
    bool const present = std::any_of(data.points.begin(), data.points.end(),
                                     [&](SweepPoint const &pt) { return (pt.*(s.field)).has_value(); });
    if (!present) { continue; }
    std::vector<double> y;
    for (auto const &pt : data.points) { y.push_back((pt.*(s.field)).value_or(std::nan(""))); }
    script << "    (\"" << s.column << "\", \"" << s.label << "\", \"" << s.style << "\", "
           << python_list(y) << "),\n";
    ++curves;
  }
  script << "]\n\n"
         << "XLABEL = {\"smnr\": \"SMNR (dB)\", \"rho\": \"measurement fraction\", \"lambda\": \"relative rank\"}\n\n"
         << "fig, ax = plt.subplots(figsize=(6, 4.5))\n"
         << "for column, label, style, values in SERIES:\n"
         << "    ax.plot(X, values, style, label=label)\n"
         << "ax.set_xlabel(XLABEL.get(SWEEP_PARAM, SWEEP_PARAM))\n"
         << "ax.set_ylabel(\"SRER (dB)\")\n"
         << "ax.grid(True, alpha=0.3)\n"
         << "ax.legend()\n"
         << "fig.tight_layout()\n"
         << "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else \"" << a.in.stem().string() << ".png\", dpi=150)\n";
  write_text(a.out, script.str());
  std::cout << fmt::format("wrote {} ({} curves)\n", a.out.string(), curves);
  return 0;
}

} // namespace
} // namespace lrmr::cli

int main(int argc, char **argv)
{
  using namespace lrmr::cli;
  CLI::App app{"Low-rank matrix reconstruction: generation, ALS, Cramer-Rao bounds and Monte Carlo sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lrmr::library_version()));

  GenArgs gen;
  auto   *gen_cmd = app.add_subcommand("gen", "Generate a random low-rank ground-truth matrix");
  gen_cmd->add_option("--kind", gen.kind, "Matrix family")
    ->check(CLI::IsMember({"hankel", "toeplitz", "psd", "generic"}))
    ->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Rows")->required();
  gen_cmd->add_option("--p", gen.p, "Columns (default n)");
  gen_cmd->add_option("--r", gen.r, "Rank")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--generator", gen.generator, "Hankel/Toeplitz generator")
    ->check(CLI::IsMember({"prony", "unit_circle"}))
    ->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Matrix CSV")->required();
  gen_cmd->add_option("--params-out", gen.params_out, "Parameter sidecar JSON");
  gen_cmd->add_option("--m", gen.m, "Measurements for --op-out/--y-out");
  gen_cmd->add_option("--sigma2", gen.sigma2, "Noise variance for --y-out")->capture_default_str();
  gen_cmd->add_option("--op-out", gen.op_out, "Also write a Gaussian sensing operator (m x np CSV)");
  gen_cmd->add_option("--y-out", gen.y_out, "Also write measurements y = A vec(X) + noise");

  ReconstructArgs rec;
  auto           *rec_cmd = app.add_subcommand("reconstruct", "Recover X from y = A vec(X) + n by ALS");
  rec_cmd->add_option("--y", rec.y, "Measurement vector CSV")->required();
  rec_cmd->add_option("--op", rec.op, "Sensing operator CSV (m x np)")->required();
  rec_cmd->add_option("--n", rec.n, "Rows of X")->required();
  rec_cmd->add_option("--p", rec.p, "Columns of X")->required();
  rec_cmd->add_option("--r", rec.r, "Rank")->required();
  rec_cmd->add_option("--structure", rec.structure, "none|hankel|toeplitz|psd")->capture_default_str();
  rec_cmd->add_option("--max-iters", rec.max_iters, "Iteration cap")->capture_default_str();
  rec_cmd->add_option("--tol", rec.tol, "Relative decrease tolerance")->capture_default_str();
  rec_cmd->add_flag("--final-project", rec.final_project, "Write P(LR) instead of LR");
  rec_cmd->add_option("--out", rec.out, "Estimate CSV")->required();
  rec_cmd->add_option("--report", rec.report, "Solver report JSON");

  CrbArgs crb;
  auto   *crb_cmd = app.add_subcommand("crb", "Evaluate a Cramer-Rao bound");
  crb_cmd->add_option("--op", crb.op, "Sensing operator CSV (m x np)")->required();
  crb_cmd->add_option("--sigma2", crb.sigma2, "Noise variance")->required();
  crb_cmd->add_option("--truth", crb.truth, "True matrix CSV")->required();
  crb_cmd->add_option("--r", crb.r, "Rank (unstructured bound)");
  crb_cmd->add_option("--structure", crb.structure, "none|hankel|psd")->capture_default_str();
  crb_cmd->add_option("--params", crb.params, "Parameter JSON from gen --params-out");
  crb_cmd->add_flag("--json", crb.as_json, "Machine-readable output");

  SweepArgs sw;
  auto     *sweep_cmd = app.add_subcommand("sweep", "Run a Monte Carlo sweep from a JSON config");
  sweep_cmd->add_option("--config", sw.config, "Sweep config JSON")->required();
  sweep_cmd->add_option("--out", sw.out, "Results CSV")->required();
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (0 = all cores; default $LRMR_THREADS)");

  PlotArgs plot;
  auto    *plot_cmd = app.add_subcommand("plot", "Emit a matplotlib script for a results CSV");
  plot_cmd->add_option("--in", plot.in, "Results CSV")->required();
  plot_cmd->add_option("--out", plot.out, "Script path")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    return app.exit(e) == 0 ? 0 : kExitDomain;
  }

  try {
    if (*gen_cmd) { return cmd_gen(gen); }
    if (*rec_cmd) { return cmd_reconstruct(rec); }
    if (*crb_cmd) { return cmd_crb(crb); }
    if (*sweep_cmd) { return cmd_sweep(sw); }
    if (*plot_cmd) { return cmd_plot(plot); }
  } catch (lrmr::IoError const &e) {
    std::cerr << "lrmr: " << e.what() << '\n';
    return kExitIo;
  } catch (lrmr::ConfigError const &e) {
    std::cerr << "lrmr: invalid configuration\n";
    for (auto const &problem : e.problems()) { std::cerr << "  " << problem << '\n'; }
    return kExitDomain;
  } catch (std::exception const &e) {
    std::cerr << "lrmr: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitDomain;
}
