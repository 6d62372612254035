#include "lrmr/bench.hpp"
#include "lrmr/matrix_io.hpp"
#include "lrmr/structures.hpp"

#include "test_support.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lrmr {
namespace {

namespace fs = std::filesystem;

std::string slurp(fs::path const &path)
{
  std::ifstream      in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

class CliTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    auto const *info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("lrmr_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(std::string const &name) const { return dir_ / name; }

  /// Runs the CLI with `args`; stdout lands in out_, stderr in err_.
  int run(std::string const &args, std::string const &env = {})
  {
    fs::path const    out = file("stdout.txt"), err = file("stderr.txt");
    std::string const cmd = fmt_command(env, args, out, err);
    int const         status = std::system(cmd.c_str());
    out_ = slurp(out);
    err_ = slurp(err);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out_;
  std::string err_;

private:
  static std::string fmt_command(std::string const &env, std::string const &args, fs::path const &out,
                                 fs::path const &err)
  {
    return env + (env.empty() ? "" : " ") + "'" LRMR_CLI_PATH "' " + args + " >'" + out.string() + "' 2>'" +
           err.string() + "'";
  }
  fs::path dir_;
};

TEST_F(CliTest, GenIsDeterministic)
{
  ASSERT_EQ(run("gen --kind psd --n 8 --r 2 --seed 7 --out " + file("a.csv").string() + " --params-out " +
                file("a.json").string()),
            0)
    << err_;
  ASSERT_EQ(run("gen --kind psd --n 8 --r 2 --seed 7 --out " + file("b.csv").string() + " --params-out " +
                file("b.json").string()),
            0);
  EXPECT_EQ(slurp(file("a.csv")), slurp(file("b.csv")));
  EXPECT_EQ(slurp(file("a.json")), slurp(file("b.json")));
  EXPECT_NE(out_.find("resolved config"), std::string::npos);
}

TEST_F(CliTest, GenHankelIsHankel)
{
  ASSERT_EQ(run("gen --kind hankel --n 9 --p 7 --r 2 --seed 3 --out " + file("h.csv").string()), 0) << err_;
  Matrix const X = read_matrix_csv(file("h.csv"));
  EXPECT_EQ(X.rows(), 9);
  EXPECT_EQ(X.cols(), 7);
  EXPECT_LT((average_antidiagonals(X) - X).norm(), 1e-10 * std::max(1.0, X.norm()));
}

TEST_F(CliTest, GenGenericHasRequestedRank)
{
  ASSERT_EQ(run("gen --kind generic --n 10 --p 6 --r 2 --seed 5 --out " + file("g.csv").string()), 0) << err_;
  Eigen::JacobiSVD<Matrix> svd(read_matrix_csv(file("g.csv")));
  auto const               s = svd.singularValues();
  EXPECT_GT(s(1), 1e-8 * s(0));
  EXPECT_LT(s(2), 1e-10 * s(0));
}

TEST_F(CliTest, GenRejectsBadDimensions)
{
  EXPECT_EQ(run("gen --kind psd --n 4 --p 5 --r 2 --out " + file("x.csv").string()), 1);
  EXPECT_FALSE(err_.empty());
  EXPECT_EQ(run("gen --kind generic --n 4 --r 9 --out " + file("x.csv").string()), 1);
  EXPECT_EQ(run("gen --kind generic --n 4 --r 1 --bogus --out " + file("x.csv").string()), 1);
}

TEST_F(CliTest, ReconstructIdentityOperatorIsTruncatedSvd)
{
  Rng          rng(801);
  Matrix const X = generate_generic_lowrank(6, 5, 2, rng);
  write_matrix_csv(file("A.csv"), Matrix::Identity(30, 30));
  write_vector_csv(file("y.csv"), vec(X));
  ASSERT_EQ(run("reconstruct --y " + file("y.csv").string() + " --op " + file("A.csv").string() +
                " --n 6 --p 5 --r 2 --out " + file("xhat.csv").string() + " --report " + file("rep.json").string()),
            0)
    << err_;
  Matrix const Xhat = read_matrix_csv(file("xhat.csv"));
  EXPECT_LT((Xhat - svd_trunc(X, 2).reconstruct()).norm(), 1e-8 * X.norm());
}

TEST_F(CliTest, ReconstructReportIsMonotone)
{
  ASSERT_EQ(run("gen --kind generic --n 10 --p 10 --r 2 --seed 9 --m 60 --sigma2 0.05 --out " +
                file("X.csv").string() + " --op-out " + file("A.csv").string() + " --y-out " + file("y.csv").string()),
            0)
    << err_;
  ASSERT_EQ(run("reconstruct --y " + file("y.csv").string() + " --op " + file("A.csv").string() +
                " --n 10 --p 10 --r 2 --out " + file("xhat.csv").string() + " --report " + file("rep.json").string()),
            0)
    << err_;
  auto const report = nlohmann::json::parse(slurp(file("rep.json")));
  auto const history = report.at("residual_history").get<std::vector<double>>();
  auto const half = report.at("half_step_history").get<std::vector<double>>();
  ASSERT_FALSE(history.empty());
  for (std::size_t k = 1; k < half.size(); ++k) { EXPECT_LE(half[k], half[k - 1] * (1.0 + 1e-12)); }
  EXPECT_EQ(report.at("iterations").get<int>(), static_cast<int>(history.size()));
  EXPECT_TRUE(report.contains("termination"));
}

TEST_F(CliTest, ReconstructValidatesDimensions)
{
  write_matrix_csv(file("A.csv"), Matrix::Identity(20, 20));
  write_vector_csv(file("y.csv"), Vector::Ones(20));
  EXPECT_EQ(run("reconstruct --y " + file("y.csv").string() + " --op " + file("A.csv").string() +
                " --n 4 --p 5 --r 1 --structure psd --out " + file("o.csv").string()),
            1);
  EXPECT_NE(err_.find("square"), std::string::npos) << err_;
  EXPECT_EQ(run("reconstruct --y " + file("y.csv").string() + " --op " + file("A.csv").string() +
                " --n 4 --p 4 --r 1 --out " + file("o.csv").string()),
            1);
  EXPECT_NE(err_.find("columns"), std::string::npos) << err_;
  write_vector_csv(file("short.csv"), Vector::Ones(7));
  EXPECT_EQ(run("reconstruct --y " + file("short.csv").string() + " --op " + file("A.csv").string() +
                " --n 4 --p 5 --r 1 --out " + file("o.csv").string()),
            1);
  EXPECT_NE(err_.find("length"), std::string::npos) << err_;
  EXPECT_EQ(run("reconstruct --y " + file("missing.csv").string() + " --op " + file("A.csv").string() +
                " --n 4 --p 5 --r 1 --out " + file("o.csv").string()),
            2);
}

TEST_F(CliTest, CrbClosedFormAndJson)
{
  Rng          rng(809);
  Matrix const X = generate_generic_lowrank(5, 4, 1, rng);
  write_matrix_csv(file("X.csv"), X);
  write_matrix_csv(file("A.csv"), Matrix::Identity(20, 20));
  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 0.5 --truth " + file("X.csv").string() +
                " --r 1 --json"),
            0)
    << err_;
  auto const doc = nlohmann::json::parse(out_);
  EXPECT_TRUE(doc.at("valid").get<bool>());
  double const value = doc.at("value").get<double>();
  EXPECT_NEAR(value, 0.5 * (1 * 9 - 1), 1e-8);

  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 0.5 --truth " + file("X.csv").string() + " --r 1"),
            0);
  EXPECT_NE(out_.find("crb = " + format_real(value)), std::string::npos) << out_;
  EXPECT_NE(out_.find("valid = true"), std::string::npos);
}

TEST_F(CliTest, CrbBelowTangentDimensionIsInvalidButSucceeds)
{
  Rng          rng(811);
  Matrix const X = generate_generic_lowrank(6, 6, 2, rng);
  write_matrix_csv(file("X.csv"), X);
  write_matrix_csv(file("A.csv"), testing::random_matrix(10, 36, rng)); // needs 20
  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 1 --truth " + file("X.csv").string() + " --r 2"), 0);
  EXPECT_NE(out_.find("valid = false"), std::string::npos) << out_;
  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 1 --truth " + file("X.csv").string() +
                " --r 2 --json"),
            0);
  auto const doc = nlohmann::json::parse(out_);
  EXPECT_FALSE(doc.at("valid").get<bool>());
  EXPECT_TRUE(doc.at("value").is_null());
}

TEST_F(CliTest, CrbStructuredNeedsParams)
{
  ASSERT_EQ(run("gen --kind hankel --n 6 --r 2 --seed 4 --m 30 --out " + file("X.csv").string() + " --params-out " +
                file("p.json").string() + " --op-out " + file("A.csv").string() + " --y-out " + file("y.csv").string()),
            0)
    << err_;
  EXPECT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 0.1 --truth " + file("X.csv").string() +
                " --structure hankel"),
            1);
  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 0.1 --truth " + file("X.csv").string() +
                " --structure hankel --params " + file("p.json").string() + " --json"),
            0)
    << err_;
  auto const structured = nlohmann::json::parse(out_);
  ASSERT_EQ(run("crb --op " + file("A.csv").string() + " --sigma2 0.1 --truth " + file("X.csv").string() +
                " --r 2 --json"),
            0);
  auto const plain = nlohmann::json::parse(out_);
  ASSERT_TRUE(structured.at("valid").get<bool>() && plain.at("valid").get<bool>());
  EXPECT_LE(structured.at("value").get<double>(), plain.at("value").get<double>());
}

void write_small_sweep(fs::path const &path)
{
  std::ofstream(path) << R"({"n": 10, "p": 10, "lambda": 0.2, "rho": 0.5, "structure": "hankel", "trials": 4,
  "base_seed": 11, "sweep": {"parameter": "smnr", "values": [0, 10, 20]}})";
}

TEST_F(CliTest, SweepThreadsDoNotChangeOutput)
{
  write_small_sweep(file("cfg.json"));
  ASSERT_EQ(run("sweep --config " + file("cfg.json").string() + " --out " + file("one.csv").string() + " --threads 1"),
            0)
    << err_;
  ASSERT_EQ(run("sweep --config " + file("cfg.json").string() + " --out " + file("many.csv").string() + " --threads 4"),
            0)
    << err_;
  EXPECT_EQ(slurp(file("one.csv")), slurp(file("many.csv")));
  ASSERT_EQ(run("sweep --config " + file("cfg.json").string() + " --out " + file("env.csv").string(),
                "LRMR_THREADS=3"),
            0)
    << err_;
  EXPECT_NE(out_.find("\"threads\":3"), std::string::npos) << out_;
  EXPECT_EQ(slurp(file("one.csv")), slurp(file("env.csv")));
  EXPECT_TRUE(fs::exists(file("one.json")));

  auto const loaded = load_results_csv(file("one.csv"));
  ASSERT_EQ(loaded.points.size(), 3u);
  for (std::size_t k = 1; k < loaded.points.size(); ++k) {
    EXPECT_GE(*loaded.points[k].srer_unstructured_db, *loaded.points[k - 1].srer_unstructured_db);
  }
}

TEST_F(CliTest, SweepSchemaViolationListsFields)
{
  std::ofstream(file("bad.json")) << R"({"n": -3, "rho": "high", "speed": 1, "sweep": {"parameter": "smnr"}})";
  EXPECT_EQ(run("sweep --config " + file("bad.json").string() + " --out " + file("r.csv").string()), 1);
  EXPECT_NE(err_.find("rho"), std::string::npos) << err_;
  EXPECT_NE(err_.find("speed"), std::string::npos) << err_;
  EXPECT_NE(err_.find("sweep.values"), std::string::npos) << err_;
  EXPECT_EQ(run("sweep --config " + file("absent.json").string() + " --out " + file("r.csv").string()), 2);
}

TEST_F(CliTest, PlotReferencesPresentColumns)
{
  std::ofstream(file("plain.json")) << R"({"n": 8, "p": 8, "lambda": 0.25, "rho": 0.6, "structure": "none",
  "trials": 2, "sweep": {"parameter": "smnr", "values": [5, 15]}})";
  ASSERT_EQ(run("sweep --config " + file("plain.json").string() + " --out " + file("plain.csv").string()), 0) << err_;
  ASSERT_EQ(run("plot --in " + file("plain.csv").string() + " --out " + file("plain.py").string()), 0) << err_;
  std::string const plain = slurp(file("plain.py"));
  EXPECT_NE(plain.find("srer_unstr_db"), std::string::npos);
  EXPECT_NE(plain.find("bound_unstr_db"), std::string::npos);
  EXPECT_EQ(plain.find("srer_str_db"), std::string::npos);
  EXPECT_EQ(plain.find("bound_str_db"), std::string::npos);

  write_small_sweep(file("cfg.json"));
  ASSERT_EQ(run("sweep --config " + file("cfg.json").string() + " --out " + file("full.csv").string()), 0);
  ASSERT_EQ(run("plot --in " + file("full.csv").string() + " --out " + file("full.py").string()), 0);
  std::string const full = slurp(file("full.py"));
  for (char const *column : {"srer_unstr_db", "srer_str_db", "bound_unstr_db", "bound_str_db"}) {
    EXPECT_NE(full.find(column), std::string::npos) << column;
  }
  EXPECT_NE(out_.find("4 curves"), std::string::npos) << out_;

  std::ofstream(file("wrong.csv")) << "x,y\n1,2\n";
  EXPECT_EQ(run("plot --in " + file("wrong.csv").string() + " --out " + file("w.py").string()), 1);
}

TEST_F(CliTest, PlotScriptRuns)
{
  if (std::system("python3 -c 'import matplotlib' >/dev/null 2>&1") != 0) { GTEST_SKIP() << "matplotlib unavailable"; }
  write_small_sweep(file("cfg.json"));
  ASSERT_EQ(run("sweep --config " + file("cfg.json").string() + " --out " + file("r.csv").string()), 0);
  ASSERT_EQ(run("plot --in " + file("r.csv").string() + " --out " + file("r.py").string()), 0);
  std::string const cmd = "python3 '" + file("r.py").string() + "' '" + file("r.png").string() + "' >/dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(file("r.png")));
}

} // namespace
} // namespace lrmr
