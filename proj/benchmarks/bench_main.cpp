#include "lrmr/als.hpp"
#include "lrmr/crb.hpp"
#include "lrmr/sensing.hpp"
#include "lrmr/structures.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace lrmr;

// Sensing problem at the desk operating point: n = p, r = n/20, m = 0.3 n^2.
struct Problem
{
  Matrix          X;
  SensingOperator op;
  Vector          y;
};

Problem make_problem(Eigen::Index n, Eigen::Index r)
{
  Rng          rng(17);
  Matrix const X = generate_generic_lowrank(n, n, r, rng);
  auto         op = make_gaussian_operator(n, n, (3 * n * n + 9) / 10, rng);
  Vector       y = op.apply(X);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Eigen::Index k = 0; k < y.size(); ++k) { y(k) += noise(rng); }
  return Problem{X, std::move(op), std::move(y)};
}

void BM_PinvSolveTall(benchmark::State &state)
{
  Rng                              rng(3);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto const                       rows = state.range(0);
  Matrix A(rows, 80), B(rows, 1);
  for (Eigen::Index k = 0; k < A.size(); ++k) { A.data()[k] = unit(rng); }
  for (Eigen::Index k = 0; k < B.size(); ++k) { B.data()[k] = unit(rng); }
  for (auto _ : state) { benchmark::DoNotOptimize(pinv_solve(A, B)); }
}
BENCHMARK(BM_PinvSolveTall)->Arg(240)->Arg(480)->Unit(benchmark::kMicrosecond);

void BM_SvdTrunc(benchmark::State &state)
{
  Rng          rng(5);
  Matrix const Z = generate_generic_lowrank(state.range(0), state.range(0), 4, rng) +
                   0.01 * Matrix::Random(state.range(0), state.range(0));
  for (auto _ : state) { benchmark::DoNotOptimize(svd_trunc(Z, 2)); }
}
BENCHMARK(BM_SvdTrunc)->Arg(40)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_AlsStepR(benchmark::State &state)
{
  auto const   pr = make_problem(state.range(0), 2);
  Matrix const L = init_factors(pr.op, pr.y, 2).L;
  for (auto _ : state) { benchmark::DoNotOptimize(solve_r_step(pr.op, pr.y, L)); }
}
BENCHMARK(BM_AlsStepR)->Arg(20)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_AlsStepL(benchmark::State &state)
{
  auto const   pr = make_problem(state.range(0), 2);
  Matrix const R = init_factors(pr.op, pr.y, 2).R;
  for (auto _ : state) { benchmark::DoNotOptimize(solve_l_step(pr.op, pr.y, R)); }
}
BENCHMARK(BM_AlsStepL)->Arg(20)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_AlsUnstructured(benchmark::State &state)
{
  auto const pr = make_problem(state.range(0), 2);
  for (auto _ : state) { benchmark::DoNotOptimize(als_unstructured(pr.op, pr.y, 2)); }
}
BENCHMARK(BM_AlsUnstructured)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_AlsStructured(benchmark::State &state)
{
  auto const  pr = make_problem(state.range(0), 2);
  auto const  spec = state.range(1) == 0 ? StructureSpec::hankel() : StructureSpec::psd();
  for (auto _ : state) { benchmark::DoNotOptimize(als_structured(pr.op, pr.y, 2, spec)); }
}
BENCHMARK(BM_AlsStructured)->Args({40, 0})->Args({40, 1})->Unit(benchmark::kMillisecond);

void BM_CrbUnstructured(benchmark::State &state)
{
  auto const       pr = make_problem(state.range(0), 2);
  NoiseModel const noise = NoiseModel::iid(0.01);
  for (auto _ : state) { benchmark::DoNotOptimize(crb_unstructured(pr.op, noise, pr.X, 2)); }
}
BENCHMARK(BM_CrbUnstructured)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_CrbHankel(benchmark::State &state)
{
  Rng                   rng(11);
  auto const            n = state.range(0);
  auto const            sample = generate_hankel_lowrank(n, n, 2, HankelGenerator::PronyOnNoise, rng);
  SensingOperator const op = make_gaussian_operator(n, n, (3 * n * n + 9) / 10, rng);
  NoiseModel const      noise = NoiseModel::iid(0.01);
  for (auto _ : state) { benchmark::DoNotOptimize(crb_hankel(op, noise, sample.params, n, n)); }
}
BENCHMARK(BM_CrbHankel)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_CrbPsd(benchmark::State &state)
{
  Rng                   rng(13);
  auto const            n = state.range(0);
  auto const            sample = generate_psd_lowrank(n, 2, rng);
  SensingOperator const op = make_gaussian_operator(n, n, (3 * n * n + 9) / 10, rng);
  NoiseModel const      noise = NoiseModel::iid(0.01);
  for (auto _ : state) { benchmark::DoNotOptimize(crb_psd(op, noise, sample.factor)); }
}
BENCHMARK(BM_CrbPsd)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_ProjectPsd(benchmark::State &state)
{
  Matrix const Z = Matrix::Random(state.range(0), state.range(0));
  for (auto _ : state) { benchmark::DoNotOptimize(project_psd(Z, 2)); }
}
BENCHMARK(BM_ProjectPsd)->Arg(40)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_AverageAntidiagonals(benchmark::State &state)
{
  Matrix const Z = Matrix::Random(state.range(0), state.range(0));
  for (auto _ : state) { benchmark::DoNotOptimize(average_antidiagonals(Z)); }
}
BENCHMARK(BM_AverageAntidiagonals)->Arg(40)->Arg(100)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
