#include <benchmark/benchmark.h>

#include <random>

#include "invlqr/approx_solver.hpp"
#include "invlqr/exact_solver.hpp"
#include "invlqr/reference_problems.hpp"

using namespace invlqr;

namespace {

FeedbackTrajectory case_study_gain(int N) {
  const auto p = case_study();
  const auto sys = p.system();
  return feedback_from_P(sys, solve_dre(sys, QuadraticCost::make(p.Q, p.F, p.T), TimeGrid(p.T, N)));
}

StateSpaceSystem random_system(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (;;) {
    Matrix A(n, n), B(n, m);
    for (int i = 0; i < n * n; ++i) A.data()[i] = 0.8 * nd(rng);
    for (int i = 0; i < n * m; ++i) B.data()[i] = nd(rng);
    if (rank_tol(controllability_matrix(A, B), 1e-6) == n) return StateSpaceSystem::make(A, B);
  }
}

}  // namespace

static void BM_Riccati(benchmark::State& st) {
  const auto p = case_study();
  const auto sys = p.system();
  const auto cost = QuadraticCost::make(p.Q, p.F, p.T);
  const TimeGrid grid(p.T, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_dre(sys, cost, grid));
}
BENCHMARK(BM_Riccati)->Arg(250)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_GDerivatives(benchmark::State& st) {
  const auto sys = case_study().system();
  const auto obs = compute_P0(sys, case_study_gain(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(g_derivatives(sys, obs, 1));
}
BENCHMARK(BM_GDerivatives)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_ExactRecovery(benchmark::State& st) {
  const auto sys = case_study().system();
  const auto K = case_study_gain(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(recover_exact(sys, K));
}
BENCHMARK(BM_ExactRecovery)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_MinCondition(benchmark::State& st) {
  const auto sys = case_study().system();
  auto rec = recover_exact(sys, case_study_gain(1000));
  for (auto _ : st) benchmark::DoNotOptimize(min_condition_number(*rec.space));
}
BENCHMARK(BM_MinCondition)->Unit(benchmark::kMillisecond);

static void BM_Approx(benchmark::State& st) {
  const auto sys = case_study().system();
  const auto K = add_noise(case_study_gain(1000), 20.0, 1);
  const auto method = st.range(0) == 0 ? ApproxMethod::kkt_qp : ApproxMethod::direct;
  for (auto _ : st) benchmark::DoNotOptimize(recover_approx(sys, K, method));
  st.SetLabel(st.range(0) == 0 ? "kkt-qp" : "direct");
}
BENCHMARK(BM_Approx)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ExistenceMatrices(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto sys = random_system(n, 1, 7);
  for (auto _ : st) {
    const auto M = existence_matrices(sys.A, sys.B);
    benchmark::DoNotOptimize(select_rows(M.H, n, 1));
  }
}
BENCHMARK(BM_ExistenceMatrices)->DenseRange(2, 6, 2)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
