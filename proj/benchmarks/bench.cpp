#include <benchmark/benchmark.h>

#include "pertboot/boot.hpp"
#include "pertboot/rng.hpp"

using namespace pertboot;

namespace {

RegressionData make_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  RegressionData d;
  d.X.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) d.X(i, j) = rng.normal();
    d.y(i) = rng.normal();
  }
  return d;
}

void bm_m_estimate_ls(benchmark::State& state) {
  const RegressionData d = make_data(state.range(0), 3, 1);
  const ScoreFunction ls = make_least_squares();
  for (auto _ : state) benchmark::DoNotOptimize(m_estimate(d, ls));
}
BENCHMARK(bm_m_estimate_ls)->Arg(100)->Arg(400)->Arg(1600);

void bm_m_estimate_huber(benchmark::State& state) {
  const RegressionData d = make_data(state.range(0), 3, 2);
  const ScoreFunction s = make_smooth_huber(1.345);
  for (auto _ : state) benchmark::DoNotOptimize(m_estimate(d, s));
}
BENCHMARK(bm_m_estimate_huber)->Arg(100)->Arg(400)->Arg(1600);

void bm_perturb_replicate(benchmark::State& state) {
  const RegressionData d = make_data(state.range(0), 3, 3);
  const ScoreFunction ls = make_least_squares();
  const MFit fit = m_estimate(d, ls);
  const WeightScheme scheme = make_scaled_beta_half(4.0);
  Eigen::VectorXd w(d.n());
  std::uint64_t r = 0;
  for (auto _ : state) {
    const std::uint64_t key = derive_seed(9, r++);
    for (Eigen::Index i = 0; i < d.n(); ++i)
      w(i) = scheme.sampler(key, static_cast<std::uint64_t>(i));
    benchmark::DoNotOptimize(perturb_replicate(d, ls, fit, w));
  }
}
BENCHMARK(bm_perturb_replicate)->Arg(100)->Arg(400);

void bm_bootstrap_run(benchmark::State& state) {
  const RegressionData d = make_data(200, 2, 4);
  const ScoreFunction ls = make_least_squares();
  const MFit fit = m_estimate(d, ls);
  const WeightScheme scheme = make_scaled_beta_half(4.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(run_perturbation_bootstrap_all(
        d, ls, fit, scheme, static_cast<std::uint64_t>(state.range(0)), 5));
}
BENCHMARK(bm_bootstrap_run)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
