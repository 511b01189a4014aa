#include <benchmark/benchmark.h>

#include "countewa/lasso.hpp"
#include "countewa/model.hpp"
#include "countewa/samplers.hpp"
#include "countewa/simulate.hpp"

using namespace countewa;

namespace {

// Args: n, d. s* = 5 throughout.
SimulatedData data_for(const benchmark::State& state) {
  return simulate_dataset(state.range(0), state.range(1), 5, Family::poisson(), false, 1);
}

void BM_LogPosteriorAndGradient(benchmark::State& state) {
  const auto sim = data_for(state);
  const GibbsConfig cfg;
  const Theta theta = sim.model.theta_star * 0.9;
  for (auto _ : state) benchmark::DoNotOptimize(log_posterior_and_gradient(sim.data, theta, cfg));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LogPosteriorAndGradient)->Args({50, 100})->Args({100, 300})->Args({800, 1600});

void run_chain(benchmark::State& state, Method method) {
  const auto sim = data_for(state);
  const GibbsConfig gibbs;
  ChainConfig chain;
  chain.n_iter = 1000;
  chain.burn_in = 200;
  chain.step_size = 1e-4;
  const Target target = gibbs_target(sim.data, gibbs);
  const Theta init = Theta::Zero(sim.data.d());
  for (auto _ : state) {
    const ChainResult r = method == Method::lmc ? lmc_run(target, init, chain)
                                                : mala_run(target, init, chain);
    benchmark::DoNotOptimize(r.posterior_mean.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chain.n_iter));
}

void BM_Lmc1000Steps(benchmark::State& state) { run_chain(state, Method::lmc); }
void BM_Mala1000Steps(benchmark::State& state) { run_chain(state, Method::mala); }
BENCHMARK(BM_Lmc1000Steps)->Args({50, 100})->Args({100, 300})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Mala1000Steps)->Args({50, 100})->Args({100, 300})->Unit(benchmark::kMillisecond);

void BM_LassoSingleLambda(benchmark::State& state) {
  const auto sim = data_for(state);
  const LassoConfig cfg;
  const double lambda = lambda_grid(sim.data, cfg).front() * 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_poisson_lasso(sim.data, lambda, cfg));
}
BENCHMARK(BM_LassoSingleLambda)->Args({50, 100})->Args({800, 1600})->Unit(benchmark::kMillisecond);

void BM_LassoCrossValidation(benchmark::State& state) {
  const auto sim = data_for(state);
  const LassoConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(cv_select(sim.data, cfg));
}
BENCHMARK(BM_LassoCrossValidation)->Args({50, 100})->Args({200, 400})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
