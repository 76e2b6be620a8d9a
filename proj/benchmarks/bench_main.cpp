#include <benchmark/benchmark.h>

#include "freqboost/learner.hpp"
#include "freqboost/markov.hpp"
#include "freqboost/simulation.hpp"

namespace fb = freqboost;

namespace {

void BM_LearnerStep(benchmark::State& state) {
  const int forms = static_cast<int>(state.range(0));
  const auto source = fb::SourceDistribution::dominant_with_equal_split(forms, 0.6);
  auto learner = fb::LearnerState::create(forms, 100 * forms,
                                          fb::InitialCondition::explicit_units(
                                              fb::near_uniform_units(forms, 100 * forms)));
  fb::RngStream rng(1);
  for (auto _ : state) {
    learner.apply(source.emit(rng));
    benchmark::DoNotOptimize(learner);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LearnerStep)->Arg(2)->Arg(3)->Arg(8);

void BM_Ensemble(benchmark::State& state) {
  fb::SimConfig config;
  config.capacity = 20;
  config.source = fb::SourceDistribution::two_forms(0.7);
  config.iterations = 30'000;
  config.trials = state.range(0);
  config.master_seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fb::ensemble_mean_frequency(config));
  state.SetItemsProcessed(state.iterations() * config.iterations * config.trials);
}
BENCHMARK(BM_Ensemble)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ClosedForm(benchmark::State& state) {
  double nu = 0.51;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fb::expected_frequency_closed_form(static_cast<int>(state.range(0)), nu));
    nu = nu > 0.98 ? 0.51 : nu + 0.01;
  }
}
BENCHMARK(BM_ClosedForm)->Arg(20)->Arg(1000);

void BM_StationaryTwoForms(benchmark::State& state) {
  const auto chain =
      fb::build_chain(2, static_cast<int>(state.range(0)), fb::SourceDistribution::two_forms(0.7));
  for (auto _ : state) benchmark::DoNotOptimize(fb::stationary(chain));
}
BENCHMARK(BM_StationaryTwoForms)->Arg(20)->Arg(200)->Arg(2000);

void BM_StationaryThreeForms(benchmark::State& state) {
  const int capacity = static_cast<int>(state.range(0));
  const fb::SourceDistribution source({0.4, 0.25, 0.35});
  for (auto _ : state) {
    const auto chain = fb::build_chain(3, capacity, source);
    benchmark::DoNotOptimize(fb::stationary(chain));
  }
  state.counters["states"] = static_cast<double>(fb::lattice_size(3, capacity));
}
BENCHMARK(BM_StationaryThreeForms)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
