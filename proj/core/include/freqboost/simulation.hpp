#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "freqboost/learner.hpp"
#include "freqboost/markov.hpp"

namespace freqboost {

/// Seed used by every randomized entry point when none is given.
inline constexpr std::uint64_t default_seed = 20130917;

/// One teacher-learner experiment. The increment of learning is s = 1/L.
struct SimConfig {
  int forms = 2;
  int capacity = 2;
  SourceDistribution source = SourceDistribution::two_forms(0.5);
  std::int64_t iterations = 1;
  std::int64_t trials = 1;
  std::uint64_t master_seed = 0;
  InitialCondition init = InitialCondition::uniform();
  /// Worker threads; 0 means hardware concurrency. Results never depend on it.
  unsigned threads = 1;

  double increment() const noexcept { return 1.0 / capacity; }
  /// Throws Error(invalid_argument) when the configuration is unusable.
  void validate() const;
};

struct Trajectory {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  int forms = 0;
  /// (steps() x forms) row-major; row t is p(t), t = 0..iterations.
  std::vector<double> frequencies;

  std::size_t steps() const noexcept {
    return forms == 0 ? 0 : frequencies.size() / static_cast<std::size_t>(forms);
  }
  double frequency(std::size_t t, int form) const {
    return frequencies.at(t * static_cast<std::size_t>(forms) + static_cast<std::size_t>(form));
  }
  /// p_form(t) for every t.
  std::vector<double> series(int form) const;
};

/// Trial `trial_index` of the ensemble; its stream is
/// RngStream::for_trial(master_seed, trial_index).
Trajectory run_trajectory(const SimConfig& config, std::int64_t trial_index);

struct EnsembleResult {
  /// Mean over trials of p(iterations), and its standard error.
  std::vector<double> final_mean;
  std::vector<double> final_stderr;
  /// Mean over trials of p(t), (iterations+1) x forms row-major; empty
  /// unless requested.
  std::vector<double> mean_curve;
  /// Units of every trial at the last step, trials x forms row-major.
  std::vector<Units> final_units;
};

/// Sums are accumulated in integer quanta, so the result is bit-identical
/// for any thread count.
EnsembleResult ensemble_mean_frequency(const SimConfig& config, bool record_curve = false);

/// out[k] = mean(series[k .. k+w-1]); the k-th output belongs to step
/// n = k + w - 1. Throws when w == 0 or the series is shorter than w.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

struct LongRunEstimate {
  std::vector<double> frequencies;
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
};

/// Lattice point closest to the uniform split: L*(M-1) quanta shared as
/// evenly as possible, with any remainder given to the last forms.
std::vector<Units> near_uniform_units(int forms, int capacity);

/// Uniform start when M divides L*(M-1), near_uniform_units() otherwise.
InitialCondition default_initial_condition(int forms, int capacity);

/// Time average of p(t) over `steps` steps after `burn_in` steps of a single
/// run started from near_uniform_units().
LongRunEstimate long_run_average(int forms, int capacity, const SourceDistribution& source,
                                 std::uint64_t seed, std::int64_t steps = 1'000'000,
                                 std::int64_t burn_in = 100'000);

struct TargetFrequency {
  double value = 0.0;
  /// True when the value is a long-run Monte Carlo estimate.
  bool estimated = false;
};

/// Closed form for M = 2, numeric stationary mean below the lattice cap,
/// long-run Monte Carlo otherwise (when allowed; else Error(target_unavailable)).
TargetFrequency resolve_expected_frequency(int forms, int capacity,
                                           const SourceDistribution& source, int form,
                                           std::uint64_t seed, bool allow_estimate = true,
                                           const ChainOptions& chain = {});

struct ConvergenceOptions {
  std::size_t window = 200;
  double eps = 0.001;
  int form = 0;
  /// Overrides the analytic target when set.
  std::optional<double> target;
  bool allow_estimated_target = true;
  ChainOptions chain;
};

struct ConvergenceResult {
  /// Per trial, the first step n >= window at which the mean of p(n-window+1..n)
  /// is within eps of the target. The average never includes p(0).
  std::vector<std::optional<std::int64_t>> steps;
  double mean = 0.0;  // over converged trials only; NaN when none converged
  double standard_error = 0.0;
  std::int64_t converged = 0;
  std::int64_t not_converged = 0;
  double target = 0.0;
  bool target_estimated = false;
  std::size_t window = 0;
  double eps = 0.0;
};

ConvergenceResult convergence_time(const SimConfig& config, const ConvergenceOptions& options = {});

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Work is split by index, so callers that write to slot i only
/// stay deterministic. The first exception thrown by a worker is rethrown.
void parallel_for(std::int64_t count, unsigned threads,
                  const std::function<void(std::int64_t index, unsigned worker)>& body);

unsigned resolve_threads(unsigned requested) noexcept;

}  // namespace freqboost
