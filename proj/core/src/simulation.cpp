#include "freqboost/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "freqboost/error.hpp"

namespace freqboost {

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::int64_t count, unsigned threads,
                  const std::function<void(std::int64_t, unsigned)>& body) {
  if (count <= 0) return;
  const auto workers = static_cast<unsigned>(
      std::min<std::int64_t>(resolve_threads(threads), count));
  if (workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i, 0);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < count; i += workers) body(i, w);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  pool.clear();  // joins
  if (first_error) std::rethrow_exception(first_error);
}

void SimConfig::validate() const {
  if (forms < 2) fail(ErrorCode::invalid_argument, "M must be >= 2");
  if (capacity < 2) fail(ErrorCode::invalid_argument, "L must be >= 2");
  if (source.forms() != forms) {
    fail(ErrorCode::invalid_argument, "source has " + std::to_string(source.forms()) +
                                          " forms, expected M = " + std::to_string(forms));
  }
  if (iterations < 1) fail(ErrorCode::invalid_argument, "iterations must be >= 1");
  if (trials < 1) fail(ErrorCode::invalid_argument, "trials must be >= 1");
  (void)LearnerState::create(forms, capacity, init);
}

std::vector<double> Trajectory::series(int form) const {
  if (form < 0 || form >= forms) fail(ErrorCode::invalid_argument, "form index out of range");
  std::vector<double> out(steps());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = frequency(t, form);
  return out;
}

Trajectory run_trajectory(const SimConfig& config, std::int64_t trial_index) {
  config.validate();
  if (trial_index < 0) fail(ErrorCode::invalid_argument, "trial index must be >= 0");
  auto rng = RngStream::for_trial(config.master_seed, static_cast<std::uint64_t>(trial_index));
  auto state = LearnerState::create(config.forms, config.capacity, config.init);

  Trajectory out;
  out.trial = trial_index;
  out.seed = rng.seed();
  out.forms = config.forms;
  out.frequencies.reserve(static_cast<std::size_t>(config.iterations + 1) *
                          static_cast<std::size_t>(config.forms));
  const auto record = [&] {
    for (int i = 0; i < config.forms; ++i) out.frequencies.push_back(state.frequency(i));
  };
  record();
  for (std::int64_t t = 0; t < config.iterations; ++t) {
    state.apply(config.source.emit(rng));
    record();
  }
  return out;
}

EnsembleResult ensemble_mean_frequency(const SimConfig& config, bool record_curve) {
  config.validate();
  const auto m = static_cast<std::size_t>(config.forms);
  const auto steps = static_cast<std::size_t>(config.iterations + 1);
  const unsigned workers = static_cast<unsigned>(
      std::min<std::int64_t>(resolve_threads(config.threads), config.trials));

  struct Accumulator {
    std::vector<Units> sum, sum_sq, curve;
  };
  std::vector<Accumulator> acc(workers);
  for (auto& a : acc) {
    a.sum.assign(m, 0);
    a.sum_sq.assign(m, 0);
    if (record_curve) a.curve.assign(steps * m, 0);
  }

  EnsembleResult result;
  result.final_units.assign(static_cast<std::size_t>(config.trials) * m, 0);
  const auto initial = LearnerState::create(config.forms, config.capacity, config.init);

  parallel_for(config.trials, workers, [&](std::int64_t trial, unsigned worker) {
    auto rng = RngStream::for_trial(config.master_seed, static_cast<std::uint64_t>(trial));
    auto state = initial;
    auto& a = acc[worker];
    const auto add_curve = [&](std::size_t t) {
      const auto units = state.units();
      for (std::size_t i = 0; i < m; ++i) a.curve[t * m + i] += units[i];
    };
    if (record_curve) add_curve(0);
    for (std::int64_t t = 1; t <= config.iterations; ++t) {
      state.apply(config.source.emit(rng));
      if (record_curve) add_curve(static_cast<std::size_t>(t));
    }
    const auto units = state.units();
    for (std::size_t i = 0; i < m; ++i) {
      a.sum[i] += units[i];
      a.sum_sq[i] += units[i] * units[i];
      result.final_units[static_cast<std::size_t>(trial) * m + i] = units[i];
    }
  });

  std::vector<Units> sum(m, 0), sum_sq(m, 0), curve(record_curve ? steps * m : 0, 0);
  for (const auto& a : acc) {
    for (std::size_t i = 0; i < m; ++i) {
      sum[i] += a.sum[i];
      sum_sq[i] += a.sum_sq[i];
    }
    for (std::size_t k = 0; k < curve.size(); ++k) curve[k] += a.curve[k];
  }

  const double n = static_cast<double>(config.trials);
  const double total = static_cast<double>(initial.total());
  result.final_mean.resize(m);
  result.final_stderr.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = static_cast<double>(sum[i]);
    result.final_mean[i] = s / (n * total);
    if (config.trials > 1) {
      const double var_units = (static_cast<double>(sum_sq[i]) - s * s / n) / (n - 1.0);
      result.final_stderr[i] = std::sqrt(std::max(var_units, 0.0) / n) / total;
    } else {
      result.final_stderr[i] = 0.0;
    }
  }
  result.mean_curve.resize(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    result.mean_curve[k] = static_cast<double>(curve[k]) / (n * total);
  }
  return result;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window == 0) fail(ErrorCode::invalid_argument, "moving-average window must be >= 1");
  if (series.size() < window) {
    fail(ErrorCode::invalid_argument, "series of length " + std::to_string(series.size()) +
                                          " is shorter than the window " + std::to_string(window));
  }
  std::vector<double> out;
  out.reserve(series.size() - window + 1);
  // Each window is summed afresh: no running-sum drift, and the cost is
  // irrelevant at the sizes this is used for.
  for (std::size_t end = window; end <= series.size(); ++end) {
    double sum = 0.0;
    for (std::size_t k = end - window; k < end; ++k) sum += series[k];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

std::vector<Units> near_uniform_units(int forms, int capacity) {
  if (forms < 2) fail(ErrorCode::invalid_argument, "M must be >= 2");
  if (capacity < 2) fail(ErrorCode::invalid_argument, "L must be >= 2");
  const Units total = static_cast<Units>(capacity) * (forms - 1);
  const Units base = total / forms;
  const Units extra = total % forms;
  std::vector<Units> units(static_cast<std::size_t>(forms), base);
  for (Units k = 0; k < extra; ++k) ++units[static_cast<std::size_t>(forms - 1 - k)];
  return units;
}

InitialCondition default_initial_condition(int forms, int capacity) {
  const auto units = near_uniform_units(forms, capacity);
  if (std::all_of(units.begin(), units.end(), [&](Units u) { return u == units.front(); })) {
    return InitialCondition::uniform();
  }
  return InitialCondition::explicit_units(units);
}

LongRunEstimate long_run_average(int forms, int capacity, const SourceDistribution& source,
                                 std::uint64_t seed, std::int64_t steps, std::int64_t burn_in) {
  if (steps < 1 || burn_in < 0) fail(ErrorCode::invalid_argument, "bad long-run step counts");
  if (source.forms() != forms) fail(ErrorCode::invalid_argument, "source/form count mismatch");
  auto state = LearnerState::create(
      forms, capacity, InitialCondition::explicit_units(near_uniform_units(forms, capacity)));
  RngStream rng(seed);
  for (std::int64_t t = 0; t < burn_in; ++t) state.apply(source.emit(rng));
  const auto m = static_cast<std::size_t>(forms);
  std::vector<Units> sum(m, 0);
  for (std::int64_t t = 0; t < steps; ++t) {
    state.apply(source.emit(rng));
    const auto units = state.units();
    for (std::size_t i = 0; i < m; ++i) sum[i] += units[i];
  }
  LongRunEstimate out;
  out.steps = steps;
  out.burn_in = burn_in;
  out.frequencies.resize(m);
  const double denom = static_cast<double>(steps) * static_cast<double>(state.total());
  for (std::size_t i = 0; i < m; ++i) out.frequencies[i] = static_cast<double>(sum[i]) / denom;
  return out;
}

TargetFrequency resolve_expected_frequency(int forms, int capacity,
                                           const SourceDistribution& source, int form,
                                           std::uint64_t seed, bool allow_estimate,
                                           const ChainOptions& chain) {
  if (auto exact = analytic_expected_frequency(forms, capacity, source, form, chain)) {
    return {*exact, false};
  }
  if (!allow_estimate) {
    fail(ErrorCode::target_unavailable,
         "lattice for M=" + std::to_string(forms) + ", L=" + std::to_string(capacity) +
             " exceeds the state cap and no Monte Carlo target was allowed");
  }
  const auto estimate = long_run_average(forms, capacity, source, seed);
  return {estimate.frequencies[static_cast<std::size_t>(form)], true};
}

ConvergenceResult convergence_time(const SimConfig& config, const ConvergenceOptions& options) {
  config.validate();
  if (options.window == 0) fail(ErrorCode::invalid_argument, "window must be >= 1");
  if (!(options.eps >= 0.0)) fail(ErrorCode::invalid_argument, "eps must be >= 0");
  if (options.form < 0 || options.form >= config.forms) {
    fail(ErrorCode::invalid_argument, "form index out of range");
  }

  ConvergenceResult result;
  result.window = options.window;
  result.eps = options.eps;
  if (options.target) {
    result.target = *options.target;
  } else {
    const auto target = resolve_expected_frequency(
        config.forms, config.capacity, config.source, options.form,
        RngStream::stream_seed(config.master_seed, std::numeric_limits<std::uint64_t>::max()),
        options.allow_estimated_target, options.chain);
    result.target = target.value;
    result.target_estimated = target.estimated;
  }

  const auto form = static_cast<std::size_t>(options.form);
  const auto window = static_cast<std::int64_t>(options.window);
  const auto initial = LearnerState::create(config.forms, config.capacity, config.init);
  const double scale = static_cast<double>(window) * static_cast<double>(initial.total());
  result.steps.assign(static_cast<std::size_t>(config.trials), std::nullopt);

  parallel_for(config.trials, config.threads, [&](std::int64_t trial, unsigned) {
    auto rng = RngStream::for_trial(config.master_seed, static_cast<std::uint64_t>(trial));
    auto state = initial;
    // Ring buffer of units[form] after the last `window` steps; the moving
    // average is an exact integer sum divided once. The series starts at
    // step 1, so the first full window ends at step `window`.
    std::vector<Units> ring(options.window, 0);
    Units window_sum = 0;
    for (std::int64_t t = 1; t <= config.iterations; ++t) {
      state.apply(config.source.emit(rng));
      const Units u = state.units()[form];
      auto& slot = ring[static_cast<std::size_t>((t - 1) % window)];
      window_sum += u - slot;
      slot = u;
      if (t >= window) {
        const double average = static_cast<double>(window_sum) / scale;
        if (std::abs(average - result.target) <= options.eps) {
          result.steps[static_cast<std::size_t>(trial)] = t;
          return;
        }
      }
    }
  });

  double sum = 0.0;
  for (const auto& s : result.steps) {
    if (s) {
      ++result.converged;
      sum += static_cast<double>(*s);
    } else {
      ++result.not_converged;
    }
  }
  if (result.converged == 0) {
    result.mean = std::numeric_limits<double>::quiet_NaN();
    result.standard_error = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  const double n = static_cast<double>(result.converged);
  result.mean = sum / n;
  double ss = 0.0;
  for (const auto& s : result.steps) {
    if (s) ss += (static_cast<double>(*s) - result.mean) * (static_cast<double>(*s) - result.mean);
  }
  result.standard_error = result.converged > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return result;
}

}  // namespace freqboost
