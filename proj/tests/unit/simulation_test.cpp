#include <doctest.h>

#include <cmath>
#include <numeric>

#include "freqboost/error.hpp"
#include "freqboost/markov.hpp"
#include "freqboost/simulation.hpp"

using namespace freqboost;

namespace {

SimConfig two_form_config(int capacity, double nu, std::int64_t iterations, std::int64_t trials,
                          std::uint64_t seed = 7) {
  SimConfig c;
  c.forms = 2;
  c.capacity = capacity;
  c.source = SourceDistribution::two_forms(nu);
  c.iterations = iterations;
  c.trials = trials;
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST_CASE("moving average of a constant series is the constant") {
  const std::vector<double> series(50, 0.37);
  for (std::size_t w : {1u, 7u, 50u}) {
    const auto out = moving_average(series, w);
    CHECK(out.size() == series.size() - w + 1);
    for (double v : out) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
  }
}

TEST_CASE("moving average of 1,2,3,4 with window 2") {
  const std::vector<double> series{1, 2, 3, 4};
  CHECK(moving_average(series, 2) == std::vector<double>{1.5, 2.5, 3.5});
}

TEST_CASE("moving average of an alternating series stays within 1/(2w) of one half") {
  std::vector<double> series(1000);
  for (std::size_t k = 0; k < series.size(); ++k) series[k] = static_cast<double>(k % 2);
  for (double v : moving_average(series, 200)) CHECK(std::abs(v - 0.5) <= 1.0 / 400.0 + 1e-15);
  for (double v : moving_average(series, 199)) CHECK(std::abs(v - 0.5) <= 1.0 / 398.0 + 1e-15);
}

TEST_CASE("moving average rejects a zero window and short series") {
  const std::vector<double> series{1, 2, 3};
  CHECK_THROWS_AS(moving_average(series, 0), Error);
  CHECK_THROWS_AS(moving_average(series, 4), Error);
  CHECK(moving_average(series, 3).size() == 1);
}

TEST_CASE("a deterministic source climbs by 1/L per step") {
  SimConfig c;
  c.capacity = 10;
  c.source = SourceDistribution({1.0, 0.0});
  c.iterations = 12;
  const auto run = run_trajectory(c, 0);
  REQUIRE(run.steps() == 13);
  for (std::size_t t = 0; t < run.steps(); ++t) {
    const double expected = std::min(0.5 + static_cast<double>(t) / 10.0, 1.0);
    CHECK(run.frequency(t, 0) == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK(run.frequency(4, 0) < 1.0);
  CHECK(run.frequency(5, 0) == 1.0);
}

TEST_CASE("trajectories are valid probability vectors starting at the initial condition") {
  SimConfig c;
  c.forms = 3;
  c.capacity = 7;
  c.source = SourceDistribution({0.5, 0.2, 0.3});
  c.iterations = 2000;
  c.init = InitialCondition::explicit_units({14, 0, 0});
  const auto run = run_trajectory(c, 3);
  CHECK(run.frequency(0, 0) == 1.0);
  CHECK(run.frequency(0, 1) == 0.0);
  for (std::size_t t = 0; t < run.steps(); ++t) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double p = run.frequency(t, i);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      // Frequencies live on the 1/(L(M-1)) lattice.
      CHECK(std::abs(p * 14.0 - std::round(p * 14.0)) < 1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("identical config and trial index give bit-identical trajectories") {
  const auto c = two_form_config(20, 0.7, 5000, 1, 99);
  const auto a = run_trajectory(c, 11);
  const auto b = run_trajectory(c, 11);
  CHECK(a.frequencies == b.frequencies);
  CHECK(a.seed == b.seed);
  CHECK(a.seed == RngStream::stream_seed(99, 11));
  CHECK(run_trajectory(c, 12).frequencies != a.frequencies);
}

TEST_CASE("late time average at L=100, nu=0.7 matches the closed form") {
  const auto c = two_form_config(100, 0.7, 30'000, 1, default_seed);
  const auto series = run_trajectory(c, 0).series(0);
  const double tail =
      std::accumulate(series.end() - 10'000, series.end(), 0.0) / 10'000.0;
  CHECK(std::abs(tail - expected_frequency_closed_form(100, 0.7)) <= 0.01);
}

TEST_CASE("ensembles do not depend on the number of threads") {
  auto c = two_form_config(20, 0.7, 3000, 37, 5);
  const auto one = ensemble_mean_frequency(c, true);
  c.threads = 4;
  const auto four = ensemble_mean_frequency(c, true);
  CHECK(one.final_mean == four.final_mean);
  CHECK(one.final_stderr == four.final_stderr);
  CHECK(one.mean_curve == four.mean_curve);
  CHECK(one.final_units == four.final_units);

  ConvergenceOptions options;
  options.eps = 0.01;
  options.window = 50;
  c.threads = 1;
  const auto conv_one = convergence_time(c, options);
  c.threads = 3;
  const auto conv_three = convergence_time(c, options);
  CHECK(conv_one.steps == conv_three.steps);
  CHECK(conv_one.mean == conv_three.mean);
}

TEST_CASE("ensemble final units agree with individual trajectories") {
  const auto c = two_form_config(10, 0.6, 400, 5, 3);
  const auto e = ensemble_mean_frequency(c, true);
  REQUIRE(e.mean_curve.size() == 401 * 2);
  double mean = 0.0;
  for (std::int64_t k = 0; k < 5; ++k) {
    const auto run = run_trajectory(c, k);
    CHECK(run.frequency(400, 0) * 10.0 == doctest::Approx(e.final_units[2 * k]));
    mean += run.frequency(400, 0) / 5.0;
  }
  CHECK(e.final_mean[0] == doctest::Approx(mean).epsilon(1e-14));
  CHECK(e.mean_curve[0] == 0.5);
}

TEST_CASE("a uniform source gives 1/M per form within Monte Carlo error") {
  SimConfig c;
  c.forms = 3;
  c.capacity = 3;
  c.source = SourceDistribution({1.0 / 3, 1.0 / 3, 1.0 / 3});
  c.iterations = 500;
  c.trials = 3000;
  c.master_seed = 17;
  const auto e = ensemble_mean_frequency(c);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(e.final_mean[i] - 1.0 / 3.0) <= 4.0 * e.final_stderr[i]);
  }
}

TEST_CASE("three-form ensemble boosts the leading form of (0.4, 0.25, 0.35)") {
  SimConfig c;
  c.forms = 3;
  c.capacity = 10;
  c.source = SourceDistribution({0.4, 0.25, 0.35});
  c.iterations = 20'000;
  c.trials = 200;
  c.master_seed = 2;
  c.init = default_initial_condition(3, 10);
  const auto e = ensemble_mean_frequency(c);
  const auto numeric = analytic_expected_frequency(3, 10, c.source, 0);
  REQUIRE(numeric.has_value());
  CHECK(*numeric > 0.4);
  CHECK(e.final_mean[0] > e.final_mean[1]);
  CHECK(e.final_mean[0] > e.final_mean[2]);
  CHECK(e.final_mean[0] > 0.4);
  CHECK(std::abs(e.final_mean[0] - *numeric) <= 4.0 * e.final_stderr[0]);
}

TEST_CASE("pooled final states match the stationary law in total variation") {
  const int L = 20;
  const auto c = two_form_config(L, 0.7, 3000, 4000, 23);
  const auto e = ensemble_mean_frequency(c);
  const auto chain = build_chain(2, L, c.source);
  const auto pi = stationary(chain).pi;
  std::vector<double> counts(chain.size(), 0.0);
  for (std::int64_t k = 0; k < c.trials; ++k) {
    const std::vector<Units> units{e.final_units[2 * k], e.final_units[2 * k + 1]};
    counts[chain.index_of(units)] += 1.0 / static_cast<double>(c.trials);
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) tv += std::abs(counts[k] - pi[k]);
  CHECK(tv / 2.0 <= 0.02);
}

TEST_CASE("long single runs are ergodic") {
  for (double nu : {0.6, 0.7, 0.85}) {
    const auto est = long_run_average(2, 20, SourceDistribution::two_forms(nu), 31);
    CHECK(est.steps == 1'000'000);
    CHECK(est.burn_in == 100'000);
    CHECK(std::abs(est.frequencies[0] - expected_frequency_closed_form(20, nu)) <= 0.005);
  }
}

TEST_CASE("near-uniform start spreads the remainder over the last forms") {
  CHECK(near_uniform_units(3, 100) == std::vector<Units>{66, 67, 67});
  CHECK(near_uniform_units(3, 6) == std::vector<Units>{4, 4, 4});
  CHECK(near_uniform_units(2, 7) == std::vector<Units>{3, 4});
  CHECK(default_initial_condition(3, 6).is_uniform());
  CHECK_FALSE(default_initial_condition(3, 100).is_uniform());
  CHECK(default_initial_condition(2, 7).units().size() == 2);
}

TEST_CASE("deterministic climb converges at step 5 with w=1, eps=0") {
  SimConfig c;
  c.capacity = 10;
  c.source = SourceDistribution({1.0, 0.0});
  c.iterations = 20;
  c.trials = 3;
  ConvergenceOptions options;
  options.window = 1;
  options.eps = 0.0;
  const auto r = convergence_time(c, options);
  CHECK(r.target == 1.0);
  CHECK_FALSE(r.target_estimated);
  CHECK(r.converged == 3);
  CHECK(r.not_converged == 0);
  for (const auto& s : r.steps) CHECK(s == std::optional<std::int64_t>(5));
  CHECK(r.mean == 5.0);
  CHECK(r.standard_error == 0.0);
}

TEST_CASE("convergence steps never precede the window") {
  auto c = two_form_config(20, 0.5, 2000, 30, 4);
  ConvergenceOptions options;
  options.window = 25;
  options.eps = 0.2;  // wide enough that the first full window already qualifies
  const auto r = convergence_time(c, options);
  CHECK(r.converged == 30);
  for (const auto& s : r.steps) {
    REQUIRE(s.has_value());
    CHECK(*s >= 25);
  }
}

TEST_CASE("convergence agrees with moving_average over the trial's own series") {
  auto c = two_form_config(50, 0.7, 4000, 1, 8);
  ConvergenceOptions options;
  options.window = 40;
  options.eps = 0.01;
  const auto r = convergence_time(c, options);
  REQUIRE(r.steps.front().has_value());

  auto series = run_trajectory(c, 0).series(0);
  series.erase(series.begin());  // the average starts at step 1
  const auto ma = moving_average(series, options.window);
  std::optional<std::int64_t> first;
  for (std::size_t k = 0; k < ma.size(); ++k) {
    if (std::abs(ma[k] - r.target) <= options.eps) {
      first = static_cast<std::int64_t>(k + options.window);
      break;
    }
  }
  CHECK(first == r.steps.front());
}

TEST_CASE("non-converged trials are counted and excluded") {
  auto c = two_form_config(1000, 0.7, 300, 4, 1);
  ConvergenceOptions options;
  const auto r = convergence_time(c, options);
  CHECK(r.converged == 0);
  CHECK(r.not_converged == 4);
  CHECK(std::isnan(r.mean));

  options.target = 0.5;
  options.window = 10;
  options.eps = 0.05;
  const auto forced = convergence_time(c, options);
  CHECK(forced.target == 0.5);
  CHECK(forced.converged == 4);
}

TEST_CASE("three-form convergence falls back to a flagged long-run target above the cap") {
  SimConfig c;
  c.forms = 3;
  c.capacity = 30;
  c.source = SourceDistribution({0.5, 0.25, 0.25});
  c.iterations = 100;
  c.trials = 2;
  ConvergenceOptions options;
  options.chain.max_states = 100;
  const auto r = convergence_time(c, options);
  CHECK(r.target_estimated);
  CHECK(r.target > 0.5);

  options.allow_estimated_target = false;
  try {
    (void)convergence_time(c, options);
    FAIL("expected target_unavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::target_unavailable);
  }
}

TEST_CASE("configuration errors are rejected") {
  SimConfig c;
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.iterations = 1;
  c.trials = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.trials = 1;
  c.forms = 3;
  CHECK_THROWS_AS(c.validate(), Error);  // source still has two forms
  c.forms = 2;
  c.capacity = 1;
  CHECK_THROWS_AS(run_trajectory(c, 0), Error);
  c.capacity = 4;
  CHECK_THROWS_AS(run_trajectory(c, -1), Error);
}

TEST_CASE("parallel_for visits every index once and propagates exceptions") {
  std::vector<int> seen(101, 0);
  parallel_for(101, 4, [&](std::int64_t i, unsigned) { ++seen[static_cast<std::size_t>(i)]; });
  for (int v : seen) CHECK(v == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::int64_t i, unsigned) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}
