#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqboost/markov.hpp"
#include "freqboost/simulation.hpp"

namespace freqboost {

enum class ExperimentKind {
  boost_curve,   // ensemble mean of p(iterations) against the source
  trajectories,  // one run per grid point, p(t) sampled every `stride` steps
  convergence,   // moving-average first-crossing times
};

/**
 * A parameter grid plus simulation settings. The grid is the product
 * capacities x sources, walked capacity-major; grid point g runs with
 * master seed RngStream::stream_seed(master_seed, g), and that derived seed
 * is what the CSV echoes.
 */
struct ExperimentSpec {
  std::string figure;
  ExperimentKind kind = ExperimentKind::boost_curve;
  int forms = 2;
  std::vector<int> capacities;
  std::vector<std::vector<double>> sources;
  std::int64_t iterations = 30'000;
  std::int64_t trials = 200;
  std::uint64_t master_seed = default_seed;
  std::size_t window = 200;
  double eps = 0.001;
  std::int64_t stride = 1;
  /// 0-based forms to emit rows for.
  std::vector<int> report_forms{0};
  unsigned threads = 1;
  ChainOptions chain;

  void validate() const;
};

/// Figure ids accepted by figure_spec: fig1a fig1b fig2a fig2b fig3a fig3b fig4a fig4b.
std::span<const std::string_view> figure_ids() noexcept;
/// Default grid and settings for a figure; throws for unknown ids.
ExperimentSpec figure_spec(std::string_view figure);

/// Capacity L for an increment s, requiring s = 1/L with integer L >= 2.
int capacity_from_increment(double s);

struct ResultRow {
  std::string figure;
  int forms = 0;
  int capacity = 0;
  std::vector<double> nu;
  std::int64_t iterations = 0;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  int form = 0;  // 0-based; written 1-based
  std::optional<double> p_analytic;
  std::optional<double> p_montecarlo;
  std::optional<double> conv_mean;
  std::optional<double> conv_stderr;
  std::optional<std::int64_t> n_nonconverged;
  std::optional<std::int64_t> iteration;
};

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

/// Header plus one line per row, LF line endings. Columns:
/// figure,M,L,s,nu1..nuM,iterations,trials,seed,form,p_analytic,p_montecarlo,
/// conv_mean,conv_stderr,n_nonconverged,iteration
void write_csv(std::ostream& out, int forms, std::span<const ResultRow> rows);
std::string csv_header(int forms);

/// Shortest round-trip decimal representation.
std::string format_real(double value);

}  // namespace freqboost
