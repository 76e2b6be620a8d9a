#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqboost/markov.hpp"
#include "freqboost/simulation.hpp"

namespace freqboost {

/// One teacher/learner data point: two parents' frequencies of a form and the
/// learner's frequency of the same form, all as fractions in [0,1].
struct Observation {
  std::string label;
  std::string category;
  double parent1 = 0.0;
  double parent2 = 0.0;
  double learner = 0.0;

  /// Mixed input frequency w*parent1 + (1-w)*parent2.
  double input(double parent1_weight = 0.5) const noexcept {
    return parent1_weight * parent1 + (1.0 - parent1_weight) * parent2;
  }
};

class ObservationSet {
 public:
  ObservationSet() = default;
  /// Throws Error(invalid_argument) on out-of-range values or duplicate labels.
  explicit ObservationSet(std::vector<Observation> records);

  std::span<const Observation> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Observation& find(std::string_view label) const;

 private:
  std::vector<Observation> records_;
};

/**
 * Reads CSV with header `label,category,parent1,parent2,simon`.
 *
 * Frequencies may be fractions or percentages. If any numeric field in the
 * file exceeds 1.5 the whole file is read as percent.
 */
ObservationSet parse_observations(std::istream& in, std::string_view source_name = "<input>");
ObservationSet load_observations(const std::filesystem::path& path);

struct PredictOptions {
  ChainOptions chain;
  /// Seed of the long-run estimate used when the M >= 3 lattice is too big.
  std::uint64_t seed = default_seed;
  bool allow_estimate = true;
};

struct Prediction {
  double value = 0.0;
  bool estimated = false;
};

/// Learner frequency of the dominant form for input frequency x: the closed
/// form for M = 2; for M >= 3 the stationary mean with source
/// (x, (1-x)/(M-1), ..., (1-x)/(M-1)).
Prediction predict(int forms, int capacity, double input, const PredictOptions& options = {});

struct FitOptions {
  int min_capacity = 2;
  int max_capacity = 200;
  double parent1_weight = 0.5;
  /// Samples of the fitted curve over [0,1], endpoints included.
  int curve_points = 101;
  unsigned threads = 1;
  ChainOptions chain;
};

struct FitResult {
  int forms = 0;
  int capacity = 0;
  double increment = 0.0;
  double sse = 0.0;
  std::vector<double> inputs;     // per record
  std::vector<double> predicted;  // per record
  std::vector<double> curve_x;
  std::vector<double> curve_y;
};

/// Least-squares grid search over integer L; ties go to the smaller L.
FitResult fit(const ObservationSet& observations, int forms, const FitOptions& options = {});

enum class BoostClass {
  majority_form,  // input > 1/2
  sub_majority,   // 1/M < input <= 1/2
  below_uniform,  // input <= 1/M
};

std::string_view to_string(BoostClass c) noexcept;
BoostClass classify_input(double input, int forms) noexcept;

struct CaseRecord {
  std::string label;
  double input = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double residual = 0.0;  // observed - predicted
  BoostClass classification = BoostClass::majority_form;
  bool estimated = false;
};

std::vector<CaseRecord> case_report(const ObservationSet& observations, int forms, int capacity,
                                    double parent1_weight = 0.5,
                                    const PredictOptions& options = {});

/// `M,L_fit,s_fit,sse` block, then `label,input,observed,predicted,residual,classification`.
void write_fit_report(std::ostream& out, const FitResult& fit, std::span<const CaseRecord> cases);

}  // namespace freqboost
