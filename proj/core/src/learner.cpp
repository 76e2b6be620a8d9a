#include "freqboost/learner.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "freqboost/error.hpp"

namespace freqboost {

SourceDistribution::SourceDistribution(std::vector<double> nu) : nu_(std::move(nu)) {
  if (nu_.size() < 2) {
    fail(ErrorCode::invalid_argument, "source needs at least two forms");
  }
  double sum = 0.0;
  for (double p : nu_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      fail(ErrorCode::invalid_argument,
           "source probability " + std::to_string(p) + " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::invalid_argument,
         "source probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double& p : nu_) p /= sum;

  cdf_.resize(nu_.size());
  std::partial_sum(nu_.begin(), nu_.end(), cdf_.begin());
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < nu_.size(); ++i) {
    if (nu_[i] > 0.0) last_positive = i;
  }
  for (std::size_t i = last_positive; i < cdf_.size(); ++i) cdf_[i] = 1.0;
}

SourceDistribution SourceDistribution::two_forms(double nu1) {
  return SourceDistribution({nu1, 1.0 - nu1});
}

SourceDistribution SourceDistribution::dominant_with_equal_split(int forms, double nu1) {
  if (forms < 2) fail(ErrorCode::invalid_argument, "need at least two forms");
  std::vector<double> nu(static_cast<std::size_t>(forms), (1.0 - nu1) / (forms - 1));
  nu[0] = nu1;
  return SourceDistribution(std::move(nu));
}

double SourceDistribution::probability(int form) const {
  if (form < 0 || form >= forms()) {
    fail(ErrorCode::invalid_argument, "form index " + std::to_string(form) + " out of range");
  }
  return nu_[static_cast<std::size_t>(form)];
}

InitialCondition InitialCondition::explicit_units(std::vector<Units> units) {
  if (units.empty()) fail(ErrorCode::invalid_argument, "explicit initial units are empty");
  InitialCondition init;
  init.units_ = std::move(units);
  return init;
}

LearnerState::LearnerState(int capacity, std::vector<Units> units)
    : capacity_(capacity),
      total_(static_cast<Units>(capacity) * static_cast<Units>(units.size() - 1)),
      units_(std::move(units)) {}

LearnerState LearnerState::create(int forms, int capacity, const InitialCondition& init) {
  if (forms < 2) fail(ErrorCode::invalid_argument, "M must be >= 2, got " + std::to_string(forms));
  if (capacity < 2) {
    fail(ErrorCode::invalid_argument, "L must be >= 2, got " + std::to_string(capacity));
  }
  const Units total = static_cast<Units>(capacity) * (forms - 1);
  if (init.is_uniform()) {
    if (total % forms != 0) {
      fail(ErrorCode::invalid_argument,
           "uniform start needs M | L*(M-1): " + std::to_string(total) +
               " quanta do not split into " + std::to_string(forms) + " forms");
    }
    return LearnerState(capacity,
                        std::vector<Units>(static_cast<std::size_t>(forms), total / forms));
  }
  const auto units = init.units();
  if (units.size() != static_cast<std::size_t>(forms)) {
    fail(ErrorCode::invalid_argument, "explicit units have " + std::to_string(units.size()) +
                                          " entries, expected " + std::to_string(forms));
  }
  Units sum = 0;
  for (Units u : units) {
    if (u < 0) fail(ErrorCode::invalid_argument, "explicit units must be nonnegative");
    sum += u;
  }
  if (sum != total) {
    fail(ErrorCode::invalid_argument, "explicit units sum to " + std::to_string(sum) +
                                          ", expected L*(M-1) = " + std::to_string(total));
  }
  return LearnerState(capacity, std::vector<Units>(units.begin(), units.end()));
}

double LearnerState::frequency(int form) const {
  if (form < 0 || form >= forms()) {
    fail(ErrorCode::invalid_argument, "form index " + std::to_string(form) + " out of range");
  }
  return static_cast<double>(units_[static_cast<std::size_t>(form)]) /
         static_cast<double>(total_);
}

std::vector<double> LearnerState::frequencies() const {
  std::vector<double> out(units_.size());
  for (std::size_t i = 0; i < units_.size(); ++i) {
    out[i] = static_cast<double>(units_[i]) / static_cast<double>(total_);
  }
  return out;
}

LearnerState update(LearnerState state, int emitted_form) {
  if (emitted_form < 0 || emitted_form >= state.forms()) {
    fail(ErrorCode::invalid_argument,
         "emitted form " + std::to_string(emitted_form) + " out of range");
  }
  state.apply(emitted_form);
  return state;
}

double frequency(const LearnerState& state, int form) { return state.frequency(form); }

}  // namespace freqboost
