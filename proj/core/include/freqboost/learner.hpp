#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "freqboost/rng.hpp"

namespace freqboost {

/// Count of probability quanta. One quantum is 1/(M-1) of an X-unit, so a
/// learner with capacity L holds L*(M-1) quanta in total.
using Units = std::int64_t;

/// Frozen emission probabilities of the teacher. Form indices are 0-based.
class SourceDistribution {
 public:
  /// Rejects negative entries, entries above 1 and |sum - 1| > 1e-9. The
  /// accepted vector is renormalized so that it sums to 1 in floating point.
  explicit SourceDistribution(std::vector<double> nu);

  /// (nu1, 1 - nu1).
  static SourceDistribution two_forms(double nu1);
  /// (nu1, (1-nu1)/(M-1), ..., (1-nu1)/(M-1)).
  static SourceDistribution dominant_with_equal_split(int forms, double nu1);

  int forms() const noexcept { return static_cast<int>(nu_.size()); }
  double probability(int form) const;
  std::span<const double> probabilities() const noexcept { return nu_; }

  /// Draws one form: the first j with u < cdf[j], u uniform in [0,1).
  int emit(RngStream& rng) const noexcept {
    const double u = rng.uniform01();
    int j = 0;
    while (u >= cdf_[static_cast<std::size_t>(j)]) ++j;
    return j;
  }

  friend bool operator==(const SourceDistribution&, const SourceDistribution&) = default;

 private:
  std::vector<double> nu_;
  std::vector<double> cdf_;  // trailing entries pinned to exactly 1.0
};

inline int emit(const SourceDistribution& source, RngStream& rng) noexcept {
  return source.emit(rng);
}

class InitialCondition {
 public:
  /// Equal split, p_i = 1/M.
  static InitialCondition uniform() { return InitialCondition{}; }
  /// Explicit quanta per form; must sum to L*(M-1).
  static InitialCondition explicit_units(std::vector<Units> units);

  bool is_uniform() const noexcept { return units_.empty(); }
  std::span<const Units> units() const noexcept { return units_; }

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;

 private:
  std::vector<Units> units_;
};

/**
 * Learner state on the exact quantum lattice.
 *
 * Invariants: units() has M nonnegative entries summing to L*(M-1); the
 * usage probability of form i is units()[i] / total().
 */
class LearnerState {
 public:
  /// Throws Error(invalid_argument) for M < 2, L < 2, a uniform split that
  /// does not divide, or explicit units with the wrong length or sum.
  static LearnerState create(int forms, int capacity,
                             const InitialCondition& init = InitialCondition::uniform());

  int forms() const noexcept { return static_cast<int>(units_.size()); }
  int capacity() const noexcept { return capacity_; }
  Units total() const noexcept { return total_; }
  std::span<const Units> units() const noexcept { return units_; }
  Units units_of(int form) const { return units_.at(static_cast<std::size_t>(form)); }

  double frequency(int form) const;
  std::vector<double> frequencies() const;

  /// Source emitted `form`: every other form gives up one quantum if it has
  /// one, and `form` collects everything given up.
  void apply(int form) noexcept {
    const auto j = static_cast<std::size_t>(form);
    Units moved = 0;
    for (std::size_t i = 0; i < units_.size(); ++i) {
      if (i != j && units_[i] > 0) {
        --units_[i];
        ++moved;
      }
    }
    units_[j] += moved;
  }

  friend bool operator==(const LearnerState&, const LearnerState&) = default;

 private:
  LearnerState(int capacity, std::vector<Units> units);

  int capacity_ = 0;
  Units total_ = 0;
  std::vector<Units> units_;
};

inline LearnerState new_learner(int forms, int capacity,
                                const InitialCondition& init = InitialCondition::uniform()) {
  return LearnerState::create(forms, capacity, init);
}

/// Value-returning form of LearnerState::apply with index checking.
LearnerState update(LearnerState state, int emitted_form);

double frequency(const LearnerState& state, int form);

}  // namespace freqboost
