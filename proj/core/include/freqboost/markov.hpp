#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "freqboost/learner.hpp"

namespace freqboost {

struct ChainOptions {
  /// Largest lattice build_chain will enumerate.
  std::uint64_t max_states = 200'000;
};

/// Number of lattice states for M forms and capacity L, i.e. the number of
/// compositions of L*(M-1) quanta into M parts. Saturates at UINT64_MAX.
std::uint64_t lattice_size(int forms, int capacity);

/**
 * Markov chain induced by a frozen source on the learner lattice.
 *
 * States are listed in lexicographic order of their unit vectors, so for
 * M = 2 state k is the learner holding k quanta of form 1 (frequency k/L).
 * Transitions are stored row-wise, sparse, with duplicate targets merged.
 */
class ChainModel {
 public:
  struct Entry {
    std::size_t target;
    double probability;
  };

  int forms() const noexcept { return forms_; }
  int capacity() const noexcept { return capacity_; }
  Units total() const noexcept { return total_; }
  std::size_t size() const noexcept { return row_offsets_.size() - 1; }
  const SourceDistribution& source() const noexcept { return source_; }

  std::span<const Units> state(std::size_t index) const;
  /// Index of a unit vector; throws if it is not on the lattice.
  std::size_t index_of(std::span<const Units> units) const;

  std::span<const Entry> row(std::size_t index) const;
  double transition(std::size_t from, std::size_t to) const;
  double row_sum(std::size_t index) const;
  std::size_t nonzeros() const noexcept { return entries_.size(); }

  /// Dense copy of the transition matrix; meant for small chains.
  std::vector<std::vector<double>> dense() const;

 private:
  friend ChainModel build_chain(int, int, const SourceDistribution&, const ChainOptions&);

  ChainModel(int forms, int capacity, SourceDistribution source);

  int forms_;
  int capacity_;
  Units total_;
  SourceDistribution source_;
  std::vector<Units> states_;  // size() * forms_, row-major
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Entry> entries_;
  std::vector<std::vector<std::uint64_t>> binomial_;  // binomial_[k][n] = C(n, k)
};

ChainModel build_chain(int forms, int capacity, const SourceDistribution& source,
                       const ChainOptions& options = {});

enum class StationaryMethod {
  automatic,       // GTH elimination for small chains, sparse LU otherwise
  direct,          // same as automatic
  power_iteration  // iterate the lazy chain (I + A)/2
};

struct StationaryOptions {
  StationaryMethod method = StationaryMethod::automatic;
  std::size_t dense_limit = 400;
  double tolerance = 1e-12;
  std::size_t max_iterations = 2'000'000;
};

struct StationaryDistribution {
  std::vector<double> pi;        // over all chain states; zero outside the recurrent class
  std::size_t recurrent_states;  // size of the class the solve was restricted to
  std::size_t iterations = 0;    // power iteration only
};

/// Stationary law of the unique closed communicating class. Throws
/// Error(reducible_chain) if there is more than one closed class.
StationaryDistribution stationary(const ChainModel& chain, const StationaryOptions& options = {});

/// max_j |(pi A)_j - pi_j|.
double stationary_residual(const ChainModel& chain, std::span<const double> pi);

/// Expected learner frequency of form 1 in the two-form quasi-steady state:
///   P(L, nu) = 1 + (1/L) ((L+1)/(lambda^(L+1) - 1) - 1/(lambda - 1)),
/// lambda = nu / (1 - nu). Exact limits at nu in {0, 1/2, 1}; a cumulant
/// series is used when (L+1)|ln lambda| < 1e-3, and the large power is
/// handled in log space.
double expected_frequency_closed_form(int capacity, double nu);

/// Stationary mean of each form's frequency.
std::vector<double> expected_frequencies_numeric(const ChainModel& chain,
                                                 const StationaryDistribution& pi);
std::vector<double> expected_frequencies_numeric(const ChainModel& chain,
                                                 const StationaryOptions& options = {});

/// P(L, nu) - nu; positive for nu > 1/2.
double boosting_margin(int capacity, double nu);

/// Expected frequency of `form` from the closed form (M = 2) or a numeric
/// stationary solve (M >= 3). Empty when the lattice exceeds the cap.
std::optional<double> analytic_expected_frequency(int forms, int capacity,
                                                  const SourceDistribution& source, int form,
                                                  const ChainOptions& options = {});

}  // namespace freqboost
