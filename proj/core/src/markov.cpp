#include "freqboost/markov.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "freqboost/error.hpp"

namespace freqboost {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t value = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // value * (n-k+i) / i is exact; cancel gcd(value, i) first so the
    // multiplication is the only step that can overflow.
    const std::uint64_t g = std::gcd(value, i);
    const std::uint64_t factor = (n - k + i) / (i / g);
    value /= g;
    if (value > kSaturated / factor) return kSaturated;
    value *= factor;
  }
  return value;
}

// Iterative Tarjan; returns the component id of every vertex.
std::vector<std::size_t> strongly_connected_components(const ChainModel& chain,
                                                       std::size_t& count) {
  const std::size_t n = chain.size();
  constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, unvisited), low(n, 0), component(n, unvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge)
  std::size_t next_index = 0;
  count = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != unvisited) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      const auto row = chain.row(v);
      if (edge < row.size()) {
        const std::size_t w = row[edge++].target;
        if (index[w] == unvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          component[w] = count;
        } while (w != v);
        ++count;
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return component;
}

std::vector<std::size_t> recurrent_class(const ChainModel& chain) {
  std::size_t count = 0;
  const auto component = strongly_connected_components(chain, count);
  std::vector<char> closed(count, 1);
  for (std::size_t v = 0; v < chain.size(); ++v) {
    for (const auto& e : chain.row(v)) {
      if (component[e.target] != component[v]) closed[component[v]] = 0;
    }
  }
  const auto n_closed = std::count(closed.begin(), closed.end(), 1);
  if (n_closed != 1) {
    fail(ErrorCode::reducible_chain,
         "chain has " + std::to_string(n_closed) + " closed classes; no unique recurrent class");
  }
  const auto which = static_cast<std::size_t>(std::find(closed.begin(), closed.end(), 1) -
                                              closed.begin());
  std::vector<std::size_t> members;
  for (std::size_t v = 0; v < chain.size(); ++v) {
    if (component[v] == which) members.push_back(v);
  }
  return members;
}

// Grassmann-Taksar-Heyman elimination. Every pivot is a sum of
// off-diagonal probabilities, so no subtraction occurs and each component
// of pi keeps full relative accuracy, however small it is.
Eigen::VectorXd solve_gth(const ChainModel& chain, std::span<const std::size_t> members,
                          std::span<const std::size_t> local) {
  const auto n = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (const auto& e : chain.row(members[static_cast<std::size_t>(r)])) {
      p(r, static_cast<Eigen::Index>(local[e.target])) += e.probability;
    }
  }
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const double out = p.row(k).head(k).sum();
    if (!(out > 0.0)) fail(ErrorCode::reducible_chain, "GTH elimination met a zero pivot");
    p.col(k).head(k) /= out;
    p.topLeftCorner(k, k).noalias() += p.col(k).head(k) * p.row(k).head(k);
  }
  Eigen::VectorXd x(n);
  x(0) = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) x(k) = x.head(k).dot(p.col(k).head(k));
  return x / x.sum();
}

// Solves pi (A - I) = 0, sum(pi) = 1 on the class: GTH for small chains,
// otherwise sparse LU on the balance equations with the last component
// pinned to 1. Dropping one state of an irreducible chain leaves a
// nonsingular M-matrix with no dense row, so the fill stays low.
Eigen::VectorXd solve_direct(const ChainModel& chain, std::span<const std::size_t> members,
                             std::span<const std::size_t> local, std::size_t dense_limit) {
  if (members.size() <= dense_limit) return solve_gth(chain, members, local);

  const auto n = static_cast<Eigen::Index>(members.size());
  const Eigen::Index pinned = n - 1;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pinned);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(chain.nonzeros() + members.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    if (r != pinned) triplets.emplace_back(r, r, -1.0);
    for (const auto& e : chain.row(members[static_cast<std::size_t>(r)])) {
      const auto c = static_cast<Eigen::Index>(local[e.target]);
      if (c == pinned) continue;
      if (r == pinned) {
        rhs(c) -= e.probability;
      } else {
        triplets.emplace_back(c, r, e.probability);
      }
    }
  }
  Eigen::SparseMatrix<double> system(pinned, pinned);
  system.setFromTriplets(triplets.begin(), triplets.end());
  system.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) {
    fail(ErrorCode::not_converged, "sparse LU factorization failed: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd x(n);
  x.head(pinned) = lu.solve(rhs);
  if (lu.info() != Eigen::Success) {
    fail(ErrorCode::not_converged, "sparse LU solve failed");
  }
  x(pinned) = 1.0;
  return x / x.sum();
}

Eigen::VectorXd solve_power(const ChainModel& chain, std::span<const std::size_t> members,
                            std::span<const std::size_t> local, const StationaryOptions& options,
                            std::size_t& iterations) {
  const auto n = static_cast<Eigen::Index>(members.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd y(n);
  for (iterations = 1; iterations <= options.max_iterations; ++iterations) {
    y = 0.5 * x;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double half = 0.5 * x(r);
      for (const auto& e : chain.row(members[static_cast<std::size_t>(r)])) {
        y(static_cast<Eigen::Index>(local[e.target])) += half * e.probability;
      }
    }
    const double change = (y - x).cwiseAbs().maxCoeff();
    x.swap(y);
    if (change <= options.tolerance) return x;
  }
  fail(ErrorCode::not_converged, "power iteration did not reach tolerance within " +
                                     std::to_string(options.max_iterations) + " iterations");
}

}  // namespace

std::uint64_t lattice_size(int forms, int capacity) {
  if (forms < 2 || capacity < 0) return 0;
  const auto quanta = static_cast<std::uint64_t>(capacity) * static_cast<std::uint64_t>(forms - 1);
  return saturating_binomial(quanta + static_cast<std::uint64_t>(forms) - 1,
                             static_cast<std::uint64_t>(forms) - 1);
}

ChainModel::ChainModel(int forms, int capacity, SourceDistribution source)
    : forms_(forms),
      capacity_(capacity),
      total_(static_cast<Units>(capacity) * (forms - 1)),
      source_(std::move(source)) {
  const auto n_max = static_cast<std::size_t>(total_) + static_cast<std::size_t>(forms_);
  binomial_.assign(static_cast<std::size_t>(forms_), std::vector<std::uint64_t>(n_max + 1, 0));
  for (std::size_t k = 0; k < binomial_.size(); ++k) {
    for (std::size_t n = k; n <= n_max; ++n) binomial_[k][n] = saturating_binomial(n, k);
  }
}

std::span<const Units> ChainModel::state(std::size_t index) const {
  if (index >= size()) fail(ErrorCode::invalid_argument, "state index out of range");
  return std::span<const Units>(states_).subspan(index * static_cast<std::size_t>(forms_),
                                                 static_cast<std::size_t>(forms_));
}

// Lexicographic rank: for position i with `rest` quanta left and k positions
// after it, the compositions whose entry i is below u number
// C(rest + k, k) - C(rest - u + k, k).
std::size_t ChainModel::index_of(std::span<const Units> units) const {
  if (units.size() != static_cast<std::size_t>(forms_)) {
    fail(ErrorCode::invalid_argument, "unit vector has wrong length");
  }
  Units rest = total_;
  std::uint64_t rank = 0;
  for (int i = 0; i + 1 < forms_; ++i) {
    const Units u = units[static_cast<std::size_t>(i)];
    if (u < 0 || u > rest) fail(ErrorCode::invalid_argument, "unit vector is not on the lattice");
    const auto k = static_cast<std::size_t>(forms_ - i - 1);
    rank += binomial_[k][static_cast<std::size_t>(rest) + k] -
            binomial_[k][static_cast<std::size_t>(rest - u) + k];
    rest -= u;
  }
  if (units.back() != rest) fail(ErrorCode::invalid_argument, "unit vector is not on the lattice");
  return static_cast<std::size_t>(rank);
}

std::span<const ChainModel::Entry> ChainModel::row(std::size_t index) const {
  return std::span<const Entry>(entries_).subspan(
      row_offsets_[index], row_offsets_[index + 1] - row_offsets_[index]);
}

double ChainModel::transition(std::size_t from, std::size_t to) const {
  for (const auto& e : row(from)) {
    if (e.target == to) return e.probability;
  }
  return 0.0;
}

double ChainModel::row_sum(std::size_t index) const {
  double sum = 0.0;
  for (const auto& e : row(index)) sum += e.probability;
  return sum;
}

std::vector<std::vector<double>> ChainModel::dense() const {
  std::vector<std::vector<double>> out(size(), std::vector<double>(size(), 0.0));
  for (std::size_t r = 0; r < size(); ++r) {
    for (const auto& e : row(r)) out[r][e.target] = e.probability;
  }
  return out;
}

ChainModel build_chain(int forms, int capacity, const SourceDistribution& source,
                       const ChainOptions& options) {
  if (forms < 2) fail(ErrorCode::invalid_argument, "M must be >= 2");
  if (capacity < 2) fail(ErrorCode::invalid_argument, "L must be >= 2");
  if (source.forms() != forms) {
    fail(ErrorCode::invalid_argument, "source has " + std::to_string(source.forms()) +
                                          " forms, chain has " + std::to_string(forms));
  }
  const std::uint64_t n_states = lattice_size(forms, capacity);
  if (n_states > options.max_states) {
    fail(ErrorCode::state_space_too_large,
         "lattice for M=" + std::to_string(forms) + ", L=" + std::to_string(capacity) + " has " +
             (n_states == kSaturated ? std::string("too many") : std::to_string(n_states)) +
             " states, cap is " + std::to_string(options.max_states));
  }

  ChainModel chain(forms, capacity, source);
  const auto m = static_cast<std::size_t>(forms);
  chain.states_.reserve(static_cast<std::size_t>(n_states) * m);

  // Enumerate compositions in lexicographic order.
  std::vector<Units> current(m, 0);
  current[m - 1] = chain.total_;
  while (true) {
    chain.states_.insert(chain.states_.end(), current.begin(), current.end());
    // Successor: bump the rightmost position i < m-1 that has quanta to its
    // right, and move the rest of that tail into the last slot.
    Units tail = 0;
    std::size_t i = m - 1;
    while (i > 0) {
      tail += current[i];
      --i;
      if (tail > 0) break;
    }
    if (tail == 0) break;
    for (std::size_t k = i + 1; k < m; ++k) current[k] = 0;
    ++current[i];
    current[m - 1] = tail - 1;
  }

  const auto probabilities = source.probabilities();
  std::vector<ChainModel::Entry> row;
  std::vector<Units> next(m);
  chain.row_offsets_.reserve(static_cast<std::size_t>(n_states) + 1);
  for (std::size_t s = 0; s < static_cast<std::size_t>(n_states); ++s) {
    row.clear();
    const auto from = std::span<const Units>(chain.states_).subspan(s * m, m);
    for (std::size_t j = 0; j < m; ++j) {
      if (probabilities[j] <= 0.0) continue;
      std::copy(from.begin(), from.end(), next.begin());
      Units moved = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (i != j && next[i] > 0) {
          --next[i];
          ++moved;
        }
      }
      next[j] += moved;
      row.push_back({chain.index_of(next), probabilities[j]});
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.target < b.target; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (chain.entries_.size() > chain.row_offsets_.back() &&
          chain.entries_.back().target == row[k].target) {
        chain.entries_.back().probability += row[k].probability;
      } else {
        chain.entries_.push_back(row[k]);
      }
    }
    chain.row_offsets_.push_back(chain.entries_.size());
  }
  return chain;
}

StationaryDistribution stationary(const ChainModel& chain, const StationaryOptions& options) {
  const auto members = recurrent_class(chain);
  constexpr std::size_t outside = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> local(chain.size(), outside);
  for (std::size_t k = 0; k < members.size(); ++k) local[members[k]] = k;

  StationaryDistribution result;
  result.recurrent_states = members.size();
  Eigen::VectorXd x;
  if (members.size() == 1) {
    x = Eigen::VectorXd::Ones(1);
  } else if (options.method == StationaryMethod::power_iteration) {
    x = solve_power(chain, members, local, options, result.iterations);
  } else {
    x = solve_direct(chain, members, local, options.dense_limit);
  }

  // Round-off can leave entries of order -1e-17 where the mass is tiny.
  x = x.cwiseMax(0.0);
  x /= x.sum();
  result.pi.assign(chain.size(), 0.0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    result.pi[members[k]] = x(static_cast<Eigen::Index>(k));
  }
  return result;
}

double stationary_residual(const ChainModel& chain, std::span<const double> pi) {
  if (pi.size() != chain.size()) fail(ErrorCode::invalid_argument, "pi has wrong length");
  std::vector<double> image(chain.size(), 0.0);
  for (std::size_t r = 0; r < chain.size(); ++r) {
    for (const auto& e : chain.row(r)) image[e.target] += pi[r] * e.probability;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    worst = std::max(worst, std::abs(image[k] - pi[k]));
  }
  return worst;
}

double expected_frequency_closed_form(int capacity, double nu) {
  if (capacity < 2) fail(ErrorCode::invalid_argument, "L must be >= 2");
  if (!(nu >= 0.0 && nu <= 1.0)) fail(ErrorCode::invalid_argument, "nu must lie in [0,1]");
  if (nu == 0.0) return 0.0;
  if (nu == 1.0) return 1.0;
  if (nu == 0.5) return 0.5;

  const double L = capacity;
  const double x = std::log(nu) - std::log1p(-nu);  // ln lambda
  const double y = (L + 1.0) * x;
  if (std::abs(y) < 1e-3) {
    // Mean of i under weights exp(i x) on {0..L}, by cumulants of the
    // discrete uniform law: L/2 + ((L+1)^2-1) x/12 - ((L+1)^4-1) x^3/720.
    const double n2 = (L + 1.0) * (L + 1.0);
    return 0.5 + (L + 2.0) * x / 12.0 - (n2 * n2 - 1.0) * x * x * x / (720.0 * L);
  }
  // (L+1) / (lambda^(L+1) - 1)
  const double top = y > 700.0 ? (L + 1.0) * std::exp(-y) / -std::expm1(-y)
                               : (L + 1.0) / std::expm1(y);
  const double bottom = 1.0 / std::expm1(x);  // 1 / (lambda - 1)
  return 1.0 + (top - bottom) / L;
}

std::vector<double> expected_frequencies_numeric(const ChainModel& chain,
                                                 const StationaryDistribution& pi) {
  if (pi.pi.size() != chain.size()) fail(ErrorCode::invalid_argument, "pi has wrong length");
  const auto m = static_cast<std::size_t>(chain.forms());
  std::vector<double> out(m, 0.0);
  const double total = static_cast<double>(chain.total());
  for (std::size_t s = 0; s < chain.size(); ++s) {
    if (pi.pi[s] == 0.0) continue;
    const auto units = chain.state(s);
    for (std::size_t i = 0; i < m; ++i) {
      out[i] += pi.pi[s] * (static_cast<double>(units[i]) / total);
    }
  }
  return out;
}

std::vector<double> expected_frequencies_numeric(const ChainModel& chain,
                                                 const StationaryOptions& options) {
  return expected_frequencies_numeric(chain, stationary(chain, options));
}

double boosting_margin(int capacity, double nu) {
  return expected_frequency_closed_form(capacity, nu) - nu;
}

std::optional<double> analytic_expected_frequency(int forms, int capacity,
                                                  const SourceDistribution& source, int form,
                                                  const ChainOptions& options) {
  if (form < 0 || form >= forms) fail(ErrorCode::invalid_argument, "form index out of range");
  if (forms == 2) return expected_frequency_closed_form(capacity, source.probability(form));
  if (lattice_size(forms, capacity) > options.max_states) return std::nullopt;
  const auto chain = build_chain(forms, capacity, source, options);
  return expected_frequencies_numeric(chain)[static_cast<std::size_t>(form)];
}

}  // namespace freqboost
