#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "freqboost/error.hpp"
#include "freqboost/learner.hpp"
#include "support/baselines.hpp"

using namespace freqboost;

namespace {

LearnerState with_units(int m, int L, std::vector<Units> u) {
  return LearnerState::create(m, L, InitialCondition::explicit_units(std::move(u)));
}

std::vector<Units> units_of(const LearnerState& s) {
  return {s.units().begin(), s.units().end()};
}

}  // namespace

TEST_CASE("new_learner uniform split") {
  auto two = new_learner(2, 10);
  CHECK(units_of(two) == std::vector<Units>{5, 5});
  CHECK(two.frequency(0) == 0.5);

  auto three = new_learner(3, 3);
  CHECK(units_of(three) == std::vector<Units>{2, 2, 2});
  for (int i = 0; i < 3; ++i) CHECK(three.frequency(i) == doctest::Approx(1.0 / 3));
}

TEST_CASE("new_learner rejects bad parameters") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;  // sentinel: nothing thrown
  };
  CHECK(code_of([] { new_learner(3, 4); }) == ErrorCode::invalid_argument);  // 8 % 3 != 0
  CHECK(code_of([] { new_learner(1, 4); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { new_learner(2, 1); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { with_units(2, 10, {3, 6}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { with_units(2, 10, {11, -1}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { with_units(3, 4, {4, 4}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("update examples") {
  CHECK(units_of(update(with_units(2, 10, {3, 7}), 0)) == std::vector<Units>{4, 6});
  CHECK(units_of(update(with_units(2, 10, {10, 0}), 0)) == std::vector<Units>{10, 0});
  CHECK(units_of(update(with_units(3, 4, {4, 2, 2}), 0)) == std::vector<Units>{6, 1, 1});
  CHECK(units_of(update(with_units(3, 4, {4, 0, 4}), 0)) == std::vector<Units>{5, 0, 3});
  CHECK_THROWS_AS(update(new_learner(2, 10), 2), Error);
  CHECK_THROWS_AS(update(new_learner(2, 10), -1), Error);
}

TEST_CASE("frequency examples") {
  CHECK(frequency(with_units(2, 10, {7, 3}), 0) == 0.7);
  CHECK(frequency(with_units(3, 4, {6, 1, 1}), 0) == 0.75);
  CHECK_THROWS_AS(frequency(new_learner(2, 10), 2), Error);
}

TEST_CASE("M = 2 generalized rule equals the +-1 saturating rule on every state") {
  for (int L = 2; L <= 20; ++L) {
    for (Units x1 = 0; x1 <= L; ++x1) {
      for (int j = 0; j < 2; ++j) {
        const auto [r1, r2] = testing::two_form_reference_step(x1, L - x1, L, j);
        const auto s = update(with_units(2, L, {x1, L - x1}), j);
        REQUIRE(s.units()[0] == r1);
        REQUIRE(s.units()[1] == r2);
      }
    }
  }
}

TEST_CASE("conservation and nonnegativity under random updates") {
  RngStream rng(11);
  for (int m = 2; m <= 5; ++m) {
    for (int L : {2, 3, 7, 12}) {
      auto s = LearnerState::create(
          m, L, InitialCondition::explicit_units([&] {
            std::vector<Units> u(static_cast<std::size_t>(m), 0);
            u.back() = static_cast<Units>(L) * (m - 1);
            return u;
          }()));
      for (int t = 0; t < 2000; ++t) {
        s.apply(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m)));
        const auto u = s.units();
        REQUIRE(std::accumulate(u.begin(), u.end(), Units{0}) == s.total());
        REQUIRE(std::all_of(u.begin(), u.end(), [](Units v) { return v >= 0; }));
      }
      const auto p = s.frequencies();
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("permutation equivariance") {
  RngStream rng(5);
  const std::vector<int> sigma{2, 0, 3, 1};  // form i is relabelled sigma[i]
  const std::vector<Units> start{9, 3, 6, 0};
  std::vector<Units> permuted(4);
  for (std::size_t i = 0; i < 4; ++i) permuted[static_cast<std::size_t>(sigma[i])] = start[i];
  auto a = with_units(4, 6, start);
  auto b = with_units(4, 6, permuted);
  for (int t = 0; t < 500; ++t) {
    const int j = static_cast<int>(rng.next_u64() % 4);
    a.apply(j);
    b.apply(sigma[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(b.units()[static_cast<std::size_t>(sigma[i])] == a.units()[i]);
    }
  }
}

TEST_CASE("absorption under a one-hot source") {
  for (int m = 2; m <= 4; ++m) {
    const int L = 6;
    for (int j = 0; j < m; ++j) {
      std::vector<double> nu(static_cast<std::size_t>(m), 0.0);
      nu[static_cast<std::size_t>(j)] = 1.0;
      SourceDistribution source(nu);
      RngStream rng(99);
      auto s = with_units(m, L, [&] {
        std::vector<Units> u(static_cast<std::size_t>(m), 0);
        u[static_cast<std::size_t>((j + 1) % m)] = static_cast<Units>(L) * (m - 1);
        return u;
      }());
      int t = 0;
      while (s.frequency(j) < 1.0) {
        s.apply(source.emit(rng));
        ++t;
      }
      CHECK(t <= L * (m - 1));
      for (int k = 0; k < 50; ++k) {
        s.apply(source.emit(rng));
        REQUIRE(s.frequency(j) == 1.0);
      }
    }
  }
}

TEST_CASE("source validation and normalization") {
  CHECK_THROWS_AS(SourceDistribution({0.5, 0.6}), Error);
  CHECK_THROWS_AS(SourceDistribution({-0.1, 1.1}), Error);
  CHECK_THROWS_AS(SourceDistribution({1.0}), Error);
  SourceDistribution nearly({0.3, 0.7 + 5e-10});
  CHECK(nearly.probability(0) + nearly.probability(1) == doctest::Approx(1.0).epsilon(1e-15));
  const auto split = SourceDistribution::dominant_with_equal_split(3, 0.4);
  CHECK(split.probability(1) == doctest::Approx(0.3));
  CHECK(split.probability(2) == doctest::Approx(0.3));
}

TEST_CASE("emit: degenerate sources") {
  RngStream rng(1);
  SourceDistribution first({1.0, 0.0});
  SourceDistribution third({0.0, 0.0, 1.0});
  SourceDistribution skip({0.5, 0.0, 0.5});
  for (int i = 0; i < 10'000; ++i) {
    REQUIRE(emit(first, rng) == 0);
    REQUIRE(emit(third, rng) == 2);
    REQUIRE(emit(skip, rng) != 1);
  }
}

TEST_CASE("emit: law of large numbers at nu = (0.7, 0.3)") {
  RngStream rng(2024);
  SourceDistribution source({0.7, 0.3});
  constexpr int n = 1'000'000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += emit(source, rng) == 0;
  CHECK(std::abs(static_cast<double>(ones) / n - 0.7) <= 0.002);
}

TEST_CASE("strawman baselines: A2 matches frequencies, the learner boosts") {
  RngStream rng(8);
  SourceDistribution source({0.7, 0.3});
  std::vector<int> input;
  for (int i = 0; i < 200'000; ++i) input.push_back(source.emit(rng));

  CHECK(testing::first_form_learner(input) == input.front());
  CHECK(testing::frequency_matching_learner(input, 2)[0] == doctest::Approx(0.7).epsilon(0.01));

  auto s = new_learner(2, 20);
  double avg = 0.0;
  for (std::size_t t = 0; t < input.size(); ++t) {
    s.apply(input[t]);
    if (t >= 10'000) avg += s.frequency(0);
  }
  avg /= static_cast<double>(input.size() - 10'000);
  CHECK(avg > 0.9);
}
