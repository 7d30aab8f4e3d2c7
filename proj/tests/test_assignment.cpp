#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "herdtrack/assignment.hpp"
#include "helpers.hpp"

using namespace herdtrack;

TEST_CASE("assignment on the worked examples") {
  AssignmentResult r = hungarian({{0, 1}, {1, 0}});
  REQUIRE(r.mapping == std::vector<int>{0, 1});
  REQUIRE(r.total_cost == 0.0);

  AssignmentResult r2 = hungarian({{4, 1}, {2, 3}});
  REQUIRE(r2.mapping == std::vector<int>{1, 0});
  REQUIRE(r2.total_cost == 3.0);

  AssignmentResult r3 = hungarian({{1, 2, 3}, {2, 4, 6}, {3, 6, 9}});
  REQUIRE(r3.mapping == std::vector<int>{2, 1, 0});
  REQUIRE(r3.total_cost == 10.0);
}

TEST_CASE("assignment validates its input") {
  REQUIRE_THROWS_AS(hungarian({{1, 2}, {3}}), std::invalid_argument);
  REQUIRE_THROWS_AS(
      hungarian({{std::numeric_limits<double>::quiet_NaN(), 1}, {1, 1}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      hungarian({{std::numeric_limits<double>::infinity(), 1}, {1, 1}}),
      std::invalid_argument);
  REQUIRE(hungarian({}).mapping.empty());
}

TEST_CASE("rectangular matrices report min(rows, cols) pairs") {
  // 2 rows, 3 cols: both rows matched
  AssignmentResult r = hungarian({{5, 1, 9}, {1, 5, 9}});
  REQUIRE(r.mapping == std::vector<int>{1, 0});
  REQUIRE(r.total_cost == 2.0);

  // 3 rows, 2 cols: one row left unmatched
  AssignmentResult r2 = hungarian({{1, 9}, {9, 1}, {9, 9}});
  int matched = 0;
  for (int m : r2.mapping)
    if (m >= 0) ++matched;
  REQUIRE(matched == 2);
  REQUIRE(r2.mapping[2] == -1);
  REQUIRE(r2.total_cost == 2.0);
}

TEST_CASE("assignment equals the brute-force permutation minimum") {
  testutil::TestRng rng(4242);
  for (int it = 0; it < 120; ++it) {
    int n = rng.uniform_int(1, 6);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (auto& row : cost)
      for (auto& c : row)
        c = std::floor(rng.uniform() * 2000.0 - 1000.0) / 10.0;
    AssignmentResult r = hungarian(cost);
    double expected = testutil::brute_force_assignment(cost);
    REQUIRE(r.total_cost == Catch::Approx(expected).margin(1e-9));
    // mapping is a permutation
    std::vector<bool> used(n, false);
    for (int m : r.mapping) {
      REQUIRE(m >= 0);
      REQUIRE(m < n);
      REQUIRE_FALSE(used[m]);
      used[m] = true;
    }
  }
}

TEST_CASE("rectangular assignment matches padded brute force") {
  testutil::TestRng rng(515);
  for (int it = 0; it < 60; ++it) {
    int rows = rng.uniform_int(1, 5), cols = rng.uniform_int(1, 5);
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    double max_abs = 1.0;
    for (auto& row : cost)
      for (auto& c : row) {
        c = std::floor(rng.uniform() * 200.0) / 10.0;
        max_abs = std::max(max_abs, std::fabs(c));
      }
    int n = std::max(rows, cols);
    std::vector<std::vector<double>> padded(
        n, std::vector<double>(n, 10.0 * max_abs));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) padded[i][j] = cost[i][j];
    double expected = testutil::brute_force_assignment(padded) -
                      10.0 * max_abs * (n - std::min(rows, cols));
    REQUIRE(hungarian(cost).total_cost == Catch::Approx(expected).margin(1e-9));
  }
}
