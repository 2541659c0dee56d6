#include "egopo/tree_oracle.hpp"

#include "egopo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

using namespace egopo;
using testing::brute_force_max;
using testing::make_matrix;
using testing::make_vector;

namespace {

WeightedExamples unit_case() {
  WeightedExamples examples;
  examples.contexts = make_matrix({{0.0}, {1.0}});
  examples.score_rows = make_matrix({{1.0, 0.0}, {0.0, 2.0}});
  examples.weights = make_vector({1.0, 1.0});
  return examples;
}

WeightedExamples random_instance(Xoshiro256pp& rng, int max_n, int p, int d,
                                 bool integer_scores = false) {
  const int n = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_n)));
  WeightedExamples examples;
  examples.contexts.resize(n, p);
  examples.score_rows.resize(n, d);
  examples.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) examples.contexts(i, j) = rng.uniform(-1.0, 1.0);
    for (int a = 0; a < d; ++a) {
      examples.score_rows(i, a) = integer_scores
                                      ? static_cast<double>(rng.uniform_int(21)) - 10.0
                                      : rng.uniform(-1.0, 1.0);
    }
    examples.weights[i] = integer_scores ? static_cast<double>(rng.uniform_int(4)) + 1.0
                                         : rng.uniform01();
  }
  return examples;
}

}  // namespace

TEST_CASE("depth-1 unit case splits between the two points") {
  const auto solution = solve_opo(unit_case(), 1);
  CHECK(solution.objective == 3.0);
  CHECK(solution.policy.splits[0].feature == 0);
  CHECK(solution.policy.splits[0].threshold == 0.5);
  CHECK(solution.policy.leaf_actions == std::vector<int>{0, 1});
}

TEST_CASE("depth-0 reduces to the best column sum") {
  const auto solution = solve_opo(unit_case(), 0);
  CHECK(solution.objective == 2.0);
  CHECK(solution.policy.depth == 0);
  CHECK(solution.policy.leaf_actions == std::vector<int>{1});
}

TEST_CASE("objective equals re-evaluation of the returned policy") {
  Xoshiro256pp rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const auto examples = random_instance(rng, 15, 2, 2);
    for (int depth = 0; depth <= 2; ++depth) {
      const auto solution = solve_opo(examples, depth);
      const double re = evaluate_objective(examples, solution.policy);
      CHECK(std::abs(solution.objective - re) <=
            1e-9 * std::max(1.0, std::abs(solution.objective)));
    }
  }
}

TEST_CASE("exhaustive search is exact against enumeration on tiny instances") {
  Xoshiro256pp rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const int p = 1 + static_cast<int>(rng.uniform_int(2));
    const int depth = static_cast<int>(rng.uniform_int(3));
    const auto examples = random_instance(rng, 14, p, 2);
    const auto solution = solve_opo(examples, depth);
    const double best = brute_force_max(examples, depth, 2);
    CHECK(solution.objective == best);
  }
}

TEST_CASE("depth-3 stays exact on very small instances") {
  Xoshiro256pp rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto examples = random_instance(rng, 5, 1, 2);
    const auto solution = solve_opo(examples, 3);
    CHECK(solution.objective == brute_force_max(examples, 3, 2));
  }
}

TEST_CASE("duplicating an example equals doubling its weight") {
  Xoshiro256pp rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const auto examples = random_instance(rng, 10, 2, 2, /*integer_scores=*/true);
    const auto n = examples.contexts.rows();

    WeightedExamples doubled = examples;
    doubled.weights[0] *= 2.0;

    WeightedExamples duplicated;
    duplicated.contexts.resize(n + 1, examples.contexts.cols());
    duplicated.score_rows.resize(n + 1, examples.score_rows.cols());
    duplicated.weights.resize(n + 1);
    duplicated.contexts.topRows(n) = examples.contexts;
    duplicated.score_rows.topRows(n) = examples.score_rows;
    duplicated.weights.head(n) = examples.weights;
    duplicated.contexts.row(n) = examples.contexts.row(0);
    duplicated.score_rows.row(n) = examples.score_rows.row(0);
    duplicated.weights[n] = examples.weights[0];

    for (int depth = 0; depth <= 2; ++depth) {
      CHECK(solve_opo(doubled, depth).objective == solve_opo(duplicated, depth).objective);
    }
  }
}

TEST_CASE("positive scaling and per-example shifts keep the argmax") {
  Xoshiro256pp rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto examples = random_instance(rng, 10, 2, 2, /*integer_scores=*/true);
    WeightedExamples transformed = examples;
    for (Eigen::Index i = 0; i < transformed.contexts.rows(); ++i) {
      const double shift = static_cast<double>(rng.uniform_int(7)) - 3.0;
      for (Eigen::Index a = 0; a < transformed.score_rows.cols(); ++a) {
        transformed.score_rows(i, a) = 3.0 * transformed.score_rows(i, a) + shift;
      }
    }
    for (int depth = 0; depth <= 2; ++depth) {
      const auto base = solve_opo(examples, depth);
      const auto scaled = solve_opo(transformed, depth);
      CHECK(base.policy == scaled.policy);
    }
  }
}

TEST_CASE("solve is deterministic") {
  Xoshiro256pp rng(91);
  const auto examples = random_instance(rng, 20, 2, 2);
  const auto a = solve_opo(examples, 2);
  const auto b = solve_opo(examples, 2);
  CHECK(a.policy == b.policy);
  CHECK(a.objective == b.objective);
}

TEST_CASE("exact ties resolve to lowest action, feature, threshold") {
  WeightedExamples examples;
  examples.contexts = make_matrix({{0.0, 0.0}, {1.0, 1.0}});
  examples.score_rows = Matrix::Zero(2, 2);
  examples.weights = make_vector({1.0, 1.0});

  const auto flat = solve_opo(examples, 1);
  CHECK(flat.objective == 0.0);
  CHECK(flat.policy.leaf_actions == std::vector<int>{0, 0});
  CHECK(flat.policy.splits[0].feature == 0);
  CHECK(flat.policy.splits[0].threshold == -std::numeric_limits<double>::infinity());

  // Both actions of example 1 are equally good: lowest action must win on
  // the side that contains it.
  examples.score_rows = make_matrix({{1.0, 0.0}, {2.0, 2.0}});
  const auto tied = solve_opo(examples, 1);
  CHECK(tied.objective == 3.0);
  CHECK(tied.policy.leaf_actions == std::vector<int>{0, 0});
}

TEST_CASE("searcher reuse matches one-shot solves") {
  Xoshiro256pp rng(13);
  const auto examples = random_instance(rng, 20, 2, 2);
  OpoSearcher searcher(examples.contexts, examples.score_rows);
  Vector other = examples.weights;
  other.reverseInPlace();
  for (int depth = 0; depth <= 2; ++depth) {
    CHECK(searcher.solve(examples.weights, depth).objective ==
          solve_opo(examples, depth).objective);
    WeightedExamples flipped{examples.contexts, examples.score_rows, other};
    CHECK(searcher.solve(other, depth).objective == solve_opo(flipped, depth).objective);
  }
}

TEST_CASE("enumeration covers constants and distinct split behaviors") {
  const auto contexts = make_matrix({{0.0}, {1.0}});
  const auto constants = enumerate_policies(contexts, 0, 2);
  CHECK(constants.size() == 2);

  const auto trees = enumerate_policies(contexts, 1, 2);
  // One feature, two candidate thresholds (-inf and the midpoint), four
  // leaf-action pairs.
  CHECK(trees.size() == 8);
  std::set<std::pair<int, int>> behaviors;
  for (const auto& tree : trees) {
    behaviors.insert({tree.evaluate(make_vector({0.0})), tree.evaluate(make_vector({1.0}))});
  }
  CHECK(behaviors.size() == 4);  // every assignment of the two points
}

TEST_CASE("enumeration budget guard") {
  const auto contexts = make_matrix({{0.0}, {1.0}, {2.0}});
  CHECK_THROWS_WITH_AS(enumerate_policies(contexts, 1, 2, 10), doctest::Contains("budget"),
                       std::runtime_error);
}

TEST_CASE("oracle input validation") {
  WeightedExamples empty;
  empty.contexts.resize(0, 1);
  empty.score_rows.resize(0, 2);
  empty.weights.resize(0);
  CHECK_THROWS_AS(solve_opo(empty, 1), std::invalid_argument);

  auto examples = unit_case();
  examples.score_rows(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_opo(examples, 1), std::invalid_argument);

  auto negative = unit_case();
  negative.weights[0] = -1.0;
  CHECK_THROWS_AS(solve_opo(negative, 1), std::invalid_argument);
}
