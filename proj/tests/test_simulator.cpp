#include "egopo/simulator.hpp"

#include "egopo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace egopo;

TEST_CASE("sample_params is deterministic in the seed") {
  const auto a = sample_params(3, 4, 2, 5.0, 77);
  const auto b = sample_params(3, 4, 2, 5.0, 77);
  REQUIRE(a.size() == 3);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].theta == b[s].theta);
  }
  const auto c = sample_params(3, 4, 2, 5.0, 78);
  CHECK(a[0].theta != c[0].theta);
}

TEST_CASE("sampled parameter variance matches the configured 5.0") {
  // 10,000 coordinates drawn with sigma_theta_sq = 5.
  const auto params = sample_params(2500, 4, 2, 5.0, 2024);
  double sum = 0.0, sum_sq = 0.0;
  int count = 0;
  for (const auto& p : params) {
    for (int j = 0; j < p.q; ++j) {
      sum += p.theta[j];
      sum_sq += p.theta[j] * p.theta[j];
      ++count;
    }
  }
  CHECK(count == 10000);
  const double mean = sum / count;
  const double variance = sum_sq / count - mean * mean;
  CHECK(variance > 4.5);
  CHECK(variance < 5.5);
}

TEST_CASE("zero parameter variance gives zero theta") {
  const auto params = sample_params(2, 4, 2, 0.0, 5);
  for (const auto& p : params) CHECK(p.theta.isZero(0.0));
}

TEST_CASE("noiseless rewards equal the block-linear mean") {
  auto params = sample_params(1, 3, 2, 5.0, 11).front();
  params.sigma_sq = 0.0;
  const auto source = generate_source(params, 50, 123);
  for (int i = 0; i < 50; ++i) {
    const int action = source.observable.actions[static_cast<std::size_t>(i)];
    const double expected =
        params.mean_reward(source.observable.contexts.row(i).transpose(), action);
    CHECK(source.observable.rewards[i] == expected);
    for (int a = 0; a < 2; ++a) {
      CHECK(source.potential_outcomes(i, a) == source.true_mu(i, a));
    }
  }
}

TEST_CASE("contexts stay inside the unit cube and propensities are uniform") {
  const auto params = sample_params(1, 4, 2, 5.0, 3).front();
  const auto source = generate_source(params, 2000, 99);
  for (int i = 0; i < 2000; ++i) {
    for (int j = 0; j < params.context_dim(); ++j) {
      CHECK(source.observable.contexts(i, j) >= -1.0);
      CHECK(source.observable.contexts(i, j) <= 1.0);
    }
    CHECK((*source.observable.logged_propensities)[i] == 0.5);
    const int action = source.observable.actions[static_cast<std::size_t>(i)];
    CHECK(source.observable.rewards[i] == source.potential_outcomes(i, action));
  }
}

TEST_CASE("action frequencies concentrate around one half") {
  const auto params = sample_params(1, 2, 2, 5.0, 31).front();
  const int n = 10000;
  const auto source = generate_source(params, n, 8);
  int ones = 0;
  for (int a : source.observable.actions) ones += a;
  const double freq = static_cast<double>(ones) / n;
  CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("generation is reproducible bit for bit") {
  const auto params = sample_params(1, 4, 2, 5.0, 1).front();
  const auto a = generate_source(params, 100, 55);
  const auto b = generate_source(params, 100, 55);
  CHECK(a.observable.contexts == b.observable.contexts);
  CHECK(a.observable.actions == b.observable.actions);
  CHECK(a.observable.rewards == b.observable.rewards);
  CHECK(a.potential_outcomes == b.potential_outcomes);
}

TEST_CASE("action stream is independent of the outcome stream") {
  // Actions must not change when the noise level changes, and contexts and
  // potential outcomes must not change when only actions would (structural
  // unconfoundedness: disjoint sub-streams).
  auto params = sample_params(1, 2, 2, 5.0, 12).front();
  auto noisy = params;
  noisy.sigma_sq = 4.0;
  const auto a = generate_source(params, 200, 7);
  const auto b = generate_source(noisy, 200, 7);
  CHECK(a.observable.actions == b.observable.actions);
  CHECK(a.observable.contexts == b.observable.contexts);
  CHECK(a.true_mu == b.true_mu);
}

TEST_CASE("allocate_sizes splits evenly with remainder at low indices") {
  CHECK(allocate_sizes(300, 3) == std::vector<int>{100, 100, 100});
  CHECK(allocate_sizes(301, 3) == std::vector<int>{101, 100, 100});
  CHECK(allocate_sizes(5, 3) == std::vector<int>{2, 2, 1});
  CHECK_THROWS_AS(allocate_sizes(2, 3), std::invalid_argument);
}

TEST_CASE("make_dataset validates and names sources") {
  const auto params = sample_params(2, 2, 2, 5.0, 40);
  const auto sims = simulate_sources(params, {10, 12}, 77);
  const auto dataset = make_dataset(sims);
  CHECK(dataset.sources.size() == 2);
  CHECK(dataset.sources[0].source_id == "s0");
  CHECK(dataset.sources[1].size() == 12);
  CHECK(dataset.context_dim == 4);
}
