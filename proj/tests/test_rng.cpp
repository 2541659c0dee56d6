#include "egopo/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace egopo;

TEST_CASE("identical seeds give identical streams") {
  Xoshiro256pp a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("different stream derivations decorrelate") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 8; ++s) {
    for (std::uint64_t t = 0; t < 8; ++t) seeds.insert(derive_seed(123, s, t));
  }
  CHECK(seeds.size() == 64);
}

TEST_CASE("uniform01 stays in [0, 1) and has the right mean") {
  Xoshiro256pp rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform_int covers the range uniformly") {
  Xoshiro256pp rng(9);
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(5))];
  for (int c : counts) CHECK(std::abs(c - n / 5) < 500);
}

TEST_CASE("gaussian moments") {
  Xoshiro256pp rng(17);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.gaussian();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.03);
}

TEST_CASE("simplex samples are valid and exchangeable") {
  Xoshiro256pp rng(23);
  std::vector<double> mean(3, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto point = sample_simplex_uniform(rng, 3);
    double total = 0.0;
    for (double v : point) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j) mean[j] += point[j];
  }
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(mean[j] / n == doctest::Approx(1.0 / 3).epsilon(0.02));
  }
}
