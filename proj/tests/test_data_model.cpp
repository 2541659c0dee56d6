#include "egopo/data_model.hpp"

#include "egopo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <limits>
#include <stdexcept>

using namespace egopo;
using testing::make_matrix;
using testing::make_vector;

namespace {

TreePolicy depth1(int feature, double threshold, int left, int right) {
  TreePolicy policy;
  policy.depth = 1;
  policy.splits = {{feature, threshold}};
  policy.leaf_actions = {left, right};
  return policy;
}

}  // namespace

TEST_CASE("depth-0 policy returns its leaf action for any context") {
  const auto policy = TreePolicy::leaf(1);
  CHECK(policy.evaluate(make_vector({0.3})) == 1);
  CHECK(policy.evaluate(make_vector({-5.0, 4.0})) == 1);
}

TEST_CASE("depth-1 routing sends x <= threshold left") {
  const auto policy = depth1(0, 0.5, 0, 1);
  CHECK(policy.evaluate(make_vector({0.2})) == 0);
  CHECK(policy.evaluate(make_vector({0.7})) == 1);
}

TEST_CASE("boundary context routes left") {
  const auto policy = depth1(0, 0.5, 0, 1);
  CHECK(policy.evaluate(make_vector({0.5})) == 0);
}

TEST_CASE("evaluation is pure") {
  const auto policy = depth1(1, 0.0, 1, 0);
  const auto context = make_vector({0.4, -0.1});
  const int first = policy.evaluate(context);
  for (int i = 0; i < 10; ++i) CHECK(policy.evaluate(context) == first);
}

TEST_CASE("feature index beyond context dimension is rejected") {
  const auto policy = depth1(3, 0.0, 0, 1);
  CHECK_THROWS_AS(policy.evaluate(make_vector({0.0, 1.0})), std::invalid_argument);
}

TEST_CASE("every random context reaches exactly one valid leaf") {
  Xoshiro256pp rng(7);
  TreePolicy policy;
  policy.depth = 2;
  policy.splits = {{0, 0.1}, {1, -0.4}, {0, 0.8}};
  policy.leaf_actions = {2, 0, 1, 2};
  for (int i = 0; i < 500; ++i) {
    const auto context = make_vector({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
    const int action = policy.evaluate(context);
    CHECK(action >= 0);
    CHECK(action <= 2);
    // Route by hand and compare.
    int leaf;
    if (context[0] <= 0.1) {
      leaf = context[1] <= -0.4 ? 0 : 1;
    } else {
      leaf = context[0] <= 0.8 ? 2 : 3;
    }
    CHECK(action == policy.leaf_actions[static_cast<std::size_t>(leaf)]);
  }
}

TEST_CASE("structural validation catches malformed trees") {
  TreePolicy policy;
  policy.depth = 1;
  policy.splits = {{0, 0.0}};
  policy.leaf_actions = {0};  // needs two leaves
  CHECK_FALSE(policy.structurally_valid(2, 2));
  policy.leaf_actions = {0, 1};
  CHECK(policy.structurally_valid(2, 2));
  CHECK_FALSE(policy.structurally_valid(2, 1));  // action 1 out of range
}

TEST_CASE("mixture weights validation") {
  CHECK(MixtureWeights{0.5, 0.5}.is_valid());
  CHECK(MixtureWeights{1.0}.is_valid());
  CHECK_FALSE(MixtureWeights{0.6, 0.6}.is_valid());
  CHECK_FALSE(MixtureWeights{-0.1, 1.1}.is_valid());
  CHECK_FALSE(MixtureWeights().is_valid());
  CHECK(MixtureWeights::uniform(4).is_valid());
  CHECK(MixtureWeights::degenerate(3, 2).is_valid());
  CHECK(MixtureWeights::degenerate(3, 2)[2] == 1.0);
  CHECK_THROWS_AS((MixtureWeights{0.2, 0.2}.validate()), std::invalid_argument);
}

TEST_CASE("dataset validation catches range and shape defects") {
  ObservationalDataset dataset;
  dataset.context_dim = 1;
  dataset.action_count = 2;
  SourceData source;
  source.source_id = "a";
  source.contexts = make_matrix({{0.0}, {1.0}});
  source.actions = {0, 1};
  source.rewards = make_vector({1.0, 2.0});
  dataset.sources.push_back(source);
  CHECK_NOTHROW(dataset.validate());

  dataset.sources[0].actions = {0, 2};
  CHECK_THROWS_AS(dataset.validate(), std::invalid_argument);
  dataset.sources[0].actions = {0, 1};

  dataset.sources[0].logged_propensities = make_vector({0.5, 1.5});
  CHECK_THROWS_AS(dataset.validate(), std::invalid_argument);
  dataset.sources[0].logged_propensities = make_vector({0.5, 1.0});
  CHECK_NOTHROW(dataset.validate());
}

TEST_CASE("policy key ordering prefers actions, then features, then thresholds") {
  const auto base = depth1(0, 0.5, 0, 1);
  CHECK(policy_key_less(depth1(0, 0.5, 0, 0), base));   // lower action
  CHECK(policy_key_less(base, depth1(1, 0.5, 0, 1)));   // lower feature wins
  CHECK(policy_key_less(depth1(0, 0.2, 0, 1), base));   // lower threshold
  CHECK(policy_key_less(depth1(1, 0.1, 0, 0), base));   // actions dominate feature
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(policy_key_less(depth1(0, -inf, 0, 1), base));  // -inf sorts first
  CHECK_FALSE(policy_key_less(base, base));
}
