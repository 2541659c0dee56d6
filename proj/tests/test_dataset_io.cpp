#include "egopo/dataset_io.hpp"

#include "egopo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

using namespace egopo;
using testing::make_matrix;
using testing::make_vector;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/egopo_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& text) const {
    std::ofstream out(path);
    out << text;
  }
};

}  // namespace

TEST_CASE("minimal two-source file loads") {
  TempFile file("min.csv");
  file.write("source,x0,action,reward\nA,0.5,0,1.0\nB,-0.25,1,2.5\n");
  const auto dataset = load_dataset(file.path);
  CHECK(dataset.sources.size() == 2);
  CHECK(dataset.context_dim == 1);
  CHECK(dataset.action_count == 2);
  CHECK(dataset.total_size() == 2);
  CHECK(dataset.sources[0].source_id == "A");
  CHECK(dataset.sources[1].source_id == "B");
  CHECK(dataset.sources[0].contexts(0, 0) == 0.5);
  CHECK(dataset.sources[1].rewards[0] == 2.5);
  CHECK_FALSE(dataset.sources[0].logged_propensities.has_value());
}

TEST_CASE("source rows are grouped in first-appearance order") {
  TempFile file("order.csv");
  file.write("source,x0,action,reward\nB,1,0,0\nA,2,1,0\nB,3,0,0\n");
  const auto dataset = load_dataset(file.path);
  REQUIRE(dataset.sources.size() == 2);
  CHECK(dataset.sources[0].source_id == "B");
  CHECK(dataset.sources[0].size() == 2);
  CHECK(dataset.sources[0].contexts(1, 0) == 3.0);
}

TEST_CASE("zero propensity error names the offending row") {
  TempFile file("prop.csv");
  std::string text = "source,x0,action,reward,propensity\n";
  for (int i = 1; i <= 4; ++i) text += "A," + std::to_string(i) + ",0,1.0,0.5\n";
  text += "A,5,0,1.0,0.0\n";
  file.write(text);
  try {
    load_dataset(file.path);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& error) {
    CHECK(std::string(error.what()).find("row 5") != std::string::npos);
  }
}

TEST_CASE("malformed rows are rejected with row numbers") {
  TempFile file("bad.csv");
  file.write("source,x0,action,reward\nA,1.0,0\n");
  CHECK_THROWS_WITH_AS(load_dataset(file.path), doctest::Contains("row 1"),
                       std::invalid_argument);

  file.write("source,x0,action,reward\nA,abc,0,1.0\n");
  CHECK_THROWS_AS(load_dataset(file.path), std::invalid_argument);

  file.write("source,x0,action,reward\nA,1.0,-1,1.0\n");
  CHECK_THROWS_WITH_AS(load_dataset(file.path), doctest::Contains("out of range"),
                       std::invalid_argument);

  file.write("source,x0,action,reward\nA,1.0,3,1.0\n");
  CHECK_THROWS_AS(load_dataset(file.path, 2), std::invalid_argument);
}

TEST_CASE("save then load reproduces every field bit for bit") {
  ObservationalDataset dataset;
  dataset.context_dim = 2;
  dataset.action_count = 2;
  Xoshiro256pp rng(11);
  for (int s = 0; s < 2; ++s) {
    SourceData source;
    source.source_id = "src" + std::to_string(s);
    source.contexts.resize(5, 2);
    source.rewards.resize(5);
    Vector propensities(5);
    for (int i = 0; i < 5; ++i) {
      source.contexts(i, 0) = rng.uniform(-1.0, 1.0);
      source.contexts(i, 1) = rng.uniform(-1.0, 1.0);
      source.actions.push_back(static_cast<int>(rng.uniform_int(2)));
      source.rewards[i] = rng.gaussian(0.0, 3.0);
      propensities[i] = 0.25 + 0.5 * rng.uniform01();
    }
    source.logged_propensities = propensities;
    dataset.sources.push_back(std::move(source));
  }

  TempFile file("roundtrip.csv");
  save_dataset(dataset, file.path);
  const auto loaded = load_dataset(file.path);
  REQUIRE(loaded.sources.size() == dataset.sources.size());
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& a = dataset.sources[s];
    const auto& b = loaded.sources[s];
    CHECK(a.source_id == b.source_id);
    CHECK(a.actions == b.actions);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(a.contexts(i, 0) == b.contexts(i, 0));
      CHECK(a.contexts(i, 1) == b.contexts(i, 1));
      CHECK(a.rewards[i] == b.rewards[i]);
      CHECK((*a.logged_propensities)[i] == (*b.logged_propensities)[i]);
    }
  }
}

TEST_CASE("policy json round trip, including the -inf sentinel") {
  TreePolicy policy;
  policy.depth = 2;
  policy.splits = {{0, 0.125}, {1, -std::numeric_limits<double>::infinity()}, {2, -3.5}};
  policy.leaf_actions = {0, 1, 1, 0};
  const auto text = policy_to_json(policy);
  const auto loaded = policy_from_json(text);
  CHECK(loaded == policy);

  const auto leaf = policy_from_json(policy_to_json(TreePolicy::leaf(1)));
  CHECK(leaf.depth == 0);
  CHECK(leaf.leaf_actions == std::vector<int>{1});
}

TEST_CASE("policy json rejects wrong node counts") {
  CHECK_THROWS_AS(policy_from_json(R"({"depth":1,"nodes":[{"action":0}]})"),
                  std::invalid_argument);
}

TEST_CASE("format_double round trips exactly") {
  Xoshiro256pp rng(3);
  for (int i = 0; i < 200; ++i) {
    const double value = rng.gaussian(0.0, 1e3);
    CHECK(std::stod(format_double(value)) == value);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}
