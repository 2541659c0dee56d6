#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace egopo {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// One source's logged bandit-feedback data: contexts, chosen actions, the
// observed rewards, and (when the logger recorded them) action propensities.
struct SourceData {
  std::string source_id;
  Matrix contexts;           // n_s x p
  std::vector<int> actions;  // values in [0, d)
  Vector rewards;
  std::optional<Vector> logged_propensities;  // values in (0, 1]

  Eigen::Index size() const { return contexts.rows(); }
};

struct ObservationalDataset {
  std::vector<SourceData> sources;
  int context_dim = 0;   // p
  int action_count = 0;  // d

  Eigen::Index total_size() const;
  int source_index(const std::string& source_id) const;  // -1 if unknown

  // Throws std::invalid_argument on any shape, range, or consistency defect.
  void validate() const;
};

// Probability weights over the sources. Entries must be non-negative and sum
// to one within `kSumTolerance`.
struct MixtureWeights {
  Vector values;

  static constexpr double kSumTolerance = 1e-9;

  MixtureWeights() = default;
  explicit MixtureWeights(Vector v) : values(std::move(v)) {}
  MixtureWeights(std::initializer_list<double> v);

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index s) const { return values[s]; }

  bool is_valid() const;
  void validate() const;  // throws std::invalid_argument

  static MixtureWeights uniform(int num_sources);
  static MixtureWeights degenerate(int num_sources, int source);
};

// Empirical sample distribution (n_s / n) of a dataset.
MixtureWeights empirical_sample_distribution(const ObservationalDataset& dataset);

// Complete fixed-depth axis-aligned decision tree. Internal nodes are stored
// in level order in `splits` (2^depth - 1 entries), leaf actions left to
// right in `leaf_actions` (2^depth entries). Routing sends x left when
// x[feature] <= threshold; a -infinity threshold sends everything right.
struct TreePolicy {
  struct Split {
    int feature = 0;
    double threshold = 0.0;
  };

  int depth = 0;
  std::vector<Split> splits;
  std::vector<int> leaf_actions;

  static TreePolicy leaf(int action);

  int evaluate(const Eigen::Ref<const Vector>& context) const;

  int num_leaves() const { return 1 << depth; }
  bool structurally_valid(int context_dim, int action_count) const;
  void validate(int context_dim, int action_count) const;

  bool operator==(const TreePolicy& other) const;
};

// Canonical ordering used to break exact ties between equally good trees:
// leaf actions first, then split features, then split thresholds, each
// compared in level order.
bool policy_key_less(const TreePolicy& a, const TreePolicy& b);

}  // namespace egopo
