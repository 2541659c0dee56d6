#pragma once

#include "egopo/data_model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace egopo {

// Input to the policy optimization oracle: contexts, one score per action per
// example, and non-negative per-example weights.
struct WeightedExamples {
  Matrix contexts;    // N x p
  Matrix score_rows;  // N x d
  Vector weights;     // length N, entries >= 0
};

struct OracleSolution {
  TreePolicy policy;
  double objective = 0.0;  // sum_i weights[i] * score_rows(i, policy(x_i))
};

// Sum of weighted scores of the actions the policy picks, accumulated in
// example order. This is the arithmetic every objective in this module is
// reported in.
double evaluate_objective(const WeightedExamples& examples, const TreePolicy& policy);

// Exact search over all complete depth-k trees whose split thresholds are
// drawn from the canonical candidate set of each node's data: midpoints
// between consecutive sorted distinct feature values, plus a -infinity
// sentinel that routes everything right. Ties between equally good trees are
// broken by lowest leaf actions, then lowest features, then smallest
// thresholds (level order).
//
// A searcher caches per-feature sort orders of a fixed (contexts, scores)
// pair so that repeated solves under different example weights skip the
// O(p n log n) setup.
class OpoSearcher {
 public:
  OpoSearcher(Matrix contexts, Matrix scores);

  OracleSolution solve(const Vector& weights, int depth) const;

  Eigen::Index size() const { return contexts_.rows(); }
  const Matrix& contexts() const { return contexts_; }
  const Matrix& scores() const { return scores_; }

 private:
  Matrix contexts_;
  Matrix scores_;
  std::vector<std::vector<int>> order_;  // per feature, indices sorted by value
};

OracleSolution solve_opo(const WeightedExamples& examples, int depth);

// Enumerates depth-k trees over the canonical candidate thresholds of the
// given contexts; every distinct behavior class is represented (possibly more
// than once). Throws once more than `budget` trees would be produced.
std::vector<TreePolicy> enumerate_policies(const Matrix& contexts, int depth, int action_count,
                                           std::uint64_t budget = 200000);

// Streaming form of enumerate_policies, for callers that only fold over the
// trees (for example a brute-force maximum) and do not want the full list in
// memory.
void for_each_policy(const Matrix& contexts, int depth, int action_count, std::uint64_t budget,
                     const std::function<void(const TreePolicy&)>& visit);

}  // namespace egopo
