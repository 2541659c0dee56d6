#pragma once

#include "egopo/data_model.hpp"
#include "egopo/simulator.hpp"
#include "egopo/tree_oracle.hpp"

#include <cmath>
#include <vector>

namespace egopo::testing {

inline Matrix make_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Brute-force maximum objective over every enumerated tree; the independent
// oracle for exactness checks.
inline double brute_force_max(const WeightedExamples& examples, int depth, int action_count,
                              std::uint64_t budget = 5'000'000) {
  double best = -std::numeric_limits<double>::infinity();
  for_each_policy(examples.contexts, depth, action_count, budget, [&](const TreePolicy& policy) {
    best = std::max(best, evaluate_objective(examples, policy));
  });
  return best;
}

// Exact mixture value of a tree policy under the block-linear simulator with
// contexts uniform on [-1,1]^p: every leaf is an axis-aligned box, so the
// value is sum over leaves of P(box) * mean-context(box) restricted to the
// action block, dotted with theta.
inline double analytic_policy_value(const TreePolicy& policy,
                                    const std::vector<SourceGenParams>& dgp,
                                    const MixtureWeights& lambda) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < lambda.size(); ++s) {
    if (lambda[s] == 0.0) continue;
    const auto& params = dgp[static_cast<std::size_t>(s)];
    const int p = params.context_dim();
    const int leaves = policy.num_leaves();
    double source_value = 0.0;
    for (int leaf = 0; leaf < leaves; ++leaf) {
      // Walk the root-to-leaf path, intersecting per-feature intervals.
      std::vector<double> lo(static_cast<std::size_t>(p), -1.0);
      std::vector<double> hi(static_cast<std::size_t>(p), 1.0);
      int node = 0;
      for (int level = policy.depth - 1; level >= 0; --level) {
        const bool go_right = (leaf >> level) & 1;
        const auto& split = policy.splits[static_cast<std::size_t>(node)];
        auto& bound_lo = lo[static_cast<std::size_t>(split.feature)];
        auto& bound_hi = hi[static_cast<std::size_t>(split.feature)];
        const double tau = split.threshold;
        if (go_right) {
          bound_lo = std::max(bound_lo, std::min(std::max(tau, -1.0), 1.0));
          node = 2 * node + 2;
        } else {
          bound_hi = std::min(bound_hi, std::max(std::min(tau, 1.0), -1.0));
          node = 2 * node + 1;
        }
      }
      double volume_fraction = 1.0;
      for (int j = 0; j < p; ++j) {
        volume_fraction *= std::max(0.0, hi[static_cast<std::size_t>(j)] -
                                             lo[static_cast<std::size_t>(j)]) / 2.0;
      }
      if (volume_fraction == 0.0) continue;
      const int action = policy.leaf_actions[static_cast<std::size_t>(leaf)];
      double mean_dot = 0.0;
      for (int j = 0; j < params.q; ++j) {
        const int index = action * params.q + j;
        const double mid = 0.5 * (lo[static_cast<std::size_t>(index)] +
                                  hi[static_cast<std::size_t>(index)]);
        mean_dot += mid * params.theta[j];
      }
      source_value += volume_fraction * mean_dot;
    }
    total += lambda[s] * source_value;
  }
  return total;
}

}  // namespace egopo::testing
