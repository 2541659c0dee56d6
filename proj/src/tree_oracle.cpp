#include "egopo/tree_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace egopo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Any tau in [lo, hi) separates lo (left) from hi (right); prefer the
// midpoint, falling back to lo when rounding collapses it onto hi.
double midpoint_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) * 0.5;
  if (!(mid >= lo) || mid >= hi) return lo;
  return mid;
}

TreePolicy merge_children(const TreePolicy::Split& root, const TreePolicy& left,
                          const TreePolicy& right) {
  TreePolicy tree;
  tree.depth = left.depth + 1;
  tree.splits.reserve((1u << tree.depth) - 1);
  tree.splits.push_back(root);
  for (int level = 0; level < left.depth; ++level) {
    const std::size_t begin = (1u << level) - 1;
    const std::size_t end = (2u << level) - 1;
    for (std::size_t i = begin; i < end; ++i) tree.splits.push_back(left.splits[i]);
    for (std::size_t i = begin; i < end; ++i) tree.splits.push_back(right.splits[i]);
  }
  tree.leaf_actions = left.leaf_actions;
  tree.leaf_actions.insert(tree.leaf_actions.end(), right.leaf_actions.begin(),
                           right.leaf_actions.end());
  return tree;
}

struct SearchResult {
  double objective = 0.0;
  TreePolicy policy;
  bool valid = false;
};

void consider(SearchResult& best, double objective, TreePolicy&& policy) {
  if (!best.valid || objective > best.objective ||
      (objective == best.objective && policy_key_less(policy, best.policy))) {
    best.objective = objective;
    best.policy = std::move(policy);
    best.valid = true;
  }
}

int lowest_argmax(const std::vector<double>& sums) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(sums.size()); ++a) {
    if (sums[static_cast<std::size_t>(a)] > sums[static_cast<std::size_t>(best)]) best = a;
  }
  return best;
}

class TreeSearch {
 public:
  TreeSearch(const Matrix& contexts, const Matrix& scaled,
             const std::vector<std::vector<int>>& order)
      : contexts_(contexts), scaled_(scaled), order_(order) {}

  SearchResult run(int depth) const {
    std::vector<char> mask(static_cast<std::size_t>(contexts_.rows()), 1);
    return search(mask, depth);
  }

 private:
  SearchResult search(const std::vector<char>& mask, int depth) const {
    if (depth == 0) return leaf_solution(mask);

    const int p = static_cast<int>(contexts_.cols());
    const int d = static_cast<int>(scaled_.cols());
    SearchResult best;

    std::vector<int> sorted;
    std::vector<double> left_sums(static_cast<std::size_t>(d));
    std::vector<double> total_sums(static_cast<std::size_t>(d));
    std::vector<char> left_mask;
    std::vector<char> right_mask;

    for (int f = 0; f < p; ++f) {
      sorted.clear();
      for (int i : order_[static_cast<std::size_t>(f)]) {
        if (mask[static_cast<std::size_t>(i)]) sorted.push_back(i);
      }

      if (depth == 1) {
        std::fill(total_sums.begin(), total_sums.end(), 0.0);
        for (int i : sorted) {
          for (int a = 0; a < d; ++a) total_sums[static_cast<std::size_t>(a)] += scaled_(i, a);
        }
        std::fill(left_sums.begin(), left_sums.end(), 0.0);
        std::size_t moved = 0;
        double tau = kNegInf;
        while (true) {
          evaluate_depth1_split(f, tau, left_sums, total_sums, best);
          if (moved == sorted.size()) break;
          const double group_value = contexts_(sorted[moved], f);
          while (moved < sorted.size() && contexts_(sorted[moved], f) == group_value) {
            for (int a = 0; a < d; ++a) {
              left_sums[static_cast<std::size_t>(a)] += scaled_(sorted[moved], a);
            }
            ++moved;
          }
          if (moved == sorted.size()) break;  // all left == all right with swapped leaves
          tau = midpoint_threshold(group_value, contexts_(sorted[moved], f));
        }
      } else {
        left_mask.assign(mask.size(), 0);
        right_mask = mask;
        std::size_t moved = 0;
        double tau = kNegInf;
        while (true) {
          SearchResult left = search(left_mask, depth - 1);
          SearchResult right = search(right_mask, depth - 1);
          const double objective = left.objective + right.objective;
          if (!best.valid || objective >= best.objective) {
            consider(best, objective, merge_children({f, tau}, left.policy, right.policy));
          }
          if (moved == sorted.size()) break;
          const double group_value = contexts_(sorted[moved], f);
          while (moved < sorted.size() && contexts_(sorted[moved], f) == group_value) {
            left_mask[static_cast<std::size_t>(sorted[moved])] = 1;
            right_mask[static_cast<std::size_t>(sorted[moved])] = 0;
            ++moved;
          }
          if (moved == sorted.size()) break;
          tau = midpoint_threshold(group_value, contexts_(sorted[moved], f));
        }
      }
    }
    return best;
  }

  void evaluate_depth1_split(int feature, double tau, const std::vector<double>& left_sums,
                             const std::vector<double>& total_sums, SearchResult& best) const {
    const int d = static_cast<int>(scaled_.cols());
    int left_action = 0;
    int right_action = 0;
    double best_left = left_sums[0];
    double best_right = total_sums[0] - left_sums[0];
    for (int a = 1; a < d; ++a) {
      const double l = left_sums[static_cast<std::size_t>(a)];
      const double r = total_sums[static_cast<std::size_t>(a)] - l;
      if (l > best_left) {
        best_left = l;
        left_action = a;
      }
      if (r > best_right) {
        best_right = r;
        right_action = a;
      }
    }
    const double objective = best_left + best_right;
    if (best.valid && objective < best.objective) return;
    TreePolicy tree;
    tree.depth = 1;
    tree.splits = {{feature, tau}};
    tree.leaf_actions = {left_action, right_action};
    consider(best, objective, std::move(tree));
  }

  SearchResult leaf_solution(const std::vector<char>& mask) const {
    const int d = static_cast<int>(scaled_.cols());
    std::vector<double> sums(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index i = 0; i < scaled_.rows(); ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      for (int a = 0; a < d; ++a) sums[static_cast<std::size_t>(a)] += scaled_(i, a);
    }
    const int action = lowest_argmax(sums);
    SearchResult result;
    result.objective = sums[static_cast<std::size_t>(action)];
    result.policy = TreePolicy::leaf(action);
    result.valid = true;
    return result;
  }

  const Matrix& contexts_;
  const Matrix& scaled_;
  const std::vector<std::vector<int>>& order_;
};

std::vector<std::vector<int>> sort_orders(const Matrix& contexts) {
  const int p = static_cast<int>(contexts.cols());
  std::vector<std::vector<int>> order(static_cast<std::size_t>(p));
  for (int f = 0; f < p; ++f) {
    auto& idx = order[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(contexts.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (contexts(a, f) != contexts(b, f)) return contexts(a, f) < contexts(b, f);
      return a < b;
    });
  }
  return order;
}

void check_finite(const Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw std::invalid_argument(std::string("oracle: non-finite ") + what + " at (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

double evaluate_objective(const WeightedExamples& examples, const TreePolicy& policy) {
  double objective = 0.0;
  for (Eigen::Index i = 0; i < examples.contexts.rows(); ++i) {
    const int action = policy.evaluate(examples.contexts.row(i).transpose());
    objective += examples.weights[i] * examples.score_rows(i, action);
  }
  return objective;
}

OpoSearcher::OpoSearcher(Matrix contexts, Matrix scores)
    : contexts_(std::move(contexts)), scores_(std::move(scores)) {
  if (contexts_.rows() == 0) throw std::invalid_argument("oracle: no examples");
  if (contexts_.rows() != scores_.rows()) {
    throw std::invalid_argument("oracle: contexts and scores row counts differ");
  }
  check_finite(contexts_, "context");
  check_finite(scores_, "score");
  order_ = sort_orders(contexts_);
}

OracleSolution OpoSearcher::solve(const Vector& weights, int depth) const {
  if (depth < 0) throw std::invalid_argument("oracle: negative depth");
  if (weights.size() != contexts_.rows()) {
    throw std::invalid_argument("oracle: weight length mismatch");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw std::invalid_argument("oracle: weight " + std::to_string(i) +
                                  " must be finite and non-negative");
    }
  }

  Matrix scaled = weights.asDiagonal() * scores_;
  const TreeSearch search(contexts_, scaled, order_);
  SearchResult result = search.run(depth);

  OracleSolution solution;
  solution.policy = std::move(result.policy);
  solution.objective =
      evaluate_objective({contexts_, scores_, weights}, solution.policy);
  return solution;
}

OracleSolution solve_opo(const WeightedExamples& examples, int depth) {
  OpoSearcher searcher(examples.contexts, examples.score_rows);
  return searcher.solve(examples.weights, depth);
}

namespace {

class PolicyEnumerator {
 public:
  PolicyEnumerator(const Matrix& contexts, int action_count, std::uint64_t budget,
                   const std::function<void(const TreePolicy&)>& visit)
      : contexts_(contexts),
        action_count_(action_count),
        budget_(budget),
        visit_(visit),
        order_(sort_orders(contexts)) {}

  void run(int depth) {
    std::vector<char> mask(static_cast<std::size_t>(contexts_.rows()), 1);
    for (const auto& tree : subtrees(mask, depth)) emit(tree);
  }

 private:
  void emit(const TreePolicy& tree) {
    if (++produced_ > budget_) {
      throw std::runtime_error("policy enumeration exceeded budget of " +
                               std::to_string(budget_) + " trees; use a smaller instance");
    }
    visit_(tree);
  }

  std::vector<TreePolicy> subtrees(const std::vector<char>& mask, int depth) const {
    std::vector<TreePolicy> trees;
    if (depth == 0) {
      for (int a = 0; a < action_count_; ++a) trees.push_back(TreePolicy::leaf(a));
      return trees;
    }
    const int p = static_cast<int>(contexts_.cols());
    std::vector<int> sorted;
    for (int f = 0; f < p; ++f) {
      sorted.clear();
      for (int i : order_[static_cast<std::size_t>(f)]) {
        if (mask[static_cast<std::size_t>(i)]) sorted.push_back(i);
      }
      std::vector<char> left(mask.size(), 0);
      std::vector<char> right = mask;
      std::size_t moved = 0;
      double tau = kNegInf;
      while (true) {
        const auto lefts = subtrees(left, depth - 1);
        const auto rights = subtrees(right, depth - 1);
        for (const auto& l : lefts) {
          for (const auto& r : rights) {
            trees.push_back(merge_children({f, tau}, l, r));
          }
        }
        if (moved == sorted.size()) break;
        const double group_value = contexts_(sorted[moved], f);
        while (moved < sorted.size() && contexts_(sorted[moved], f) == group_value) {
          left[static_cast<std::size_t>(sorted[moved])] = 1;
          right[static_cast<std::size_t>(sorted[moved])] = 0;
          ++moved;
        }
        if (moved == sorted.size()) break;
        tau = midpoint_threshold(group_value, contexts_(sorted[moved], f));
      }
    }
    return trees;
  }

  const Matrix& contexts_;
  int action_count_;
  std::uint64_t budget_;
  std::uint64_t produced_ = 0;
  const std::function<void(const TreePolicy&)>& visit_;
  std::vector<std::vector<int>> order_;
};

}  // namespace

void for_each_policy(const Matrix& contexts, int depth, int action_count, std::uint64_t budget,
                     const std::function<void(const TreePolicy&)>& visit) {
  if (contexts.rows() == 0) throw std::invalid_argument("enumeration: no contexts");
  if (depth < 0) throw std::invalid_argument("enumeration: negative depth");
  if (action_count < 1) throw std::invalid_argument("enumeration: need at least one action");
  PolicyEnumerator enumerator(contexts, action_count, budget, visit);
  enumerator.run(depth);
}

std::vector<TreePolicy> enumerate_policies(const Matrix& contexts, int depth, int action_count,
                                           std::uint64_t budget) {
  std::vector<TreePolicy> policies;
  for_each_policy(contexts, depth, action_count, budget,
                  [&](const TreePolicy& tree) { policies.push_back(tree); });
  return policies;
}

}  // namespace egopo
