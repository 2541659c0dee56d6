#include "egopo/data_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace egopo {

Eigen::Index ObservationalDataset::total_size() const {
  Eigen::Index n = 0;
  for (const auto& source : sources) n += source.size();
  return n;
}

int ObservationalDataset::source_index(const std::string& source_id) const {
  for (std::size_t s = 0; s < sources.size(); ++s) {
    if (sources[s].source_id == source_id) return static_cast<int>(s);
  }
  return -1;
}

void ObservationalDataset::validate() const {
  if (context_dim <= 0) throw std::invalid_argument("dataset: context_dim must be positive");
  if (action_count < 2) throw std::invalid_argument("dataset: action_count must be at least 2");
  if (sources.empty()) throw std::invalid_argument("dataset: no sources");
  for (const auto& source : sources) {
    const auto n_s = source.size();
    if (n_s < 1) {
      throw std::invalid_argument("dataset: source '" + source.source_id + "' is empty");
    }
    if (source.contexts.cols() != context_dim) {
      throw std::invalid_argument("dataset: source '" + source.source_id +
                                  "' has context dimension " +
                                  std::to_string(source.contexts.cols()) + ", expected " +
                                  std::to_string(context_dim));
    }
    if (static_cast<Eigen::Index>(source.actions.size()) != n_s ||
        source.rewards.size() != n_s) {
      throw std::invalid_argument("dataset: source '" + source.source_id +
                                  "' has inconsistent column lengths");
    }
    for (Eigen::Index i = 0; i < n_s; ++i) {
      const int a = source.actions[static_cast<std::size_t>(i)];
      if (a < 0 || a >= action_count) {
        throw std::invalid_argument("dataset: source '" + source.source_id + "' row " +
                                    std::to_string(i + 1) + ": action " + std::to_string(a) +
                                    " out of range [0, " + std::to_string(action_count) + ")");
      }
      if (!std::isfinite(source.rewards[i])) {
        throw std::invalid_argument("dataset: source '" + source.source_id + "' row " +
                                    std::to_string(i + 1) + ": non-finite reward");
      }
    }
    if (source.logged_propensities) {
      if (source.logged_propensities->size() != n_s) {
        throw std::invalid_argument("dataset: source '" + source.source_id +
                                    "' has inconsistent propensity length");
      }
      for (Eigen::Index i = 0; i < n_s; ++i) {
        const double e = (*source.logged_propensities)[i];
        if (!(e > 0.0 && e <= 1.0)) {
          throw std::invalid_argument("dataset: source '" + source.source_id + "' row " +
                                      std::to_string(i + 1) + ": propensity " +
                                      std::to_string(e) + " outside (0, 1]");
        }
      }
    }
  }
}

MixtureWeights::MixtureWeights(std::initializer_list<double> v) {
  values.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) values[i++] = x;
}

bool MixtureWeights::is_valid() const {
  if (values.size() == 0) return false;
  double sum = 0.0;
  for (Eigen::Index s = 0; s < values.size(); ++s) {
    if (!(values[s] >= 0.0) || !std::isfinite(values[s])) return false;
    sum += values[s];
  }
  return std::abs(sum - 1.0) <= kSumTolerance;
}

void MixtureWeights::validate() const {
  if (!is_valid()) {
    throw std::invalid_argument("mixture weights must be non-negative and sum to 1");
  }
}

MixtureWeights MixtureWeights::uniform(int num_sources) {
  return MixtureWeights(Vector::Constant(num_sources, 1.0 / num_sources));
}

MixtureWeights MixtureWeights::degenerate(int num_sources, int source) {
  Vector v = Vector::Zero(num_sources);
  v[source] = 1.0;
  return MixtureWeights(std::move(v));
}

MixtureWeights empirical_sample_distribution(const ObservationalDataset& dataset) {
  const double n = static_cast<double>(dataset.total_size());
  Vector v(static_cast<Eigen::Index>(dataset.sources.size()));
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    v[static_cast<Eigen::Index>(s)] = static_cast<double>(dataset.sources[s].size()) / n;
  }
  return MixtureWeights(std::move(v));
}

TreePolicy TreePolicy::leaf(int action) {
  TreePolicy policy;
  policy.depth = 0;
  policy.leaf_actions = {action};
  return policy;
}

int TreePolicy::evaluate(const Eigen::Ref<const Vector>& context) const {
  const int internal_count = (1 << depth) - 1;
  if (!splits.empty()) {
    for (const auto& split : splits) {
      if (split.feature >= context.size()) {
        throw std::invalid_argument("policy: split feature " + std::to_string(split.feature) +
                                    " exceeds context dimension " +
                                    std::to_string(context.size()));
      }
    }
  }
  int node = 0;
  while (node < internal_count) {
    const auto& split = splits[static_cast<std::size_t>(node)];
    node = context[split.feature] <= split.threshold ? 2 * node + 1 : 2 * node + 2;
  }
  return leaf_actions[static_cast<std::size_t>(node - internal_count)];
}

bool TreePolicy::structurally_valid(int context_dim, int action_count) const {
  if (depth < 0) return false;
  const std::size_t internal_count = (1u << depth) - 1;
  const std::size_t leaf_count = 1u << depth;
  if (splits.size() != internal_count || leaf_actions.size() != leaf_count) return false;
  for (const auto& split : splits) {
    if (split.feature < 0 || split.feature >= context_dim) return false;
    if (std::isnan(split.threshold)) return false;
  }
  for (int action : leaf_actions) {
    if (action < 0 || action >= action_count) return false;
  }
  return true;
}

void TreePolicy::validate(int context_dim, int action_count) const {
  if (!structurally_valid(context_dim, action_count)) {
    throw std::invalid_argument("policy: not a complete depth-" + std::to_string(depth) +
                                " tree over " + std::to_string(context_dim) + " features and " +
                                std::to_string(action_count) + " actions");
  }
}

bool TreePolicy::operator==(const TreePolicy& other) const {
  if (depth != other.depth || leaf_actions != other.leaf_actions) return false;
  if (splits.size() != other.splits.size()) return false;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i].feature != other.splits[i].feature) return false;
    const double a = splits[i].threshold;
    const double b = other.splits[i].threshold;
    if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
  }
  return true;
}

bool policy_key_less(const TreePolicy& a, const TreePolicy& b) {
  if (a.leaf_actions != b.leaf_actions) return a.leaf_actions < b.leaf_actions;
  for (std::size_t i = 0; i < a.splits.size() && i < b.splits.size(); ++i) {
    if (a.splits[i].feature != b.splits[i].feature) {
      return a.splits[i].feature < b.splits[i].feature;
    }
  }
  if (a.splits.size() != b.splits.size()) return a.splits.size() < b.splits.size();
  for (std::size_t i = 0; i < a.splits.size(); ++i) {
    if (a.splits[i].threshold != b.splits[i].threshold) {
      return a.splits[i].threshold < b.splits[i].threshold;
    }
  }
  return false;
}

}  // namespace egopo
