#include "egopo/solver.hpp"

#include "egopo/dataset_io.hpp"
#include "egopo/metrics.hpp"
#include "egopo/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace egopo {

namespace {

struct PooledData {
  Matrix contexts;      // n x p
  Matrix scores;        // n x d
  std::vector<int> source_of;  // n
  std::vector<double> inv_size;  // 1 / n_s per source
  int num_sources = 0;
};

PooledData pool(const ObservationalDataset& dataset, const ScoreMatrix& scores) {
  if (scores.sources.size() != dataset.sources.size()) {
    throw std::invalid_argument("solver: scores do not cover every source");
  }
  PooledData pooled;
  pooled.num_sources = static_cast<int>(dataset.sources.size());
  const auto n = dataset.total_size();
  pooled.contexts.resize(n, dataset.context_dim);
  pooled.scores.resize(n, dataset.action_count);
  pooled.source_of.resize(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& source = dataset.sources[s];
    const auto& block = scores.sources[s];
    if (block.source_id != source.source_id || block.scores.rows() != source.size()) {
      throw std::invalid_argument("solver: score block mismatch for source '" +
                                  source.source_id + "'");
    }
    pooled.inv_size.push_back(1.0 / static_cast<double>(source.size()));
    for (Eigen::Index i = 0; i < source.size(); ++i, ++row) {
      pooled.contexts.row(row) = source.contexts.row(i);
      pooled.scores.row(row) = block.scores.row(i);
      pooled.source_of[static_cast<std::size_t>(row)] = static_cast<int>(s);
    }
  }
  return pooled;
}

Vector lambda_weights(const PooledData& pooled, const Vector& per_source_weight) {
  Vector weights(pooled.contexts.rows());
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const int s = pooled.source_of[static_cast<std::size_t>(i)];
    weights[i] = per_source_weight[s] * pooled.inv_size[static_cast<std::size_t>(s)];
  }
  return weights;
}

void check_cover(const CoverSet& cover, int num_sources) {
  if (cover.points.empty()) throw std::invalid_argument("solver: empty cover");
  for (const auto& point : cover.points) {
    point.validate();
    if (point.size() != num_sources) {
      throw std::invalid_argument("solver: cover point dimension does not match source count");
    }
  }
}

// Per-source sums of the scores of the policy's chosen actions; Q_lambda for
// any lambda is then a dot product with lambda_s / n_s.
Vector per_source_chosen_sums(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                              const TreePolicy& policy) {
  Vector sums(static_cast<Eigen::Index>(dataset.sources.size()));
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& source = dataset.sources[s];
    const auto& block = scores.sources[s].scores;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < source.size(); ++i) {
      sum += block(i, policy.evaluate(source.contexts.row(i).transpose()));
    }
    sums[static_cast<Eigen::Index>(s)] = sum;
  }
  return sums;
}

double mixture_value_from_sums(const Vector& sums, const ObservationalDataset& dataset,
                               const Vector& lambda) {
  double value = 0.0;
  for (Eigen::Index s = 0; s < sums.size(); ++s) {
    value += lambda[s] / static_cast<double>(dataset.sources[static_cast<std::size_t>(s)].size()) *
             sums[s];
  }
  return value;
}

int modal_iterate(const std::vector<TreePolicy>& iterates) {
  int best = 0;
  int best_count = 0;
  for (std::size_t t = 0; t < iterates.size(); ++t) {
    int count = 0;
    for (const auto& other : iterates) {
      if (iterates[t] == other) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = static_cast<int>(t);
    }
  }
  return best;
}

}  // namespace

void EgopoConfig::validate() const {
  if (horizon && *horizon < 1) throw std::invalid_argument("solver: horizon must be >= 1");
  if (max_horizon < 1) throw std::invalid_argument("solver: max_horizon must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("solver: alpha must be >= 0");
  if (depth < 0) throw std::invalid_argument("solver: depth must be >= 0");
  if (b_hat && !(*b_hat > 0.0)) throw std::invalid_argument("solver: explicit b_hat must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("solver: epsilon must be > 0");
}

double empirical_mixture_value(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                               const MixtureWeights& lambda, const TreePolicy& policy) {
  lambda.validate();
  if (lambda.size() != static_cast<Eigen::Index>(dataset.sources.size())) {
    throw std::invalid_argument("solver: lambda dimension does not match source count");
  }
  const Vector sums = per_source_chosen_sums(dataset, scores, policy);
  return mixture_value_from_sums(sums, dataset, lambda.values);
}

Vector per_lambda_max_values(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                             const CoverSet& cover, int depth, int threads) {
  check_cover(cover, static_cast<int>(dataset.sources.size()));
  const PooledData pooled = pool(dataset, scores);
  const OpoSearcher searcher(pooled.contexts, pooled.scores);
  Vector maxima(static_cast<Eigen::Index>(cover.points.size()));
  parallel_for(
      static_cast<int>(cover.points.size()),
      [&](int j) {
        const Vector weights = lambda_weights(pooled, cover.points[static_cast<std::size_t>(j)].values);
        maxima[j] = searcher.solve(weights, depth).objective;
      },
      threads);
  return maxima;
}

TreePolicy best_response(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                         const CoverSet& cover, const Vector& rho, int depth) {
  check_cover(cover, static_cast<int>(dataset.sources.size()));
  if (rho.size() != static_cast<Eigen::Index>(cover.points.size())) {
    throw std::invalid_argument("solver: rho dimension does not match cover size");
  }
  MixtureWeights mean_lambda(Vector::Zero(static_cast<Eigen::Index>(dataset.sources.size())));
  for (Eigen::Index j = 0; j < rho.size(); ++j) {
    if (!(rho[j] >= 0.0)) throw std::invalid_argument("solver: rho must be non-negative");
    mean_lambda.values += rho[j] * cover.points[static_cast<std::size_t>(j)].values;
  }
  mean_lambda.validate();

  const PooledData pooled = pool(dataset, scores);
  const OpoSearcher searcher(pooled.contexts, pooled.scores);
  return searcher.solve(lambda_weights(pooled, mean_lambda.values), depth).policy;
}

double empirical_mixture_regret(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                                const MixtureWeights& lambda, const TreePolicy& policy,
                                double lambda_max_value) {
  return lambda_max_value - empirical_mixture_value(dataset, scores, lambda, policy);
}

EgopoResult run_egopo(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                      const CoverSet& cover, const EgopoConfig& config) {
  config.validate();
  check_cover(cover, static_cast<int>(dataset.sources.size()));
  const auto cover_size = static_cast<Eigen::Index>(cover.points.size());

  const PooledData pooled = pool(dataset, scores);
  const OpoSearcher searcher(pooled.contexts, pooled.scores);

  EgopoResult result;
  result.b_hat = config.b_hat.value_or(2.0 * scores.gamma_max);
  if (!(result.b_hat > 0.0)) result.b_hat = 1.0;  // all-zero scores; any bound works

  // Horizon: explicit, or (n / skewness)^(1+alpha) capped at max_horizon.
  int horizon;
  if (config.horizon) {
    horizon = *config.horizon;
  } else {
    const MixtureWeights n_bar = empirical_sample_distribution(dataset);
    double worst_skewness = 1.0;
    for (const auto& point : cover.points) {
      worst_skewness = std::max(worst_skewness, skewness(point, n_bar));
    }
    const double n = static_cast<double>(dataset.total_size());
    const double suggested = std::ceil(std::pow(n / worst_skewness, 1.0 + config.alpha));
    horizon = static_cast<int>(std::clamp(suggested, 1.0, static_cast<double>(config.max_horizon)));
  }
  result.horizon = horizon;

  result.per_lambda_max = per_lambda_max_values(dataset, scores, cover, config.depth,
                                                config.threads);
  result.rho_trace.resize(horizon, cover_size);
  result.gradient_trace.resize(horizon, cover_size);
  result.iterates.reserve(static_cast<std::size_t>(horizon));

  result.eta = cover_size > 1 ? std::sqrt(std::log(static_cast<double>(cover_size)) /
                                          (result.b_hat * result.b_hat * horizon))
                              : 0.0;

  Vector rho = Vector::Constant(cover_size, 1.0 / static_cast<double>(cover_size));
  TreePolicy singleton_policy;
  if (cover_size == 1) {
    // Degenerate game: one oracle call, constant traces.
    singleton_policy =
        searcher.solve(lambda_weights(pooled, cover.points.front().values), config.depth).policy;
  }
  for (int t = 0; t < horizon; ++t) {
    result.rho_trace.row(t) = rho.transpose();

    TreePolicy iterate;
    if (cover_size == 1) {
      iterate = singleton_policy;
    } else {
      MixtureWeights mean_lambda(Vector::Zero(static_cast<Eigen::Index>(dataset.sources.size())));
      for (Eigen::Index j = 0; j < cover_size; ++j) {
        mean_lambda.values += rho[j] * cover.points[static_cast<std::size_t>(j)].values;
      }
      iterate = searcher.solve(lambda_weights(pooled, mean_lambda.values), config.depth).policy;
    }

    const Vector sums = per_source_chosen_sums(dataset, scores, iterate);
    Vector gradient(cover_size);
    for (Eigen::Index j = 0; j < cover_size; ++j) {
      const double value =
          mixture_value_from_sums(sums, dataset, cover.points[static_cast<std::size_t>(j)].values);
      gradient[j] = std::clamp(result.per_lambda_max[j] - value, 0.0, result.b_hat);
    }
    result.gradient_trace.row(t) = gradient.transpose();
    result.iterates.push_back(std::move(iterate));

    if (cover_size > 1 && t + 1 < horizon) {
      const double shift = gradient.maxCoeff();
      double total = 0.0;
      for (Eigen::Index j = 0; j < cover_size; ++j) {
        rho[j] *= std::exp(result.eta * (gradient[j] - shift));
        total += rho[j];
      }
      rho /= total;
    }
  }

  switch (config.iterate_mode) {
    case EgopoConfig::IterateMode::last:
      result.policy = result.iterates.back();
      break;
    case EgopoConfig::IterateMode::uniform_average:
      // The averaged iterate is a distribution over policies; report its most
      // frequent member as the single-policy summary.
      result.policy = result.iterates[static_cast<std::size_t>(modal_iterate(result.iterates))];
      break;
    case EgopoConfig::IterateMode::best_worst_case: {
      int best_t = 0;
      double best_worst = std::numeric_limits<double>::infinity();
      for (int t = 0; t < horizon; ++t) {
        const double worst = result.gradient_trace.row(t).maxCoeff();
        if (worst < best_worst) {
          best_worst = worst;
          best_t = t;
        }
      }
      result.policy = result.iterates[static_cast<std::size_t>(best_t)];
      break;
    }
  }
  return result;
}

std::string egopo_result_to_json(const EgopoResult& result) {
  nlohmann::json doc;
  doc["policy"] = nlohmann::json::parse(policy_to_json(result.policy));
  doc["eta"] = result.eta;
  doc["b_hat"] = result.b_hat;
  doc["horizon"] = result.horizon;
  doc["per_lambda_max"] = std::vector<double>(
      result.per_lambda_max.begin(), result.per_lambda_max.end());
  return doc.dump(2);
}

void save_egopo_result(const EgopoResult& result, const std::string& json_path,
                       const std::string& trace_csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write result file '" + json_path + "'");
    out << egopo_result_to_json(result) << "\n";
  }
  std::ofstream out(trace_csv_path);
  if (!out) throw std::runtime_error("cannot write trace file '" + trace_csv_path + "'");
  out << "t,lambda_index,rho,gradient\n";
  for (Eigen::Index t = 0; t < result.rho_trace.rows(); ++t) {
    for (Eigen::Index j = 0; j < result.rho_trace.cols(); ++j) {
      out << (t + 1) << ',' << j << ',' << format_double(result.rho_trace(t, j)) << ','
          << format_double(result.gradient_trace(t, j)) << "\n";
    }
  }
}

}  // namespace egopo
