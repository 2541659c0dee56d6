#include "egopo/aipw.hpp"

#include "egopo/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace egopo {

Eigen::Index ScoreMatrix::total_size() const {
  Eigen::Index n = 0;
  for (const auto& source : sources) n += source.scores.rows();
  return n;
}

void ScoreMatrix::validate() const {
  if (sources.empty()) throw std::invalid_argument("scores: no sources");
  double observed_max = 0.0;
  for (const auto& source : sources) {
    for (Eigen::Index i = 0; i < source.scores.rows(); ++i) {
      for (Eigen::Index a = 0; a < source.scores.cols(); ++a) {
        if (!std::isfinite(source.scores(i, a))) {
          throw std::invalid_argument("scores: non-finite entry at source '" + source.source_id +
                                      "', row " + std::to_string(i) + ", action " +
                                      std::to_string(a));
        }
        observed_max = std::max(observed_max, std::abs(source.scores(i, a)));
      }
    }
  }
  if (observed_max != gamma_max) {
    throw std::invalid_argument("scores: cached gamma_max does not match entries");
  }
}

ScoreMatrix compute_aipw_scores(const ObservationalDataset& dataset, const NuisanceFits& fits,
                                const std::vector<FoldAssignment>& folds) {
  dataset.validate();
  if (folds.size() != dataset.sources.size() || fits.sources.size() != dataset.sources.size()) {
    throw std::invalid_argument("scores: fits and folds must cover every source");
  }

  ScoreMatrix result;
  result.provenance = ScoreMatrix::Provenance::cross_fitted;
  double gamma_max = 0.0;

  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& source = dataset.sources[s];
    const auto& assignment = folds[s];
    const auto& fitted = fits.sources[fits.source_index(source.source_id)];
    if (static_cast<Eigen::Index>(assignment.fold_of.size()) != source.size()) {
      throw std::invalid_argument("scores: fold assignment size mismatch for source '" +
                                  source.source_id + "'");
    }

    ScoreMatrix::PerSource block;
    block.source_id = source.source_id;
    block.scores.resize(source.size(), dataset.action_count);

    for (Eigen::Index i = 0; i < source.size(); ++i) {
      const int fold = assignment.fold_of[static_cast<std::size_t>(i)];
      const Vector context = source.contexts.row(i).transpose();
      const Vector mu = fitted.mu_models[static_cast<std::size_t>(fold)]->predict(context);
      const Vector w = fitted.w_models[static_cast<std::size_t>(fold)]->predict(context);
      const int observed_action = source.actions[static_cast<std::size_t>(i)];
      for (int a = 0; a < dataset.action_count; ++a) {
        double score = mu[a];
        if (a == observed_action) score += (source.rewards[i] - mu[a]) * w[a];
        if (!std::isfinite(score)) {
          throw std::runtime_error("scores: non-finite nuisance prediction at source '" +
                                   source.source_id + "', row " + std::to_string(i) +
                                   ", action " + std::to_string(a));
        }
        block.scores(i, a) = score;
        gamma_max = std::max(gamma_max, std::abs(score));
      }
    }
    result.sources.push_back(std::move(block));
  }
  result.gamma_max = gamma_max;
  return result;
}

ScoreMatrix compute_oracle_scores(const std::vector<SimulatedSource>& sources) {
  if (sources.empty()) throw std::invalid_argument("scores: no sources");

  ScoreMatrix result;
  result.provenance = ScoreMatrix::Provenance::oracle;
  double gamma_max = 0.0;

  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& source = sources[s];
    const auto n_s = source.observable.size();
    const auto d = source.potential_outcomes.cols();
    if (source.true_mu.rows() != n_s || source.true_mu.cols() != d) {
      throw std::invalid_argument("scores: potential-outcome table shape mismatch");
    }
    if (!source.observable.logged_propensities) {
      throw std::invalid_argument("scores: oracle scores need logged propensities");
    }

    ScoreMatrix::PerSource block;
    block.source_id =
        source.observable.source_id.empty() ? "s" + std::to_string(s) : source.observable.source_id;
    block.scores.resize(n_s, d);
    for (Eigen::Index i = 0; i < n_s; ++i) {
      const int observed_action = source.observable.actions[static_cast<std::size_t>(i)];
      const double w = 1.0 / (*source.observable.logged_propensities)[i];
      for (Eigen::Index a = 0; a < d; ++a) {
        double score = source.true_mu(i, a);
        if (a == observed_action) {
          score += (source.potential_outcomes(i, a) - source.true_mu(i, a)) * w;
        }
        block.scores(i, a) = score;
        gamma_max = std::max(gamma_max, std::abs(score));
      }
    }
    result.sources.push_back(std::move(block));
  }
  result.gamma_max = gamma_max;
  return result;
}

void save_scores_csv(const ScoreMatrix& scores, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scores file '" + path + "'");
  const auto d = scores.sources.empty() ? 0 : scores.sources.front().scores.cols();
  out << "source,i";
  for (Eigen::Index a = 0; a < d; ++a) out << ",gamma_" << a;
  out << "\n";
  for (const auto& source : scores.sources) {
    for (Eigen::Index i = 0; i < source.scores.rows(); ++i) {
      out << source.source_id << ',' << i;
      for (Eigen::Index a = 0; a < d; ++a) out << ',' << format_double(source.scores(i, a));
      out << "\n";
    }
  }
}

}  // namespace egopo
