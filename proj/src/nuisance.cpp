#include "egopo/nuisance.hpp"

#include "egopo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace egopo {

namespace {

std::vector<Eigen::Index> complement_indices(const FoldAssignment& folds, int fold) {
  std::vector<Eigen::Index> indices;
  for (std::size_t i = 0; i < folds.fold_of.size(); ++i) {
    if (folds.fold_of[i] != fold) indices.push_back(static_cast<Eigen::Index>(i));
  }
  return indices;
}

}  // namespace

// Bitwise hash of a context row, for the exact-match propensity lookup.
std::size_t KnownPropensityModel::RowHash::operator()(const std::vector<double>& row) const {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (double v : row) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

FoldAssignment assign_folds(int n_s, int fold_count, std::uint64_t seed) {
  if (fold_count < 1) throw std::invalid_argument("folds: fold count must be positive");
  if (fold_count > n_s) {
    throw std::invalid_argument("folds: cannot split " + std::to_string(n_s) + " points into " +
                                std::to_string(fold_count) + " folds");
  }
  FoldAssignment assignment;
  assignment.fold_count = fold_count;
  assignment.fold_of.reserve(static_cast<std::size_t>(n_s));
  for (int fold = 0; fold < fold_count; ++fold) {
    const int size = n_s / fold_count + (fold < n_s % fold_count ? 1 : 0);
    for (int i = 0; i < size; ++i) assignment.fold_of.push_back(fold);
  }
  Xoshiro256pp rng(derive_seed(seed, stream_tag::folds));
  for (int i = n_s - 1; i > 0; --i) {
    const auto j = rng.uniform_int(static_cast<std::uint64_t>(i) + 1);
    std::swap(assignment.fold_of[static_cast<std::size_t>(i)],
              assignment.fold_of[static_cast<std::size_t>(j)]);
  }
  return assignment;
}

std::vector<FoldAssignment> assign_folds(const ObservationalDataset& dataset,
                                         const NuisanceConfig& config) {
  std::vector<FoldAssignment> folds;
  folds.reserve(dataset.sources.size());
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    auto assignment = assign_folds(static_cast<int>(dataset.sources[s].size()), config.folds,
                                   derive_seed(config.seed, stream_tag::folds, s));
    assignment.source_id = dataset.sources[s].source_id;
    folds.push_back(std::move(assignment));
  }
  return folds;
}

KnnRegressor::KnnRegressor(const Matrix& contexts, const std::vector<int>& actions,
                           const Vector& targets, int action_count) {
  cells_.resize(static_cast<std::size_t>(action_count));
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(action_count));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    members[static_cast<std::size_t>(actions[i])].push_back(static_cast<Eigen::Index>(i));
  }
  for (int a = 0; a < action_count; ++a) {
    auto& cell = cells_[static_cast<std::size_t>(a)];
    const auto& rows = members[static_cast<std::size_t>(a)];
    if (rows.empty()) {
      throw std::invalid_argument("knn: action " + std::to_string(a) + " has no observations");
    }
    cell.contexts.resize(static_cast<Eigen::Index>(rows.size()), contexts.cols());
    cell.targets.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      cell.contexts.row(static_cast<Eigen::Index>(r)) = contexts.row(rows[r]);
      cell.targets[static_cast<Eigen::Index>(r)] = targets[rows[r]];
    }
    cell.k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(rows.size()))));
  }
}

Vector KnnRegressor::predict(const Eigen::Ref<const Vector>& context) const {
  Vector prediction(static_cast<Eigen::Index>(cells_.size()));
  std::vector<std::pair<double, Eigen::Index>> distances;
  for (std::size_t a = 0; a < cells_.size(); ++a) {
    const auto& cell = cells_[a];
    distances.clear();
    distances.reserve(static_cast<std::size_t>(cell.contexts.rows()));
    for (Eigen::Index i = 0; i < cell.contexts.rows(); ++i) {
      distances.emplace_back((cell.contexts.row(i).transpose() - context).squaredNorm(), i);
    }
    const auto k = static_cast<std::size_t>(cell.k);
    std::partial_sort(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(k),
                      distances.end());
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += cell.targets[distances[i].second];
    prediction[static_cast<Eigen::Index>(a)] = mean / static_cast<double>(k);
  }
  return prediction;
}

RidgeRegressor::RidgeRegressor(const Matrix& contexts, const std::vector<int>& actions,
                               const Vector& targets, int action_count, double l2) {
  const Eigen::Index p = contexts.cols();
  coefficients_.resize(action_count, p);
  intercepts_.resize(action_count);
  for (int a = 0; a < action_count; ++a) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (actions[i] == a) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) {
      throw std::invalid_argument("ridge: action " + std::to_string(a) + " has no observations");
    }
    Matrix design(static_cast<Eigen::Index>(rows.size()), p + 1);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      design.block(static_cast<Eigen::Index>(r), 0, 1, p) = contexts.row(rows[r]);
      design(static_cast<Eigen::Index>(r), p) = 1.0;
      y[static_cast<Eigen::Index>(r)] = targets[rows[r]];
    }
    Eigen::MatrixXd normal = design.transpose() * design;
    for (Eigen::Index j = 0; j < p; ++j) normal(j, j) += l2;  // intercept unpenalized
    const Vector beta = normal.ldlt().solve(design.transpose() * y);
    coefficients_.row(a) = beta.head(p).transpose();
    intercepts_[a] = beta[p];
  }
}

Vector RidgeRegressor::predict(const Eigen::Ref<const Vector>& context) const {
  return coefficients_ * context + intercepts_;
}

FrequencyInverseModel::FrequencyInverseModel(const std::vector<int>& actions, int action_count,
                                             double eta_min) {
  if (!(eta_min > 0.0 && eta_min <= 1.0)) {
    throw std::invalid_argument("propensity: eta_min must be in (0, 1]");
  }
  Vector counts = Vector::Zero(action_count);
  for (int a : actions) counts[a] += 1.0;
  const double total = static_cast<double>(actions.size());
  propensities_.resize(action_count);
  for (int a = 0; a < action_count; ++a) {
    const double smoothed = (counts[a] + 1.0) / (total + action_count);
    propensities_[a] = std::clamp(smoothed, eta_min, 1.0);
  }
}

Vector FrequencyInverseModel::predict(const Eigen::Ref<const Vector>&) const {
  return propensities_.cwiseInverse();
}

KnownPropensityModel::KnownPropensityModel(const Matrix& contexts,
                                           const Vector& logged_propensities, int action_count)
    : contexts_(contexts), action_count_(action_count) {
  inverse_propensities_ = logged_propensities.cwiseInverse();
  for (Eigen::Index i = 0; i < contexts_.rows(); ++i) {
    std::vector<double> key(contexts_.row(i).begin(), contexts_.row(i).end());
    lookup_.try_emplace(std::move(key), i);
  }
}

Vector KnownPropensityModel::predict(const Eigen::Ref<const Vector>& context) const {
  std::vector<double> key(context.begin(), context.end());
  const auto it = lookup_.find(key);
  Eigen::Index row;
  if (it != lookup_.end()) {
    row = it->second;
  } else {
    row = 0;
    double best = (contexts_.row(0).transpose() - context).squaredNorm();
    for (Eigen::Index i = 1; i < contexts_.rows(); ++i) {
      const double dist = (contexts_.row(i).transpose() - context).squaredNorm();
      if (dist < best) {
        best = dist;
        row = i;
      }
    }
  }
  return Vector::Constant(action_count_, inverse_propensities_[row]);
}

int NuisanceFits::source_index(const std::string& source_id) const {
  for (std::size_t s = 0; s < sources.size(); ++s) {
    if (sources[s].source_id == source_id) return static_cast<int>(s);
  }
  throw std::invalid_argument("nuisance: unknown source id '" + source_id + "'");
}

NuisanceFits fit_nuisance(const ObservationalDataset& dataset,
                          const std::vector<FoldAssignment>& folds,
                          const NuisanceConfig& config) {
  dataset.validate();
  if (folds.size() != dataset.sources.size()) {
    throw std::invalid_argument("nuisance: fold assignments do not cover every source");
  }

  NuisanceFits fits;
  fits.mode = config.mode;
  fits.fold_count = config.folds;

  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& source = dataset.sources[s];
    const auto& assignment = folds[s];
    if (static_cast<Eigen::Index>(assignment.fold_of.size()) != source.size()) {
      throw std::invalid_argument("nuisance: fold assignment size mismatch for source '" +
                                  source.source_id + "'");
    }
    if (config.mode == NuisanceConfig::Mode::known_propensity && !source.logged_propensities) {
      throw std::invalid_argument("nuisance: source '" + source.source_id +
                                  "' has no logged propensities for known-propensity mode");
    }

    NuisanceFits::SourceFits fitted;
    fitted.source_id = source.source_id;

    // The known-propensity bypass is not an estimator, so it may carry the
    // full table of logged values.
    std::shared_ptr<const ActionValueModel> known_w;
    if (config.mode == NuisanceConfig::Mode::known_propensity) {
      known_w = std::make_shared<KnownPropensityModel>(
          source.contexts, *source.logged_propensities, dataset.action_count);
    }

    for (int fold = 0; fold < assignment.fold_count; ++fold) {
      const auto rows = complement_indices(assignment, fold);
      Matrix contexts(static_cast<Eigen::Index>(rows.size()), dataset.context_dim);
      std::vector<int> actions(rows.size());
      Vector rewards(static_cast<Eigen::Index>(rows.size()));
      std::vector<int> action_counts(static_cast<std::size_t>(dataset.action_count), 0);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        contexts.row(static_cast<Eigen::Index>(r)) = source.contexts.row(rows[r]);
        actions[r] = source.actions[static_cast<std::size_t>(rows[r])];
        rewards[static_cast<Eigen::Index>(r)] = source.rewards[rows[r]];
        ++action_counts[static_cast<std::size_t>(actions[r])];
      }
      for (int a = 0; a < dataset.action_count; ++a) {
        if (action_counts[static_cast<std::size_t>(a)] == 0) {
          throw std::invalid_argument("nuisance: source '" + source.source_id + "', action " +
                                      std::to_string(a) + " has no observations outside fold " +
                                      std::to_string(fold));
        }
      }

      std::shared_ptr<const ActionValueModel> mu;
      if (config.regressor == NuisanceConfig::Regressor::knn) {
        mu = std::make_shared<KnnRegressor>(contexts, actions, rewards, dataset.action_count);
      } else {
        mu = std::make_shared<RidgeRegressor>(contexts, actions, rewards, dataset.action_count);
      }
      fitted.mu_models.push_back(std::move(mu));

      if (config.mode == NuisanceConfig::Mode::known_propensity) {
        fitted.w_models.push_back(known_w);
      } else {
        fitted.w_models.push_back(std::make_shared<FrequencyInverseModel>(
            actions, dataset.action_count, config.eta_min));
      }
    }
    fits.sources.push_back(std::move(fitted));
  }
  return fits;
}

Vector predict_mu(const NuisanceFits& fits, const std::string& source_id, int fold,
                  const Eigen::Ref<const Vector>& context) {
  const int s = fits.source_index(source_id);
  if (fold < 0 || fold >= fits.fold_count) {
    throw std::invalid_argument("nuisance: fold " + std::to_string(fold) + " out of range");
  }
  return fits.sources[static_cast<std::size_t>(s)].mu_models[static_cast<std::size_t>(fold)]
      ->predict(context);
}

Vector predict_w(const NuisanceFits& fits, const std::string& source_id, int fold,
                 const Eigen::Ref<const Vector>& context) {
  const int s = fits.source_index(source_id);
  if (fold < 0 || fold >= fits.fold_count) {
    throw std::invalid_argument("nuisance: fold " + std::to_string(fold) + " out of range");
  }
  return fits.sources[static_cast<std::size_t>(s)].w_models[static_cast<std::size_t>(fold)]
      ->predict(context);
}

}  // namespace egopo
