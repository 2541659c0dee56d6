#pragma once

#include "egopo/data_model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace egopo {

struct NuisanceConfig {
  enum class Mode { estimated, known_propensity };
  enum class Regressor { knn, ridge };

  Mode mode = Mode::estimated;
  int folds = 5;
  Regressor regressor = Regressor::knn;
  double eta_min = 0.01;  // propensity clipping floor
  std::uint64_t seed = 0;
};

// Assignment of one source's points to cross-fitting folds. Every fold is
// non-empty and sizes differ by at most one; deterministic in (seed, n, K).
struct FoldAssignment {
  std::string source_id;
  std::vector<int> fold_of;  // values in [0, fold_count)
  int fold_count = 0;
};

FoldAssignment assign_folds(int n_s, int fold_count, std::uint64_t seed);

// Computes per-source fold assignments for a dataset, deriving one sub-seed
// per source from config.seed.
std::vector<FoldAssignment> assign_folds(const ObservationalDataset& dataset,
                                         const NuisanceConfig& config);

// A fitted model mapping a context to one value per action.
class ActionValueModel {
 public:
  virtual ~ActionValueModel() = default;
  virtual Vector predict(const Eigen::Ref<const Vector>& context) const = 0;
};

// Per-action k-nearest-neighbor mean with k = ceil(sqrt(points in the cell)).
class KnnRegressor : public ActionValueModel {
 public:
  KnnRegressor(const Matrix& contexts, const std::vector<int>& actions, const Vector& targets,
               int action_count);
  Vector predict(const Eigen::Ref<const Vector>& context) const override;

 private:
  struct Cell {
    Matrix contexts;
    Vector targets;
    int k = 0;
  };
  std::vector<Cell> cells_;
};

// Per-action ridge regression on raw features plus intercept.
class RidgeRegressor : public ActionValueModel {
 public:
  RidgeRegressor(const Matrix& contexts, const std::vector<int>& actions, const Vector& targets,
                 int action_count, double l2 = 1e-3);
  Vector predict(const Eigen::Ref<const Vector>& context) const override;

 private:
  Matrix coefficients_;  // d x p
  Vector intercepts_;    // d
};

// Inverse of a Laplace-smoothed per-action frequency model, clipped to
// [eta_min, 1]. Context-independent.
class FrequencyInverseModel : public ActionValueModel {
 public:
  FrequencyInverseModel(const std::vector<int>& actions, int action_count, double eta_min);
  Vector predict(const Eigen::Ref<const Vector>& context) const override;

  const Vector& clipped_propensities() const { return propensities_; }

 private:
  Vector propensities_;
};

// Known-propensity bypass: reproduces 1/e_i exactly at every logged context
// (exact context match, nearest neighbor otherwise). All entries of the
// prediction carry the same inverse propensity, which is exact for the
// logged action.
class KnownPropensityModel : public ActionValueModel {
 public:
  KnownPropensityModel(const Matrix& contexts, const Vector& logged_propensities,
                       int action_count);
  Vector predict(const Eigen::Ref<const Vector>& context) const override;

 private:
  struct RowHash {
    std::size_t operator()(const std::vector<double>& row) const;
  };

  Matrix contexts_;
  Vector inverse_propensities_;
  int action_count_;
  std::unordered_map<std::vector<double>, Eigen::Index, RowHash> lookup_;
};

// Adapter wrapping an arbitrary callable as a fitted model; used to inject
// fixed nuisance functions.
class CallableModel : public ActionValueModel {
 public:
  using Fn = std::function<Vector(const Eigen::Ref<const Vector>&)>;
  explicit CallableModel(Fn fn) : fn_(std::move(fn)) {}
  Vector predict(const Eigen::Ref<const Vector>& context) const override { return fn_(context); }

 private:
  Fn fn_;
};

struct NuisanceFits {
  struct SourceFits {
    std::string source_id;
    std::vector<std::shared_ptr<const ActionValueModel>> mu_models;  // one per fold
    std::vector<std::shared_ptr<const ActionValueModel>> w_models;   // one per fold
  };

  NuisanceConfig::Mode mode = NuisanceConfig::Mode::estimated;
  int fold_count = 0;
  std::vector<SourceFits> sources;

  int source_index(const std::string& source_id) const;  // throws if unknown
};

// Fits mu and w models for every (source, fold) pair; the fold-k models are
// trained only on data outside fold k. In known_propensity mode the w side is
// taken from the logged propensities instead of being estimated.
NuisanceFits fit_nuisance(const ObservationalDataset& dataset,
                          const std::vector<FoldAssignment>& folds,
                          const NuisanceConfig& config);

Vector predict_mu(const NuisanceFits& fits, const std::string& source_id, int fold,
                  const Eigen::Ref<const Vector>& context);
Vector predict_w(const NuisanceFits& fits, const std::string& source_id, int fold,
                 const Eigen::Ref<const Vector>& context);

}  // namespace egopo
