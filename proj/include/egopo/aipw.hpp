#pragma once

#include "egopo/data_model.hpp"
#include "egopo/nuisance.hpp"
#include "egopo/simulator.hpp"

#include <string>
#include <vector>

namespace egopo {

// Doubly robust per-observation action scores, one n_s x d block per source.
struct ScoreMatrix {
  enum class Provenance { oracle, cross_fitted };

  struct PerSource {
    std::string source_id;
    Matrix scores;  // n_s x d
  };

  std::vector<PerSource> sources;
  Provenance provenance = Provenance::cross_fitted;
  double gamma_max = 0.0;  // max |entry| across all sources

  Eigen::Index total_size() const;
  void validate() const;
};

// Cross-fitted scores: for point i of source s scored at action a,
//   mu(x_i; a) + (y_i - mu(x_i; a)) * w(x_i; a) * 1{a_i = a},
// with the fold-k models of the fold containing i.
ScoreMatrix compute_aipw_scores(const ObservationalDataset& dataset, const NuisanceFits& fits,
                                const std::vector<FoldAssignment>& folds);

// Scores built from the simulator's true nuisances and potential outcomes;
// test-side ground truth only.
ScoreMatrix compute_oracle_scores(const std::vector<SimulatedSource>& sources);

// Diagnostic CSV: source,i,gamma_0,...,gamma_{d-1}
void save_scores_csv(const ScoreMatrix& scores, const std::string& path);

}  // namespace egopo
