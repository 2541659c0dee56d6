#pragma once

#include "egopo/aipw.hpp"
#include "egopo/data_model.hpp"
#include "egopo/metrics.hpp"
#include "egopo/nuisance.hpp"
#include "egopo/simplex_cover.hpp"
#include "egopo/simulator.hpp"
#include "egopo/solver.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace egopo {

// Bad or missing configuration; the CLI maps this to exit code 1.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  enum class SourceBaselineSize { total, local };

  int num_sources = 3;
  int action_count = 2;
  int block_size = 4;          // q; context dim is action_count * block_size
  double sigma_theta_sq = 5.0;
  double sigma_sq = 1.0;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> sample_grid = {50, 100, 150, 200, 250, 300, 350, 400, 450, 500};

  struct Target {
    std::string name;
    MixtureWeights weights;
  };
  std::vector<Target> targets;  // default e1 and (0.9, 0.05, ..., 0.05)

  EgopoConfig egopo;
  NuisanceConfig nuisance;  // experiments default to known-propensity mode
  int reference_training_n = 2000;
  int mc_samples = 50000;
  SourceBaselineSize source_baseline_size = SourceBaselineSize::total;

  std::string out_dir;  // empty = no files written
  bool emit_plots = true;
  bool export_scores = false;

  ExperimentConfig() { nuisance.mode = NuisanceConfig::Mode::known_propensity; }

  // Fills empty targets with the defaults above and checks consistency.
  void finalize();
};

struct RegretCurve {
  struct Row {
    int n = 0;
    std::uint64_t seed = 0;
    std::string policy_name;
    std::string target_name;
    double regret = 0.0;
    double se = 0.0;
    bool failed = false;
    std::string message;
  };
  std::vector<Row> rows;
};

// Folds, nuisance fits, and cross-fitted scores in one step.
ScoreMatrix score_dataset(const ObservationalDataset& dataset, const NuisanceConfig& config);

struct BaselinePolicies {
  TreePolicy aggregate;
  TreePolicy source;
};

// aggregate: one oracle call on the pooled data with uniform weight 1/n.
// source: one oracle call on the provided single-source data with uniform
// weight. Both use the same tree depth.
BaselinePolicies train_baselines(const ObservationalDataset& pooled,
                                 const ScoreMatrix& pooled_scores,
                                 const ObservationalDataset& source_data,
                                 const ScoreMatrix& source_scores, int depth);

// Full pipeline: for each grid point and seed, simulate, score, train EG-OPO
// and baselines, train per-target reference policies on fresh target-mixture
// samples, and evaluate true regrets by Monte Carlo with common random
// numbers. A failed cell records one failure row and the run continues.
RegretCurve run_experiment(const ExperimentConfig& config);

void write_regret_csv(const RegretCurve& curve, const std::string& path);

// Rolling mean (window 3) with standard-deviation bands, one SVG per target.
void write_regret_plot_svg(const RegretCurve& curve, const std::string& target_name,
                           const std::string& path);

// JSON parsing for the CLI configs; throws ConfigError on any defect.
NuisanceConfig nuisance_config_from_json(const std::string& text);
EgopoConfig egopo_config_from_json(const std::string& text);
WeightSetSpec weight_set_from_json(const std::string& text, int default_num_sources = 0);
ExperimentConfig experiment_config_from_json(const std::string& text);

}  // namespace egopo
