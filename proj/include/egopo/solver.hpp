#pragma once

#include "egopo/aipw.hpp"
#include "egopo/data_model.hpp"
#include "egopo/simplex_cover.hpp"
#include "egopo/tree_oracle.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace egopo {

struct EgopoConfig {
  enum class IterateMode { last, uniform_average, best_worst_case };

  std::optional<int> horizon;  // explicit T; otherwise (n / skewness)^(1+alpha)
  int max_horizon = 2000;
  double alpha = 0.05;
  int depth = 2;
  std::optional<double> b_hat;  // explicit uniform regret bound; auto = 2 * gamma_max
  double epsilon = 0.1;         // cover granularity, used by callers building covers
  IterateMode iterate_mode = IterateMode::last;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware

  void validate() const;
};

struct EgopoResult {
  TreePolicy policy;                  // per iterate_mode
  std::vector<TreePolicy> iterates;   // pi^(1..T)
  Matrix rho_trace;                   // T x |cover|, adversary distribution per step
  Matrix gradient_trace;              // T x |cover|, empirical regrets per step
  Vector per_lambda_max;              // M_lambda, best value per cover point
  double eta = 0.0;
  double b_hat = 0.0;
  int horizon = 0;
};

// Q_lambda(pi) = sum_s (lambda_s / n_s) sum_i score_i(pi(x_i)).
double empirical_mixture_value(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                               const MixtureWeights& lambda, const TreePolicy& policy);

// Best achievable empirical mixture value per cover point, each found with
// one oracle call on the lambda-weighted pooled data.
Vector per_lambda_max_values(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                             const CoverSet& cover, int depth, int threads = 0);

// Oracle best response to the adversary distribution rho: one solve with
// per-example weight E_{lambda~rho}[lambda_s] / n_s.
TreePolicy best_response(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                         const CoverSet& cover, const Vector& rho, int depth);

// M_lambda - Q_lambda(pi); non-negative for policies in the searched class.
double empirical_mixture_regret(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                                const MixtureWeights& lambda, const TreePolicy& policy,
                                double lambda_max_value);

// Exponentiated-gradient play against oracle best responses: rho starts
// uniform over the cover, each round best-responds, observes the per-lambda
// regrets as gradients, and updates rho multiplicatively with learning rate
// eta = sqrt(log |cover| / (b_hat^2 T)). A singleton cover short-circuits to
// one oracle call.
EgopoResult run_egopo(const ObservationalDataset& dataset, const ScoreMatrix& scores,
                      const CoverSet& cover, const EgopoConfig& config);

// Result export: JSON (policy, eta, b_hat, per-lambda maxima) and the trace
// CSV `t,lambda_index,rho,gradient`.
std::string egopo_result_to_json(const EgopoResult& result);
void save_egopo_result(const EgopoResult& result, const std::string& json_path,
                       const std::string& trace_csv_path);

}  // namespace egopo
