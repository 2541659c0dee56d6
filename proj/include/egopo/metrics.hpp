#pragma once

#include "egopo/data_model.hpp"
#include "egopo/simulator.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace egopo {

// Skewness of target weights lambda against the sample distribution n_bar:
// 1 + chi^2(lambda || n_bar), computed as sum_s lambda_s^2 / n_bar_s.
// Requires n_bar strictly positive.
double skewness(const MixtureWeights& lambda, const MixtureWeights& n_bar);

// Both algebraic routes to the same quantity: (sum lambda^2 / n_bar,
// 1 + sum (lambda - n_bar)^2 / n_bar). Callers assert agreement.
std::pair<double, double> skewness_identity_check(const MixtureWeights& lambda,
                                                  const MixtureWeights& n_bar);

struct SkewnessReport {
  std::vector<std::pair<MixtureWeights, double>> per_lambda;
  double mixture_agnostic = 0.0;  // max over per_lambda
  MixtureWeights empirical_sample_dist;
};

SkewnessReport make_skewness_report(const std::vector<MixtureWeights>& lambdas,
                                    const MixtureWeights& n_bar);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of the mixture policy value: sample a source from
// lambda, draw (X, Y(.)) from its generating process, read Y(pi(X)).
McEstimate true_policy_value(const TreePolicy& policy, const std::vector<SourceGenParams>& dgp,
                             const MixtureWeights& lambda, int mc_samples, std::uint64_t seed);

// value(reference) - value(policy) on common random draws, so shared noise
// cancels in the difference. The se is that of the paired difference.
McEstimate true_regret(const TreePolicy& policy, const std::vector<SourceGenParams>& dgp,
                       const MixtureWeights& lambda, const TreePolicy& reference_policy,
                       int mc_samples, std::uint64_t seed);

}  // namespace egopo
