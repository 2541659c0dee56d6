#include "egopo/metrics.hpp"

#include "egopo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace egopo {

namespace {

void check_skewness_inputs(const MixtureWeights& lambda, const MixtureWeights& n_bar) {
  lambda.validate();
  n_bar.validate();
  if (lambda.size() != n_bar.size()) {
    throw std::invalid_argument("skewness: dimension mismatch");
  }
  for (Eigen::Index s = 0; s < n_bar.size(); ++s) {
    if (n_bar[s] <= 0.0) {
      throw std::invalid_argument("skewness: sample distribution has a zero entry at source " +
                                  std::to_string(s));
    }
  }
}

// Draws source ~ lambda via inverse CDF, then one complete observation from
// that source; reports the potential outcome of the policy's action and, for
// the paired variant, of the reference's action on the same draw.
struct MixtureDraw {
  Vector context;
  std::vector<double> potential_outcomes;
};

MixtureDraw sample_mixture_draw(const std::vector<SourceGenParams>& dgp,
                                const MixtureWeights& lambda, Xoshiro256pp& pick_rng,
                                Xoshiro256pp& context_rng, Xoshiro256pp& outcome_rng) {
  const double u = pick_rng.uniform01();
  int source = static_cast<int>(lambda.size()) - 1;
  double cumulative = 0.0;
  for (Eigen::Index s = 0; s < lambda.size(); ++s) {
    cumulative += lambda[s];
    if (u < cumulative) {
      source = static_cast<int>(s);
      break;
    }
  }
  const auto& params = dgp[static_cast<std::size_t>(source)];
  MixtureDraw draw;
  draw.context.resize(params.context_dim());
  for (Eigen::Index j = 0; j < draw.context.size(); ++j) {
    draw.context[j] = context_rng.uniform(-1.0, 1.0);
  }
  const double noise_sd = std::sqrt(params.sigma_sq);
  draw.potential_outcomes.resize(static_cast<std::size_t>(params.d));
  for (int a = 0; a < params.d; ++a) {
    const double mu = params.mean_reward(draw.context, a);
    draw.potential_outcomes[static_cast<std::size_t>(a)] =
        noise_sd == 0.0 ? mu : outcome_rng.gaussian(mu, noise_sd);
  }
  return draw;
}

McEstimate summarize(double sum, double sum_sq, int n) {
  McEstimate estimate;
  estimate.mean = sum / n;
  const double variance = std::max(0.0, sum_sq / n - estimate.mean * estimate.mean);
  estimate.se = std::sqrt(variance / n);
  return estimate;
}

void check_dgp(const std::vector<SourceGenParams>& dgp, const MixtureWeights& lambda,
               int mc_samples) {
  if (dgp.empty()) throw std::invalid_argument("evaluation: empty generating process");
  if (static_cast<Eigen::Index>(dgp.size()) != lambda.size()) {
    throw std::invalid_argument("evaluation: lambda dimension does not match source count");
  }
  lambda.validate();
  for (const auto& params : dgp) params.validate();
  if (mc_samples < 1000) {
    throw std::invalid_argument("evaluation: mc_samples must be at least 1000");
  }
}

}  // namespace

double skewness(const MixtureWeights& lambda, const MixtureWeights& n_bar) {
  check_skewness_inputs(lambda, n_bar);
  double total = 0.0;
  for (Eigen::Index s = 0; s < lambda.size(); ++s) total += lambda[s] * lambda[s] / n_bar[s];
  return total;
}

std::pair<double, double> skewness_identity_check(const MixtureWeights& lambda,
                                                  const MixtureWeights& n_bar) {
  check_skewness_inputs(lambda, n_bar);
  double ratio_form = 0.0;
  double divergence_form = 0.0;
  for (Eigen::Index s = 0; s < lambda.size(); ++s) {
    ratio_form += lambda[s] * lambda[s] / n_bar[s];
    const double diff = lambda[s] - n_bar[s];
    divergence_form += diff * diff / n_bar[s];
  }
  return {ratio_form, 1.0 + divergence_form};
}

SkewnessReport make_skewness_report(const std::vector<MixtureWeights>& lambdas,
                                    const MixtureWeights& n_bar) {
  if (lambdas.empty()) throw std::invalid_argument("skewness: no target weights");
  SkewnessReport report;
  report.empirical_sample_dist = n_bar;
  report.mixture_agnostic = 0.0;
  for (const auto& lambda : lambdas) {
    const double value = skewness(lambda, n_bar);
    report.per_lambda.emplace_back(lambda, value);
    report.mixture_agnostic = std::max(report.mixture_agnostic, value);
  }
  return report;
}

McEstimate true_policy_value(const TreePolicy& policy, const std::vector<SourceGenParams>& dgp,
                             const MixtureWeights& lambda, int mc_samples, std::uint64_t seed) {
  check_dgp(dgp, lambda, mc_samples);
  Xoshiro256pp pick_rng(derive_seed(seed, stream_tag::eval, 1));
  Xoshiro256pp context_rng(derive_seed(seed, stream_tag::eval, 2));
  Xoshiro256pp outcome_rng(derive_seed(seed, stream_tag::eval, 3));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    const auto draw = sample_mixture_draw(dgp, lambda, pick_rng, context_rng, outcome_rng);
    const double value =
        draw.potential_outcomes[static_cast<std::size_t>(policy.evaluate(draw.context))];
    sum += value;
    sum_sq += value * value;
  }
  return summarize(sum, sum_sq, mc_samples);
}

McEstimate true_regret(const TreePolicy& policy, const std::vector<SourceGenParams>& dgp,
                       const MixtureWeights& lambda, const TreePolicy& reference_policy,
                       int mc_samples, std::uint64_t seed) {
  check_dgp(dgp, lambda, mc_samples);
  Xoshiro256pp pick_rng(derive_seed(seed, stream_tag::eval, 1));
  Xoshiro256pp context_rng(derive_seed(seed, stream_tag::eval, 2));
  Xoshiro256pp outcome_rng(derive_seed(seed, stream_tag::eval, 3));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    const auto draw = sample_mixture_draw(dgp, lambda, pick_rng, context_rng, outcome_rng);
    const double diff =
        draw.potential_outcomes[static_cast<std::size_t>(reference_policy.evaluate(draw.context))] -
        draw.potential_outcomes[static_cast<std::size_t>(policy.evaluate(draw.context))];
    sum += diff;
    sum_sq += diff * diff;
  }
  return summarize(sum, sum_sq, mc_samples);
}

}  // namespace egopo
