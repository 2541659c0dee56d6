#include "egopo/simulator.hpp"

#include "egopo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace egopo {

void SourceGenParams::validate() const {
  if (q < 1) throw std::invalid_argument("simulator: block size q must be positive");
  if (d < 2) throw std::invalid_argument("simulator: need at least two actions");
  if (!(sigma_sq >= 0.0)) throw std::invalid_argument("simulator: sigma_sq must be >= 0");
  if (theta.size() != q) throw std::invalid_argument("simulator: theta length must equal q");
}

double SourceGenParams::mean_reward(const Eigen::Ref<const Vector>& context, int action) const {
  return context.segment(static_cast<Eigen::Index>(action) * q, q).dot(theta);
}

std::vector<SourceGenParams> sample_params(int num_sources, int q, int d,
                                           double sigma_theta_sq, std::uint64_t seed) {
  if (num_sources < 1) throw std::invalid_argument("simulator: need at least one source");
  if (q < 1 || d < 2) throw std::invalid_argument("simulator: bad dimensions");
  if (!(sigma_theta_sq >= 0.0)) {
    throw std::invalid_argument("simulator: sigma_theta_sq must be >= 0");
  }
  const double sd = std::sqrt(sigma_theta_sq);
  std::vector<SourceGenParams> params;
  params.reserve(static_cast<std::size_t>(num_sources));
  for (int s = 0; s < num_sources; ++s) {
    Xoshiro256pp rng(derive_seed(seed, stream_tag::params, static_cast<std::uint64_t>(s)));
    SourceGenParams p;
    p.q = q;
    p.d = d;
    p.sigma_sq = 1.0;
    p.theta.resize(q);
    for (int j = 0; j < q; ++j) p.theta[j] = rng.gaussian(0.0, sd);
    params.push_back(std::move(p));
  }
  return params;
}

SimulatedSource generate_source(const SourceGenParams& params, int n_s, std::uint64_t seed,
                                const std::string& source_id) {
  params.validate();
  if (n_s < 1) throw std::invalid_argument("simulator: n_s must be positive");

  const int p = params.context_dim();
  const int d = params.d;
  const double noise_sd = std::sqrt(params.sigma_sq);

  Xoshiro256pp context_rng(derive_seed(seed, stream_tag::contexts));
  Xoshiro256pp action_rng(derive_seed(seed, stream_tag::actions));
  Xoshiro256pp outcome_rng(derive_seed(seed, stream_tag::outcomes));

  SimulatedSource source;
  source.observable.source_id = source_id;
  source.observable.contexts.resize(n_s, p);
  source.observable.actions.resize(static_cast<std::size_t>(n_s));
  source.observable.rewards.resize(n_s);
  source.observable.logged_propensities = Vector::Constant(n_s, 1.0 / d);
  source.potential_outcomes.resize(n_s, d);
  source.true_mu.resize(n_s, d);

  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < p; ++j) source.observable.contexts(i, j) = context_rng.uniform(-1.0, 1.0);
    const int action = static_cast<int>(action_rng.uniform_int(static_cast<std::uint64_t>(d)));
    source.observable.actions[static_cast<std::size_t>(i)] = action;
    for (int a = 0; a < d; ++a) {
      const double mu = params.mean_reward(source.observable.contexts.row(i).transpose(), a);
      source.true_mu(i, a) = mu;
      source.potential_outcomes(i, a) = noise_sd == 0.0 ? mu : outcome_rng.gaussian(mu, noise_sd);
    }
    source.observable.rewards[i] = source.potential_outcomes(i, action);
  }
  return source;
}

std::vector<int> allocate_sizes(int n_total, int num_sources) {
  if (num_sources < 1) throw std::invalid_argument("simulator: need at least one source");
  if (n_total < num_sources) {
    throw std::invalid_argument("simulator: n_total " + std::to_string(n_total) +
                                " below source count " + std::to_string(num_sources));
  }
  std::vector<int> sizes(static_cast<std::size_t>(num_sources), n_total / num_sources);
  for (int s = 0; s < n_total % num_sources; ++s) ++sizes[static_cast<std::size_t>(s)];
  return sizes;
}

ObservationalDataset make_dataset(const std::vector<SimulatedSource>& sources) {
  if (sources.empty()) throw std::invalid_argument("simulator: no sources");
  ObservationalDataset dataset;
  dataset.context_dim = static_cast<int>(sources.front().observable.contexts.cols());
  dataset.action_count = static_cast<int>(sources.front().potential_outcomes.cols());
  for (std::size_t s = 0; s < sources.size(); ++s) {
    SourceData data = sources[s].observable;
    if (data.source_id.empty()) data.source_id = "s" + std::to_string(s);
    dataset.sources.push_back(std::move(data));
  }
  dataset.validate();
  return dataset;
}

std::vector<SimulatedSource> simulate_sources(const std::vector<SourceGenParams>& params,
                                              const std::vector<int>& sizes, std::uint64_t seed) {
  if (params.size() != sizes.size()) {
    throw std::invalid_argument("simulator: params/sizes length mismatch");
  }
  std::vector<SimulatedSource> sources;
  sources.reserve(params.size());
  for (std::size_t s = 0; s < params.size(); ++s) {
    sources.push_back(generate_source(params[s], sizes[s],
                                      derive_seed(seed, s + 1),
                                      "s" + std::to_string(s)));
  }
  return sources;
}

}  // namespace egopo
