#pragma once

#include "egopo/data_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace egopo {

// Parameters of one synthetic source. Rewards are block-linear: action a reads
// coordinates [a*q, (a+1)*q) of the context, so p = d * q. Logging is uniform
// over actions.
struct SourceGenParams {
  Vector theta;           // length q
  double sigma_sq = 1.0;  // reward noise variance
  int q = 0;              // block size
  int d = 0;              // action count

  int context_dim() const { return d * q; }
  void validate() const;

  // mu(x; a) = x_a . theta where x_a is the a-th block of x.
  double mean_reward(const Eigen::Ref<const Vector>& context, int action) const;
};

// A generated source together with the full potential-outcome table, which
// only exists inside the simulator and is used for oracle-side evaluation.
struct SimulatedSource {
  SourceData observable;
  Matrix potential_outcomes;  // n_s x d, all Y(a)
  Matrix true_mu;             // n_s x d
};

// Independent theta ~ N(0, sigma_theta_sq I_q) per source.
std::vector<SourceGenParams> sample_params(int num_sources, int q, int d,
                                           double sigma_theta_sq, std::uint64_t seed);

// Contexts uniform on [-1,1]^p, actions uniform on [0,d), Gaussian rewards
// around the block-linear means. Context, action, and outcome draws use
// disjoint sub-streams of `seed` so the action stream never touches the
// outcome stream.
SimulatedSource generate_source(const SourceGenParams& params, int n_s, std::uint64_t seed,
                                const std::string& source_id = "");

// Equal split of n_total across sources, remainder to the lowest indices.
std::vector<int> allocate_sizes(int n_total, int num_sources);

// Assembles the observable parts into a dataset (source ids s0, s1, ...).
ObservationalDataset make_dataset(const std::vector<SimulatedSource>& sources);

// Convenience: one call producing all sources for a master seed. Source s
// uses sub-seed derive_seed(seed, s + 1).
std::vector<SimulatedSource> simulate_sources(const std::vector<SourceGenParams>& params,
                                              const std::vector<int>& sizes, std::uint64_t seed);

}  // namespace egopo
