#pragma once

#include "egopo/data_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace egopo {

// Description of the valid mixture-weight set.
struct WeightSetSpec {
  enum class Kind { full_simplex, finite_list, vertex_hull };

  Kind kind = Kind::full_simplex;
  int num_sources = 0;                  // dimension of the simplex
  std::vector<MixtureWeights> vertices;  // finite_list / vertex_hull only

  static WeightSetSpec full_simplex(int num_sources);
  static WeightSetSpec finite_list(std::vector<MixtureWeights> points);
  static WeightSetSpec vertex_hull(std::vector<MixtureWeights> vertices);

  void validate() const;
};

struct CoverSet {
  std::vector<MixtureWeights> points;
  double epsilon = 0.0;
  std::optional<double> certified_radius;
};

// Builds a finite set of weights within l1 distance epsilon of every point of
// the weight set. finite_list covers itself exactly; full_simplex uses the
// rational grid {k/m : sum k = m} with m = ceil(2(S-1)/epsilon); vertex_hull
// applies the same grid to barycentric coordinates over the given vertices.
CoverSet build_cover(const WeightSetSpec& spec, double epsilon);

// Empirical covering-radius certificate: the maximum, over `samples` points
// drawn uniformly from the weight set, of the l1 distance to the nearest
// cover point. Stores the result in cover.certified_radius and returns it.
double certify_radius(CoverSet& cover, const WeightSetSpec& spec, int samples,
                      std::uint64_t seed);

// Exact number of grid points of the full-simplex cover: C(m + S - 1, S - 1).
std::uint64_t simplex_grid_size(int num_sources, int m);

// Grid resolution used by build_cover for a given epsilon.
int cover_grid_resolution(int num_sources, double epsilon);

void save_cover_csv(const CoverSet& cover, const std::string& path);

}  // namespace egopo
