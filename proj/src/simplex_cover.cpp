#include "egopo/simplex_cover.hpp"

#include "egopo/dataset_io.hpp"
#include "egopo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace egopo {

namespace {

// Enumerates all compositions (k_1,...,k_dims) of m and reports k/m.
void enumerate_grid(int dims, int m, std::vector<double>& prefix,
                    std::vector<std::vector<double>>& out) {
  const int position = static_cast<int>(prefix.size());
  int used = 0;
  for (double v : prefix) used += static_cast<int>(std::lround(v));
  if (position == dims - 1) {
    auto point = prefix;
    point.push_back(static_cast<double>(m - used));
    out.push_back(std::move(point));
    return;
  }
  for (int k = 0; k <= m - used; ++k) {
    prefix.push_back(static_cast<double>(k));
    enumerate_grid(dims, m, prefix, out);
    prefix.pop_back();
  }
}

std::vector<std::vector<double>> grid_compositions(int dims, int m) {
  std::vector<std::vector<double>> counts;
  std::vector<double> prefix;
  enumerate_grid(dims, m, prefix, counts);
  return counts;
}

void dedupe(std::vector<MixtureWeights>& points) {
  std::sort(points.begin(), points.end(), [](const MixtureWeights& a, const MixtureWeights& b) {
    for (Eigen::Index i = 0; i < a.size() && i < b.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return a.size() < b.size();
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const MixtureWeights& a, const MixtureWeights& b) {
                             return a.values == b.values;
                           }),
               points.end());
}

double l1_distance(const Vector& a, const Vector& b) { return (a - b).lpNorm<1>(); }

MixtureWeights sample_point(const WeightSetSpec& spec, Xoshiro256pp& rng) {
  switch (spec.kind) {
    case WeightSetSpec::Kind::full_simplex: {
      const auto coords = sample_simplex_uniform(rng, spec.num_sources);
      Vector v(spec.num_sources);
      for (int i = 0; i < spec.num_sources; ++i) v[i] = coords[static_cast<std::size_t>(i)];
      return MixtureWeights(std::move(v));
    }
    case WeightSetSpec::Kind::finite_list: {
      const auto pick = rng.uniform_int(spec.vertices.size());
      return spec.vertices[static_cast<std::size_t>(pick)];
    }
    case WeightSetSpec::Kind::vertex_hull: {
      const auto bary = sample_simplex_uniform(rng, static_cast<int>(spec.vertices.size()));
      Vector v = Vector::Zero(spec.num_sources);
      for (std::size_t j = 0; j < spec.vertices.size(); ++j) {
        v += bary[j] * spec.vertices[j].values;
      }
      return MixtureWeights(std::move(v));
    }
  }
  throw std::logic_error("unreachable weight-set kind");
}

}  // namespace

WeightSetSpec WeightSetSpec::full_simplex(int num_sources) {
  WeightSetSpec spec;
  spec.kind = Kind::full_simplex;
  spec.num_sources = num_sources;
  return spec;
}

WeightSetSpec WeightSetSpec::finite_list(std::vector<MixtureWeights> points) {
  WeightSetSpec spec;
  spec.kind = Kind::finite_list;
  spec.num_sources = points.empty() ? 0 : static_cast<int>(points.front().size());
  spec.vertices = std::move(points);
  return spec;
}

WeightSetSpec WeightSetSpec::vertex_hull(std::vector<MixtureWeights> vertices) {
  WeightSetSpec spec;
  spec.kind = Kind::vertex_hull;
  spec.num_sources = vertices.empty() ? 0 : static_cast<int>(vertices.front().size());
  spec.vertices = std::move(vertices);
  return spec;
}

void WeightSetSpec::validate() const {
  if (num_sources < 1) throw std::invalid_argument("weight set: need at least one source");
  if (kind != Kind::full_simplex) {
    if (vertices.empty()) {
      throw std::invalid_argument("weight set: finite_list/vertex_hull need at least one point");
    }
    for (const auto& point : vertices) {
      if (point.size() != num_sources) {
        throw std::invalid_argument("weight set: point dimension mismatch");
      }
      point.validate();
    }
  }
}

int cover_grid_resolution(int num_sources, double epsilon) {
  const int m = static_cast<int>(std::ceil(2.0 * (num_sources - 1) / epsilon));
  return std::max(m, 1);
}

std::uint64_t simplex_grid_size(int num_sources, int m) {
  // C(m + S - 1, S - 1)
  std::uint64_t result = 1;
  for (int i = 1; i <= num_sources - 1; ++i) {
    result = result * static_cast<std::uint64_t>(m + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

CoverSet build_cover(const WeightSetSpec& spec, double epsilon) {
  spec.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("cover: epsilon must be positive");

  CoverSet cover;
  cover.epsilon = epsilon;

  if (spec.kind == WeightSetSpec::Kind::finite_list) {
    cover.points = spec.vertices;
    dedupe(cover.points);
    return cover;
  }

  const int m = cover_grid_resolution(spec.num_sources, epsilon);
  if (spec.kind == WeightSetSpec::Kind::full_simplex) {
    if (spec.num_sources == 1) {
      cover.points.push_back(MixtureWeights(Vector::Ones(1)));
      return cover;
    }
    for (auto& counts : grid_compositions(spec.num_sources, m)) {
      Vector v(spec.num_sources);
      for (int i = 0; i < spec.num_sources; ++i) v[i] = counts[static_cast<std::size_t>(i)] / m;
      cover.points.push_back(MixtureWeights(std::move(v)));
    }
  } else {
    const int dims = static_cast<int>(spec.vertices.size());
    if (dims == 1) {
      cover.points.push_back(spec.vertices.front());
      return cover;
    }
    for (auto& counts : grid_compositions(dims, m)) {
      Vector v = Vector::Zero(spec.num_sources);
      for (int j = 0; j < dims; ++j) {
        v += (counts[static_cast<std::size_t>(j)] / m) * spec.vertices[static_cast<std::size_t>(j)].values;
      }
      cover.points.push_back(MixtureWeights(std::move(v)));
    }
    dedupe(cover.points);
  }
  for (const auto& point : cover.points) point.validate();
  return cover;
}

double certify_radius(CoverSet& cover, const WeightSetSpec& spec, int samples,
                      std::uint64_t seed) {
  spec.validate();
  if (cover.points.empty()) throw std::invalid_argument("cover: no points to certify");
  if (samples < 1) throw std::invalid_argument("cover: need at least one sample");

  Xoshiro256pp rng(derive_seed(seed, stream_tag::cover));
  double radius = 0.0;
  for (int s = 0; s < samples; ++s) {
    const MixtureWeights point = sample_point(spec, rng);
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& candidate : cover.points) {
      nearest = std::min(nearest, l1_distance(point.values, candidate.values));
      if (nearest == 0.0) break;
    }
    radius = std::max(radius, nearest);
  }
  cover.certified_radius = radius;
  return radius;
}

void save_cover_csv(const CoverSet& cover, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write cover file '" + path + "'");
  for (const auto& point : cover.points) {
    for (Eigen::Index i = 0; i < point.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(point[i]);
    }
    out << "\n";
  }
}

}  // namespace egopo
