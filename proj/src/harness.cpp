#include "egopo/harness.hpp"

#include "egopo/dataset_io.hpp"
#include "egopo/rng.hpp"
#include "egopo/tree_oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace egopo {

namespace {

// Sub-stream tags for seed derivation inside a (seed, n) cell.
constexpr std::uint64_t kDataStream = 100;
constexpr std::uint64_t kNuisanceStream = 101;
constexpr std::uint64_t kSourceBaselineStream = 102;
constexpr std::uint64_t kEvalStream = 200;
constexpr std::uint64_t kReferenceStream = 300;

std::string sanitize_message(std::string message) {
  for (char& c : message) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return message;
}

ObservationalDataset sample_mixture_dataset(const std::vector<SourceGenParams>& params,
                                            const MixtureWeights& lambda, int n,
                                            std::uint64_t seed) {
  Xoshiro256pp pick_rng(derive_seed(seed, stream_tag::eval, 99));
  std::vector<int> counts(params.size(), 0);
  for (int i = 0; i < n; ++i) {
    const double u = pick_rng.uniform01();
    int source = static_cast<int>(params.size()) - 1;
    double cumulative = 0.0;
    for (Eigen::Index s = 0; s < lambda.size(); ++s) {
      cumulative += lambda[s];
      if (u < cumulative) {
        source = static_cast<int>(s);
        break;
      }
    }
    ++counts[static_cast<std::size_t>(source)];
  }
  std::vector<SimulatedSource> sims;
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (counts[s] == 0) continue;
    sims.push_back(generate_source(params[s], counts[s], derive_seed(seed, s + 1),
                                   "s" + std::to_string(s)));
  }
  if (sims.empty()) throw std::runtime_error("reference sampling produced no data");
  return make_dataset(sims);
}

WeightedExamples pooled_examples(const ObservationalDataset& dataset, const ScoreMatrix& scores) {
  const auto n = dataset.total_size();
  WeightedExamples examples;
  examples.contexts.resize(n, dataset.context_dim);
  examples.score_rows.resize(n, dataset.action_count);
  examples.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < dataset.sources.size(); ++s) {
    const auto& source = dataset.sources[s];
    for (Eigen::Index i = 0; i < source.size(); ++i, ++row) {
      examples.contexts.row(row) = source.contexts.row(i);
      examples.score_rows.row(row) = scores.sources[s].scores.row(i);
    }
  }
  return examples;
}

struct CellOutput {
  std::vector<RegretCurve::Row> rows;
};

CellOutput run_cell(const ExperimentConfig& config, const CoverSet& cover, int n,
                    std::uint64_t seed) {
  const int k = config.num_sources;
  const auto sizes = allocate_sizes(n, k);

  auto params = sample_params(k, config.block_size, config.action_count, config.sigma_theta_sq,
                              seed);
  for (auto& p : params) p.sigma_sq = config.sigma_sq;

  const auto sims = simulate_sources(params, sizes,
                                     derive_seed(seed, kDataStream, static_cast<std::uint64_t>(n)));
  const auto dataset = make_dataset(sims);

  NuisanceConfig nuisance = config.nuisance;
  nuisance.seed = derive_seed(seed, kNuisanceStream, static_cast<std::uint64_t>(n));
  const auto scores = score_dataset(dataset, nuisance);

  const auto eg_result = run_egopo(dataset, scores, cover, config.egopo);

  const int source_n = config.source_baseline_size == ExperimentConfig::SourceBaselineSize::total
                           ? n
                           : sizes.front();
  const auto source_sim = generate_source(
      params.front(), source_n,
      derive_seed(seed, kSourceBaselineStream, static_cast<std::uint64_t>(n)), "s0");
  const auto source_dataset = make_dataset({source_sim});
  NuisanceConfig source_nuisance = nuisance;
  source_nuisance.seed = derive_seed(seed, kSourceBaselineStream + 1,
                                     static_cast<std::uint64_t>(n));
  const auto source_scores = score_dataset(source_dataset, source_nuisance);

  const auto baselines =
      train_baselines(dataset, scores, source_dataset, source_scores, config.egopo.depth);

  CellOutput output;
  for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
    const auto& target = config.targets[ti];

    const auto reference_seed = derive_seed(seed, kReferenceStream + ti,
                                            static_cast<std::uint64_t>(n));
    const auto reference_data =
        sample_mixture_dataset(params, target.weights, config.reference_training_n, reference_seed);
    NuisanceConfig reference_nuisance = nuisance;
    reference_nuisance.seed = derive_seed(reference_seed, kNuisanceStream);
    const auto reference_scores = score_dataset(reference_data, reference_nuisance);
    const auto reference_policy =
        solve_opo(pooled_examples(reference_data, reference_scores), config.egopo.depth).policy;

    const auto eval_seed = derive_seed(seed, kEvalStream + ti, static_cast<std::uint64_t>(n));
    const std::pair<std::string, const TreePolicy*> entries[] = {
        {"egopo", &eg_result.policy},
        {"aggregate", &baselines.aggregate},
        {"source", &baselines.source},
    };
    for (const auto& [name, policy] : entries) {
      const auto estimate = true_regret(*policy, params, target.weights, reference_policy,
                                        config.mc_samples, eval_seed);
      RegretCurve::Row row;
      row.n = n;
      row.seed = seed;
      row.policy_name = name;
      row.target_name = target.name;
      row.regret = estimate.mean;
      row.se = estimate.se;
      output.rows.push_back(std::move(row));
    }
  }
  return output;
}

}  // namespace

void ExperimentConfig::finalize() {
  if (num_sources < 1) throw ConfigError("experiment: num_sources must be >= 1");
  if (action_count < 2) throw ConfigError("experiment: action_count must be >= 2");
  if (block_size < 1) throw ConfigError("experiment: block_size must be >= 1");
  if (!(sigma_theta_sq >= 0.0) || !(sigma_sq >= 0.0)) {
    throw ConfigError("experiment: variances must be non-negative");
  }
  if (sample_grid.empty()) throw ConfigError("experiment: sample grid is empty");
  if (seeds.empty()) throw ConfigError("experiment: seed list is empty");
  for (int n : sample_grid) {
    if (n < num_sources) {
      throw ConfigError("experiment: grid point " + std::to_string(n) +
                        " below the source count");
    }
  }
  if (reference_training_n < num_sources) {
    throw ConfigError("experiment: reference_training_n too small");
  }
  if (mc_samples < 1000) throw ConfigError("experiment: mc_samples must be at least 1000");

  if (targets.empty()) {
    targets.push_back({"e1", MixtureWeights::degenerate(num_sources, 0)});
    if (num_sources > 1) {
      Vector near = Vector::Constant(num_sources, 0.1 / (num_sources - 1));
      near[0] = 0.9;
      targets.push_back({"near_e1", MixtureWeights(std::move(near))});
    }
  }
  for (const auto& target : targets) {
    if (target.name.empty()) throw ConfigError("experiment: target with empty name");
    if (target.weights.size() != num_sources || !target.weights.is_valid()) {
      throw ConfigError("experiment: target '" + target.name + "' has invalid weights");
    }
  }
  egopo.validate();
}

ScoreMatrix score_dataset(const ObservationalDataset& dataset, const NuisanceConfig& config) {
  const auto folds = assign_folds(dataset, config);
  const auto fits = fit_nuisance(dataset, folds, config);
  return compute_aipw_scores(dataset, fits, folds);
}

BaselinePolicies train_baselines(const ObservationalDataset& pooled,
                                 const ScoreMatrix& pooled_scores,
                                 const ObservationalDataset& source_data,
                                 const ScoreMatrix& source_scores, int depth) {
  BaselinePolicies baselines;
  baselines.aggregate = solve_opo(pooled_examples(pooled, pooled_scores), depth).policy;
  baselines.source = solve_opo(pooled_examples(source_data, source_scores), depth).policy;
  return baselines;
}

RegretCurve run_experiment(const ExperimentConfig& input_config) {
  ExperimentConfig config = input_config;
  config.finalize();

  const auto cover = build_cover(WeightSetSpec::full_simplex(config.num_sources),
                                 config.egopo.epsilon);

  RegretCurve curve;
  for (int n : config.sample_grid) {
    for (std::uint64_t seed : config.seeds) {
      try {
        auto output = run_cell(config, cover, n, seed);
        for (auto& row : output.rows) curve.rows.push_back(std::move(row));
      } catch (const std::exception& error) {
        RegretCurve::Row row;
        row.n = n;
        row.seed = seed;
        row.policy_name = "failure";
        row.failed = true;
        row.message = sanitize_message(error.what());
        curve.rows.push_back(std::move(row));
      }
    }
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_regret_csv(curve, config.out_dir + "/regret_curve.csv");
    if (config.emit_plots) {
      for (const auto& target : config.targets) {
        write_regret_plot_svg(curve, target.name,
                              config.out_dir + "/regret_" + target.name + ".svg");
      }
    }
  }
  return curve;
}

void write_regret_csv(const RegretCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write regret file '" + path + "'");
  out << "n,seed,policy,target,regret,se,message\n";
  for (const auto& row : curve.rows) {
    out << row.n << ',' << row.seed << ',' << row.policy_name << ',' << row.target_name << ',';
    if (row.failed) {
      out << ",," << row.message;
    } else {
      out << format_double(row.regret) << ',' << format_double(row.se) << ',';
    }
    out << "\n";
  }
}

namespace {

struct Series {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> band;
};

// Rolling statistics over a window of three grid points, pooling seeds.
Series rolling_series(const RegretCurve& curve, const std::string& policy,
                      const std::string& target, const std::vector<int>& grid) {
  Series series;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> window;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j < std::min(grid.size(), i + 2); ++j) {
      for (const auto& row : curve.rows) {
        if (!row.failed && row.policy_name == policy && row.target_name == target &&
            row.n == grid[j]) {
          window.push_back(row.regret);
        }
      }
    }
    if (window.empty()) continue;
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(window.size());
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(window.size());
    series.x.push_back(static_cast<double>(grid[i]));
    series.mean.push_back(mean);
    series.band.push_back(std::sqrt(var));
  }
  return series;
}

std::string svg_polyline(const std::vector<std::pair<double, double>>& points,
                         const std::string& color, double width, double opacity) {
  std::ostringstream out;
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
      << "\" stroke-opacity=\"" << opacity << "\" points=\"";
  for (const auto& [x, y] : points) out << x << ',' << y << ' ';
  out << "\"/>\n";
  return out.str();
}

}  // namespace

void write_regret_plot_svg(const RegretCurve& curve, const std::string& target_name,
                           const std::string& path) {
  std::set<int> grid_set;
  for (const auto& row : curve.rows) {
    if (!row.failed && row.target_name == target_name) grid_set.insert(row.n);
  }
  const std::vector<int> grid(grid_set.begin(), grid_set.end());
  if (grid.empty()) return;

  const std::vector<std::pair<std::string, std::string>> palette = {
      {"egopo", "#1f77b4"}, {"aggregate", "#d62728"}, {"source", "#2ca02c"}};

  const double width = 640, height = 420;
  const double left = 64, right = 24, top = 40, bottom = 48;

  std::map<std::string, Series> all;
  double y_min = 0.0, y_max = 1e-12;
  for (const auto& [policy, color] : palette) {
    auto series = rolling_series(curve, policy, target_name, grid);
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      y_min = std::min(y_min, series.mean[i] - series.band[i]);
      y_max = std::max(y_max, series.mean[i] + series.band[i]);
    }
    all[policy] = std::move(series);
  }
  const double x_min = grid.front(), x_max = std::max(grid.back(), grid.front() + 1);
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const auto sx = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  };
  const auto sy = [&](double y) {
    return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plot file '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << ' ' << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";

  nlohmann::json embedded;
  for (const auto& [policy, series] : all) {
    embedded[policy] = {{"n", series.x}, {"mean", series.mean}, {"sd", series.band}};
  }
  out << "<metadata>" << embedded.dump() << "</metadata>\n";

  out << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << "true regret vs training samples (" << target_name << ")</text>\n";

  // axes
  out << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double xv = x_min + tick * (x_max - x_min) / 5;
    const double yv = y_min + tick * (y_max - y_min) / 5;
    out << "<text x=\"" << sx(xv) << "\" y=\"" << height - bottom + 16
        << "\" text-anchor=\"middle\">" << static_cast<int>(std::lround(xv)) << "</text>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%.3g", yv);
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">"
        << label << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << sy(yv) << "\" x2=\"" << width - right
        << "\" y2=\"" << sy(yv) << "\" stroke=\"#dddddd\"/>\n";
  }
  out << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">training samples n</text>\n";

  double legend_y = top + 4;
  for (const auto& [policy, color] : palette) {
    const auto& series = all[policy];
    if (series.x.empty()) continue;
    std::vector<std::pair<double, double>> line;
    std::ostringstream band;
    band << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      line.emplace_back(sx(series.x[i]), sy(series.mean[i]));
      band << sx(series.x[i]) << ',' << sy(series.mean[i] + series.band[i]) << ' ';
    }
    for (std::size_t i = series.x.size(); i-- > 0;) {
      band << sx(series.x[i]) << ',' << sy(series.mean[i] - series.band[i]) << ' ';
    }
    band << "\"/>\n";
    out << band.str();
    out << svg_polyline(line, color, 2.0, 1.0);
    out << "<rect x=\"" << width - right - 130 << "\" y=\"" << legend_y - 9
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << width - right - 114 << "\" y=\"" << legend_y + 1 << "\">" << policy
        << "</text>\n";
    legend_y += 18;
  }
  out << "</svg>\n";
}

namespace {

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const std::exception& error) {
    throw ConfigError(std::string("config: invalid JSON: ") + error.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

MixtureWeights weights_from_json(const nlohmann::json& array) {
  if (!array.is_array() || array.empty()) throw ConfigError("config: weights must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(array.size()));
  for (std::size_t i = 0; i < array.size(); ++i) v[static_cast<Eigen::Index>(i)] = array[i].get<double>();
  MixtureWeights weights(std::move(v));
  if (!weights.is_valid()) throw ConfigError("config: weights must be a simplex point");
  return weights;
}

NuisanceConfig nuisance_from_doc(const nlohmann::json& doc,
                                 const NuisanceConfig& defaults = NuisanceConfig{}) {
  NuisanceConfig config = defaults;
  const auto mode = get_or<std::string>(
      doc, "mode",
      config.mode == NuisanceConfig::Mode::known_propensity ? "known_propensity" : "estimated");
  if (mode == "estimated") {
    config.mode = NuisanceConfig::Mode::estimated;
  } else if (mode == "known_propensity") {
    config.mode = NuisanceConfig::Mode::known_propensity;
  } else {
    throw ConfigError("config: nuisance mode must be 'estimated' or 'known_propensity'");
  }
  config.folds = get_or<int>(doc, "folds", config.folds);
  if (config.folds < 1) throw ConfigError("config: folds must be >= 1");
  const auto regressor = get_or<std::string>(doc, "regressor", "knn");
  if (regressor == "knn") {
    config.regressor = NuisanceConfig::Regressor::knn;
  } else if (regressor == "ridge") {
    config.regressor = NuisanceConfig::Regressor::ridge;
  } else {
    throw ConfigError("config: regressor must be 'knn' or 'ridge'");
  }
  config.eta_min = get_or<double>(doc, "eta_min", config.eta_min);
  if (!(config.eta_min > 0.0 && config.eta_min <= 1.0)) {
    throw ConfigError("config: eta_min must be in (0, 1]");
  }
  config.seed = get_or<std::uint64_t>(doc, "seed", config.seed);
  return config;
}

EgopoConfig egopo_from_doc(const nlohmann::json& doc) {
  EgopoConfig config;
  if (doc.contains("T") && !doc.at("T").is_null()) config.horizon = doc.at("T").get<int>();
  config.max_horizon = get_or<int>(doc, "max_T", config.max_horizon);
  config.alpha = get_or<double>(doc, "alpha", config.alpha);
  config.depth = get_or<int>(doc, "depth", config.depth);
  config.epsilon = get_or<double>(doc, "epsilon", config.epsilon);
  config.seed = get_or<std::uint64_t>(doc, "seed", config.seed);
  config.threads = get_or<int>(doc, "threads", config.threads);
  if (doc.contains("b_hat")) {
    const auto& b = doc.at("b_hat");
    const auto mode = get_or<std::string>(b, "mode", "auto");
    if (mode == "explicit") {
      config.b_hat = b.at("value").get<double>();
    } else if (mode != "auto") {
      throw ConfigError("config: b_hat mode must be 'auto' or 'explicit'");
    }
  }
  const auto iterate = get_or<std::string>(doc, "iterate_mode", "last");
  if (iterate == "last") {
    config.iterate_mode = EgopoConfig::IterateMode::last;
  } else if (iterate == "uniform_average") {
    config.iterate_mode = EgopoConfig::IterateMode::uniform_average;
  } else if (iterate == "best_worst_case") {
    config.iterate_mode = EgopoConfig::IterateMode::best_worst_case;
  } else {
    throw ConfigError("config: unknown iterate_mode '" + iterate + "'");
  }
  try {
    config.validate();
  } catch (const std::exception& error) {
    throw ConfigError(error.what());
  }
  return config;
}

}  // namespace

NuisanceConfig nuisance_config_from_json(const std::string& text) {
  return nuisance_from_doc(parse_json(text));
}

EgopoConfig egopo_config_from_json(const std::string& text) {
  return egopo_from_doc(parse_json(text));
}

WeightSetSpec weight_set_from_json(const std::string& text, int default_num_sources) {
  const auto doc = parse_json(text);
  const auto kind = get_or<std::string>(doc, "kind", "full_simplex");
  try {
    if (kind == "full_simplex") {
      const int num_sources = get_or<int>(doc, "num_sources", default_num_sources);
      if (num_sources < 1) throw ConfigError("config: weight set needs num_sources >= 1");
      return WeightSetSpec::full_simplex(num_sources);
    }
    std::vector<MixtureWeights> points;
    const char* key = kind == "finite_list" ? "points" : "vertices";
    if (!doc.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
    for (const auto& entry : doc.at(key)) points.push_back(weights_from_json(entry));
    if (kind == "finite_list") return WeightSetSpec::finite_list(std::move(points));
    if (kind == "vertex_hull") return WeightSetSpec::vertex_hull(std::move(points));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& error) {
    throw ConfigError(std::string("config: bad weight set: ") + error.what());
  }
  throw ConfigError("config: unknown weight set kind '" + kind + "'");
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const auto doc = parse_json(text);
  ExperimentConfig config;
  config.num_sources = get_or<int>(doc, "num_sources", config.num_sources);
  config.action_count = get_or<int>(doc, "action_count", config.action_count);
  config.block_size = get_or<int>(doc, "block_size", config.block_size);
  config.sigma_theta_sq = get_or<double>(doc, "sigma_theta_sq", config.sigma_theta_sq);
  config.sigma_sq = get_or<double>(doc, "sigma_sq", config.sigma_sq);
  config.seeds = get_or<std::vector<std::uint64_t>>(doc, "seeds", config.seeds);
  config.sample_grid = get_or<std::vector<int>>(doc, "sample_grid", config.sample_grid);
  if (doc.contains("targets")) {
    config.targets.clear();
    for (const auto& entry : doc.at("targets")) {
      ExperimentConfig::Target target;
      target.name = entry.at("name").get<std::string>();
      target.weights = weights_from_json(entry.at("weights"));
      config.targets.push_back(std::move(target));
    }
    if (config.targets.empty()) throw ConfigError("config: targets must be non-empty");
  }
  if (doc.contains("egopo")) config.egopo = egopo_from_doc(doc.at("egopo"));
  if (doc.contains("nuisance")) {
    config.nuisance = nuisance_from_doc(doc.at("nuisance"), config.nuisance);
  }
  config.reference_training_n = get_or<int>(doc, "reference_training_n",
                                            config.reference_training_n);
  config.mc_samples = get_or<int>(doc, "mc_samples", config.mc_samples);
  const auto baseline = get_or<std::string>(doc, "source_baseline_size", "total");
  if (baseline == "total") {
    config.source_baseline_size = ExperimentConfig::SourceBaselineSize::total;
  } else if (baseline == "local") {
    config.source_baseline_size = ExperimentConfig::SourceBaselineSize::local;
  } else {
    throw ConfigError("config: source_baseline_size must be 'total' or 'local'");
  }
  config.emit_plots = get_or<bool>(doc, "emit_plots", config.emit_plots);
  config.export_scores = get_or<bool>(doc, "export_scores", config.export_scores);
  try {
    config.finalize();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& error) {
    throw ConfigError(error.what());
  }
  return config;
}

}  // namespace egopo
