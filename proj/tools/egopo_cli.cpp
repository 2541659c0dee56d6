// Command-line front end: simulate synthetic multi-source data, score it,
// train minimax policies, certify weight covers, and run full experiment
// sweeps. Every subcommand takes --config <json> and --out <dir>.

#include "egopo/aipw.hpp"
#include "egopo/dataset_io.hpp"
#include "egopo/harness.hpp"
#include "egopo/nuisance.hpp"
#include "egopo/rng.hpp"
#include "egopo/simplex_cover.hpp"
#include "egopo/simulator.hpp"
#include "egopo/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw egopo::ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_config(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const egopo::ConfigError&) {
    throw;
  } catch (const std::exception& error) {
    throw egopo::ConfigError(std::string("invalid config JSON: ") + error.what());
  }
}

template <typename T>
T require(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw egopo::ConfigError(std::string("config: missing required field '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const std::exception&) {
    throw egopo::ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const std::exception&) {
    throw egopo::ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

void run_simulate(const std::string& config_path, const std::string& out_dir) {
  const auto doc = parse_config(config_path);
  const int k = get_or<int>(doc, "num_sources", 3);
  const int d = get_or<int>(doc, "action_count", 2);
  const int q = get_or<int>(doc, "block_size", 4);
  const double sigma_theta_sq = get_or<double>(doc, "sigma_theta_sq", 5.0);
  const double sigma_sq = get_or<double>(doc, "sigma_sq", 1.0);
  const int n_total = require<int>(doc, "n_total");
  const auto seed = get_or<std::uint64_t>(doc, "seed", 0);

  auto params = egopo::sample_params(k, q, d, sigma_theta_sq, seed);
  for (auto& p : params) p.sigma_sq = sigma_sq;
  const auto sizes = egopo::allocate_sizes(n_total, k);
  const auto sims = egopo::simulate_sources(params, sizes, egopo::derive_seed(seed, 100));
  const auto dataset = egopo::make_dataset(sims);

  std::filesystem::create_directories(out_dir);
  egopo::save_dataset(dataset, out_dir + "/dataset.csv");

  json sidecar;
  sidecar["num_sources"] = k;
  sidecar["action_count"] = d;
  sidecar["block_size"] = q;
  sidecar["sigma_theta_sq"] = sigma_theta_sq;
  sidecar["sigma_sq"] = sigma_sq;
  sidecar["seed"] = seed;
  sidecar["sizes"] = sizes;
  json thetas = json::array();
  for (const auto& p : params) {
    thetas.push_back(std::vector<double>(p.theta.begin(), p.theta.end()));
  }
  sidecar["theta"] = std::move(thetas);
  std::ofstream side(out_dir + "/params.json");
  side << sidecar.dump(2) << "\n";
  std::cout << "wrote " << out_dir << "/dataset.csv (" << dataset.total_size() << " rows)\n";
}

void run_score(const std::string& config_path, const std::string& out_dir) {
  const auto doc = parse_config(config_path);
  const auto dataset_path = require<std::string>(doc, "dataset");
  const int action_count = get_or<int>(doc, "action_count", 0);
  egopo::NuisanceConfig nuisance;
  if (doc.contains("nuisance")) {
    nuisance = egopo::nuisance_config_from_json(doc.at("nuisance").dump());
  }

  const auto dataset = egopo::load_dataset(dataset_path, action_count);
  const auto scores = egopo::score_dataset(dataset, nuisance);

  std::filesystem::create_directories(out_dir);
  egopo::save_scores_csv(scores, out_dir + "/scores.csv");
  std::cout << "wrote " << out_dir << "/scores.csv (gamma_max "
            << egopo::format_double(scores.gamma_max) << ")\n";
}

void run_solve(const std::string& config_path, const std::string& out_dir) {
  const auto doc = parse_config(config_path);
  const auto dataset_path = require<std::string>(doc, "dataset");
  const int action_count = get_or<int>(doc, "action_count", 0);
  egopo::NuisanceConfig nuisance;
  if (doc.contains("nuisance")) {
    nuisance = egopo::nuisance_config_from_json(doc.at("nuisance").dump());
  }
  egopo::EgopoConfig solver_config;
  if (doc.contains("egopo")) {
    solver_config = egopo::egopo_config_from_json(doc.at("egopo").dump());
  }

  const auto dataset = egopo::load_dataset(dataset_path, action_count);
  const auto spec = doc.contains("cover")
                        ? egopo::weight_set_from_json(doc.at("cover").dump(),
                                                      static_cast<int>(dataset.sources.size()))
                        : egopo::WeightSetSpec::full_simplex(
                              static_cast<int>(dataset.sources.size()));

  const auto scores = egopo::score_dataset(dataset, nuisance);
  const auto cover = egopo::build_cover(spec, solver_config.epsilon);
  const auto result = egopo::run_egopo(dataset, scores, cover, solver_config);

  std::filesystem::create_directories(out_dir);
  egopo::save_egopo_result(result, out_dir + "/result.json", out_dir + "/traces.csv");
  egopo::save_policy(result.policy, out_dir + "/policy.json");
  if (get_or<bool>(doc, "export_scores", false)) {
    egopo::save_scores_csv(scores, out_dir + "/scores.csv");
  }
  std::cout << "trained over " << cover.points.size() << " cover points, T=" << result.horizon
            << "; wrote " << out_dir << "/policy.json\n";
}

void run_cover_check(const std::string& config_path, const std::string& out_dir) {
  const auto doc = parse_config(config_path);
  const double epsilon = get_or<double>(doc, "epsilon", 0.1);
  const int samples = get_or<int>(doc, "samples", 10000);
  const auto seed = get_or<std::uint64_t>(doc, "seed", 0);
  if (!doc.contains("cover")) throw egopo::ConfigError("config: missing 'cover'");
  const auto spec = egopo::weight_set_from_json(doc.at("cover").dump());

  auto cover = egopo::build_cover(spec, epsilon);
  const double radius = egopo::certify_radius(cover, spec, samples, seed);

  std::filesystem::create_directories(out_dir);
  egopo::save_cover_csv(cover, out_dir + "/cover.csv");
  json certificate;
  certificate["epsilon"] = epsilon;
  certificate["size"] = cover.points.size();
  certificate["samples"] = samples;
  certificate["seed"] = seed;
  certificate["certified_radius"] = radius;
  certificate["within_epsilon"] = radius <= epsilon;
  std::ofstream out(out_dir + "/certificate.json");
  out << certificate.dump(2) << "\n";
  std::cout << "cover size " << cover.points.size() << ", certified radius "
            << egopo::format_double(radius) << (radius <= epsilon ? " <= " : " > ") << epsilon
            << "\n";
}

void run_experiment_cmd(const std::string& config_path, const std::string& out_dir) {
  auto config = egopo::experiment_config_from_json(read_file(config_path));
  config.out_dir = out_dir;
  const auto curve = egopo::run_experiment(config);
  int failures = 0;
  for (const auto& row : curve.rows) failures += row.failed ? 1 : 0;
  std::cout << "wrote " << out_dir << "/regret_curve.csv (" << curve.rows.size() << " rows, "
            << failures << " failed cells)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multi-source offline policy learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";

  auto add = [&](const std::string& name, const std::string& description) {
    auto* cmd = app.add_subcommand(name, description);
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--out", out_dir, "Output directory");
    return cmd;
  };

  auto* simulate = add("simulate", "Generate a synthetic multi-source dataset CSV");
  auto* score = add("score", "Cross-fitted doubly robust scores for a dataset");
  auto* solve = add("solve", "Train the minimax policy on a dataset");
  auto* experiment = add("experiment", "Full regret-curve sweep with baselines");
  auto* cover_check = add("cover-check", "Build a weight cover and certify its radius");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) run_simulate(config_path, out_dir);
    if (score->parsed()) run_score(config_path, out_dir);
    if (solve->parsed()) run_solve(config_path, out_dir);
    if (experiment->parsed()) run_experiment_cmd(config_path, out_dir);
    if (cover_check->parsed()) run_cover_check(config_path, out_dir);
  } catch (const egopo::ConfigError& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  }
  return 0;
}
