#include "egopo/dataset_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace egopo {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, Eigen::Index row, const char* what) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("row " + std::to_string(row) + ": cannot parse " + what +
                                " '" + text + "'");
  }
}

long parse_integer(const std::string& text, Eigen::Index row, const char* what) {
  try {
    std::size_t consumed = 0;
    const long value = std::stol(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("row " + std::to_string(row) + ": cannot parse " + what +
                                " '" + text + "'");
  }
}

struct RawSource {
  std::string id;
  std::vector<std::vector<double>> contexts;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> propensities;
};

}  // namespace

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    if (std::stod(buffer) == value) return buffer;
  }
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

ObservationalDataset load_dataset(const std::string& path, int expected_action_count) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 4 || header.front() != "source") {
    throw std::invalid_argument("bad header: expected source,x0,...,action,reward[,propensity]");
  }
  bool has_propensity = header.back() == "propensity";
  const std::size_t fixed_columns = has_propensity ? 3 : 2;  // action,reward[,propensity]
  const int p = static_cast<int>(header.size() - 1 - fixed_columns);
  if (p < 1) throw std::invalid_argument("bad header: no context columns");
  for (int j = 0; j < p; ++j) {
    if (header[static_cast<std::size_t>(j) + 1] != "x" + std::to_string(j)) {
      throw std::invalid_argument("bad header: expected column x" + std::to_string(j));
    }
  }
  if (header[static_cast<std::size_t>(p) + 1] != "action" ||
      header[static_cast<std::size_t>(p) + 2] != "reward") {
    throw std::invalid_argument("bad header: expected action,reward after context columns");
  }

  std::vector<RawSource> raw;
  std::map<std::string, std::size_t> index_of;
  int max_action = -1;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("row " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    auto [it, inserted] = index_of.try_emplace(fields[0], raw.size());
    if (inserted) raw.push_back(RawSource{fields[0], {}, {}, {}, {}});
    auto& source = raw[it->second];

    std::vector<double> context(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      context[static_cast<std::size_t>(j)] =
          parse_number(fields[static_cast<std::size_t>(j) + 1], row, "context value");
    }
    const long action = parse_integer(fields[static_cast<std::size_t>(p) + 1], row, "action");
    if (action < 0 || (expected_action_count > 0 && action >= expected_action_count)) {
      throw std::invalid_argument("row " + std::to_string(row) + ": action " +
                                  std::to_string(action) + " out of range");
    }
    const double reward = parse_number(fields[static_cast<std::size_t>(p) + 2], row, "reward");
    if (has_propensity) {
      const double e = parse_number(fields[static_cast<std::size_t>(p) + 3], row, "propensity");
      if (!(e > 0.0 && e <= 1.0)) {
        throw std::invalid_argument("row " + std::to_string(row) + ": propensity " +
                                    format_double(e) + " outside (0, 1]");
      }
      source.propensities.push_back(e);
    }
    source.contexts.push_back(std::move(context));
    source.actions.push_back(static_cast<int>(action));
    source.rewards.push_back(reward);
    max_action = std::max(max_action, static_cast<int>(action));
  }
  if (raw.empty()) throw std::invalid_argument("dataset has no data rows: " + path);

  ObservationalDataset dataset;
  dataset.context_dim = p;
  dataset.action_count =
      expected_action_count > 0 ? expected_action_count : std::max(max_action + 1, 2);
  for (auto& source : raw) {
    SourceData data;
    data.source_id = source.id;
    const auto n_s = static_cast<Eigen::Index>(source.actions.size());
    data.contexts.resize(n_s, p);
    data.rewards.resize(n_s);
    for (Eigen::Index i = 0; i < n_s; ++i) {
      for (int j = 0; j < p; ++j) {
        data.contexts(i, j) = source.contexts[static_cast<std::size_t>(i)]
                                             [static_cast<std::size_t>(j)];
      }
      data.rewards[i] = source.rewards[static_cast<std::size_t>(i)];
    }
    data.actions = std::move(source.actions);
    if (has_propensity) {
      Vector e(n_s);
      for (Eigen::Index i = 0; i < n_s; ++i) e[i] = source.propensities[static_cast<std::size_t>(i)];
      data.logged_propensities = std::move(e);
    }
    dataset.sources.push_back(std::move(data));
  }
  dataset.validate();
  return dataset;
}

void save_dataset(const ObservationalDataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");

  bool has_propensity = true;
  for (const auto& source : dataset.sources) {
    if (source.source_id.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("source id '" + source.source_id +
                                  "' contains characters not representable in CSV");
    }
    if (!source.logged_propensities) has_propensity = false;
  }

  out << "source";
  for (int j = 0; j < dataset.context_dim; ++j) out << ",x" << j;
  out << ",action,reward";
  if (has_propensity) out << ",propensity";
  out << "\n";

  for (const auto& source : dataset.sources) {
    for (Eigen::Index i = 0; i < source.size(); ++i) {
      out << source.source_id;
      for (int j = 0; j < dataset.context_dim; ++j) out << ',' << format_double(source.contexts(i, j));
      out << ',' << source.actions[static_cast<std::size_t>(i)] << ','
          << format_double(source.rewards[i]);
      if (has_propensity) out << ',' << format_double((*source.logged_propensities)[i]);
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("failed writing dataset file '" + path + "'");
}

std::string policy_to_json(const TreePolicy& policy) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& split : policy.splits) {
    nlohmann::json node;
    node["feature"] = split.feature;
    if (std::isinf(split.threshold)) {
      node["threshold"] = split.threshold > 0 ? "inf" : "-inf";
    } else {
      node["threshold"] = split.threshold;
    }
    nodes.push_back(std::move(node));
  }
  for (int action : policy.leaf_actions) nodes.push_back(nlohmann::json{{"action", action}});
  nlohmann::json doc{{"depth", policy.depth}, {"nodes", std::move(nodes)}};
  return doc.dump();
}

TreePolicy policy_from_json(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  TreePolicy policy;
  policy.depth = doc.at("depth").get<int>();
  if (policy.depth < 0) throw std::invalid_argument("policy: negative depth");
  const auto& nodes = doc.at("nodes");
  const std::size_t internal_count = (1u << policy.depth) - 1;
  const std::size_t leaf_count = 1u << policy.depth;
  if (nodes.size() != internal_count + leaf_count) {
    throw std::invalid_argument("policy: expected " +
                                std::to_string(internal_count + leaf_count) + " nodes, got " +
                                std::to_string(nodes.size()));
  }
  for (std::size_t i = 0; i < internal_count; ++i) {
    TreePolicy::Split split;
    split.feature = nodes[i].at("feature").get<int>();
    const auto& t = nodes[i].at("threshold");
    if (t.is_string()) {
      const auto s = t.get<std::string>();
      if (s == "-inf") {
        split.threshold = -std::numeric_limits<double>::infinity();
      } else if (s == "inf") {
        split.threshold = std::numeric_limits<double>::infinity();
      } else {
        throw std::invalid_argument("policy: bad threshold string '" + s + "'");
      }
    } else {
      split.threshold = t.get<double>();
    }
    policy.splits.push_back(split);
  }
  for (std::size_t i = internal_count; i < nodes.size(); ++i) {
    policy.leaf_actions.push_back(nodes[i].at("action").get<int>());
  }
  return policy;
}

void save_policy(const TreePolicy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy file '" + path + "'");
  out << policy_to_json(policy) << "\n";
}

TreePolicy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open policy file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return policy_from_json(buffer.str());
}

}  // namespace egopo
