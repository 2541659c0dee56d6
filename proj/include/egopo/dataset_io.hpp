#pragma once

#include "egopo/data_model.hpp"

#include <string>

namespace egopo {

// Dataset CSV schema (header required):
//   source,x0,...,x{p-1},action,reward[,propensity]
// One observation per row, UTF-8, '.' decimal separator. Rows are grouped by
// source in first-appearance order. The action count is inferred from the
// data unless `expected_action_count` is given.
ObservationalDataset load_dataset(const std::string& path, int expected_action_count = 0);
void save_dataset(const ObservationalDataset& dataset, const std::string& path);

// Policies serialize as {"depth":k,"nodes":[...]} with nodes in level order:
// internal nodes as {"feature":j,"threshold":t}, leaves as {"action":a}.
// Infinite thresholds are written as the strings "-inf" / "inf".
std::string policy_to_json(const TreePolicy& policy);
TreePolicy policy_from_json(const std::string& json_text);

void save_policy(const TreePolicy& policy, const std::string& path);
TreePolicy load_policy(const std::string& path);

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double value);

}  // namespace egopo
