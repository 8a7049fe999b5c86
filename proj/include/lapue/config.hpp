#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lapue/disutility.hpp"
#include "lapue/stochastics.hpp"

namespace lapue {

// Optional published values carried by a config for soft-target comparison.
struct ReferenceValues {
  Eigen::VectorXd ue_flows;
  Eigen::VectorXd ue_disutilities;
  Eigen::VectorXd mlapue_flows;
  Eigen::VectorXd mlapue_disutilities;
  double mlapue_t = 0.01;
};

struct LoadedConfig {
  TrafficModel model;
  PenaltyConfig penalty;
  std::vector<CapacityModel> capacity_models;  // one per arc
  std::optional<ReferenceValues> reference;
};

// Parses and validates a JSON network config.  Throws std::invalid_argument
// with a description on unreadable files or bad content.
LoadedConfig load_config(const std::string& path);
LoadedConfig parse_config(const std::string& json_text);

}  // namespace lapue
