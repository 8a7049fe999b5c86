#pragma once

#include <random>
#include <string>

#include "lapue/config.hpp"
#include "lapue/disutility.hpp"
#include "lapue/network.hpp"

namespace lapue::testing {

inline std::string config_path(const std::string& name) {
  return std::string(LAPUE_CONFIG_DIR) + "/" + name;
}

inline LoadedConfig load_network1() { return load_config(config_path("network1.json")); }
inline LoadedConfig load_nguyen_dupuis() {
  return load_config(config_path("nguyen_dupuis.json"));
}

// tau values placing the late-arrival threshold just above the network-1
// deterministic equilibrium OD cost (18.1934), so the penalty is active in a
// realistic fraction of scenarios; OD 2 stays clear of its threshold.
inline Eigen::VectorXd experiment_tau() {
  Eigen::VectorXd tau(2);
  tau << 18.25, 22.0;
  return tau;
}

// Random feasible path-flow vectors: exponential mass split per OD block.
inline Eigen::VectorXd random_feasible(const Network& net, std::mt19937& gen) {
  std::exponential_distribution<double> exp_dist(1.0);
  Eigen::VectorXd f(net.num_paths());
  for (int k = 0; k < net.num_od_pairs(); ++k) {
    const std::vector<int> idx = net.od_path_indices(k);
    double total = 0.0;
    std::vector<double> w(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
      w[j] = exp_dist(gen) + 1e-3;
      total += w[j];
    }
    for (size_t j = 0; j < idx.size(); ++j)
      f[idx[j]] = net.od_pairs[k].demand * w[j] / total;
  }
  return f;
}

}  // namespace lapue::testing
