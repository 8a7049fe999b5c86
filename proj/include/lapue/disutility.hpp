#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "lapue/network.hpp"
#include "lapue/penalty.hpp"

namespace lapue {

// Generalised BPR parameters, one entry per arc: T_a(v, c) = t0 (1 + b (v/c)^n).
struct GbprParams {
  Eigen::VectorXd t0;  // free-flow time, > 0
  Eigen::VectorXd b;   // congestion coefficient, >= 0
  Eigen::VectorXd n;   // congestion power, >= 1

  void validate(int num_arcs) const;
};

inline double gbpr_time(double v, double cap, double t0, double b, double n) {
  return t0 * (1.0 + b * std::pow(v / cap, n));
}

// dT/dv = t0 n b v^{n-1} / cap^n
inline double gbpr_time_deriv(double v, double cap, double t0, double b, double n) {
  return t0 * n * b * std::pow(v, n - 1.0) / std::pow(cap, n);
}

Eigen::VectorXd arc_times(const GbprParams& g, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& caps);

// Diagonal of the (diagonal) Jacobian dT/dv.
Eigen::VectorXd arc_time_jacobian_diag(const GbprParams& g, const Eigen::VectorXd& v,
                                       const Eigen::VectorXd& caps);

// Late-arrival disutility configuration:
//   u_r = theta0 d_r + theta1 C_r + theta2 h(C_r - tau_k(r), t)
struct PenaltyConfig {
  double theta0 = 0.0;
  double theta1 = 1.0;
  double theta2 = 0.0;
  Eigen::VectorXd d;    // per-path fixed term; empty means all zero
  Eigen::VectorXd tau;  // acceptable travel time per OD pair
  double t = 0.01;      // smoothing band, > 0
  PenaltyMode mode = PenaltyMode::kSmooth;

  void validate(const Network& net) const;
};

// tau broadcast from OD pairs to paths.
Eigen::VectorXd tau_by_path(const Network& net, const Eigen::VectorXd& tau);

// One capacity draw per scenario and arc.
struct ScenarioSet {
  Eigen::MatrixXd capacities;  // M x A, strictly positive
  std::uint64_t seed = 0;
  std::string source;

  int num_scenarios() const { return static_cast<int>(capacities.rows()); }
  void validate(int num_arcs) const;
};

// Bundles the static network data the cost model needs.
struct TrafficModel {
  Network network;
  IncidenceMatrices inc;
  GbprParams gbpr;
};

// Path costs C = delta^T T(delta f, caps) for one capacity vector.
Eigen::VectorXd path_costs(const TrafficModel& m, const Eigen::VectorXd& f,
                           const Eigen::VectorXd& caps);

// Single-scenario disutility u(f, caps).
Eigen::VectorXd disutility(const TrafficModel& m, const PenaltyConfig& cfg,
                           const Eigen::VectorXd& f, const Eigen::VectorXd& caps);

// Single-scenario Jacobian  diag(beta) delta^T dT/dv delta  with
// beta_r = theta1 + theta2 h'(C_r - tau_k, t).
Eigen::MatrixXd disutility_jacobian(const TrafficModel& m, const PenaltyConfig& cfg,
                                    const Eigen::VectorXd& f,
                                    const Eigen::VectorXd& caps);

// Sample-average disutility evaluator.  Precomputes the per-scenario
// capacity powers so value() costs one small dense product per call; the
// result equals the plain mean (or weighted mean) of per-scenario
// disutility() values.
class SaaDisutility {
 public:
  SaaDisutility(const TrafficModel& m, const PenaltyConfig& cfg,
                const ScenarioSet& scenarios);
  // weights: one nonnegative entry per scenario, summing to 1.
  SaaDisutility(const TrafficModel& m, const PenaltyConfig& cfg,
                const ScenarioSet& scenarios, const Eigen::VectorXd& weights);

  Eigen::VectorXd value(const Eigen::VectorXd& f) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& f) const;

  // M x N matrix of per-scenario path costs at f.
  Eigen::MatrixXd scenario_path_costs(const Eigen::VectorXd& f) const;

  const PenaltyConfig& config() const { return cfg_; }
  int num_scenarios() const { return static_cast<int>(inv_cap_pow_.rows()); }

 private:
  const TrafficModel& model_;
  PenaltyConfig cfg_;
  Eigen::MatrixXd inv_cap_pow_;  // M x A, caps(i,a)^{-n_a}
  Eigen::VectorXd weights_;      // M, sums to 1
  Eigen::VectorXd tau_path_;     // N
  Eigen::VectorXd d_path_;       // N
  Eigen::VectorXd base_cost_;    // N, free-flow path costs delta^T t0
};

// Convenience wrappers over SaaDisutility.
Eigen::VectorXd saa_disutility(const TrafficModel& m, const PenaltyConfig& cfg,
                               const ScenarioSet& s, const Eigen::VectorXd& f);
Eigen::MatrixXd saa_jacobian(const TrafficModel& m, const PenaltyConfig& cfg,
                             const ScenarioSet& s, const Eigen::VectorXd& f);

}  // namespace lapue
