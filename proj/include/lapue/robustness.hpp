#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lapue/equilibrium.hpp"
#include "lapue/stochastics.hpp"

namespace lapue {

struct ActiveSets {
  std::vector<int> i_plus;   // used paths with zero gap
  std::vector<int> i_minus;  // unused paths with positive gap
  std::vector<int> i_zero;   // degenerate paths
};

// Classifies every path from its flow and complementarity gap:
//   I+ : flow > tol_flow and |gap| <= tol_gap
//   I- : flow <= tol_flow and gap > tol_gap
//   I0 : everything else.
ActiveSets active_sets(const Network& net, const EquilibriumResult& r,
                       double tol_flow, double tol_gap);

struct GifResult {
  Eigen::VectorXd direction;             // d f / d eps, path space
  Eigen::VectorXd multiplier_direction;  // d z / d eps, one per OD
  std::string solved_by;     // "active-set-lcp" or "finite-difference"
  bool strongly_regular = true;
  std::string note;
};

struct GifOptions {
  double tol_flow = 1e-6;
  double tol_gap = 1e-5;
  int max_degenerate = 12;   // fall back to finite differences above this
  double fd_eps = 1e-3;      // finite-difference contamination weight
};

// Generalised influence function of the equilibrium map at the SAA measure
// toward the point mass at scenario xi_tilde: solves the active-set linear
// complementarity system
//   Pi df = 0,  df_r = 0 on I-,
//   [J df - Pi^T dz]_r = (E[u] - u(xi_tilde))_r on I+,
//   0 <= df_r  _|_  [J df - Pi^T dz]_r - b_r >= 0 on I0,
// enumerating the <= 2^|I0| degenerate sign patterns.  Falls back to the
// finite-difference estimate when the system is singular, no pattern is
// consistent, or |I0| > max_degenerate.
GifResult gif_solve(const TrafficModel& m, const PenaltyConfig& cfg,
                    const ScenarioSet& s, const EquilibriumResult& eq,
                    const Eigen::VectorXd& xi_tilde, const SolverOptions& sopts,
                    const GifOptions& gopts = {});

struct FiniteDifferenceIf {
  Eigen::VectorXd direction;        // (f(eps) - f(0)) / eps
  EquilibriumResult base;
  EquilibriumResult contaminated;
  double eps = 0.0;
};

// Influence via the contaminated measure (1-eps) P_M + eps delta_{xi_tilde},
// realised as a weighted SAA with the outlier appended as scenario M+1.
FiniteDifferenceIf if_finite_difference(const TrafficModel& m,
                                        const PenaltyConfig& cfg,
                                        const ScenarioSet& s,
                                        const Eigen::VectorXd& xi_tilde,
                                        double eps, const SolverOptions& sopts);

struct BreakdownRow {
  int m = 0;                 // contaminated scenario count
  std::uint64_t seed = 0;    // contamination seed used for this row
  Eigen::VectorXd f;
  Eigen::VectorXd v;
  Eigen::VectorXd z_min;
  bool converged = false;
};

// Re-solves the equilibrium with m scenarios on `arc_index` replaced by
// `outlier_value`, for each m in m_values (nested contamination sets).
std::vector<BreakdownRow> breakdown_sweep(const TrafficModel& m,
                                          const PenaltyConfig& cfg,
                                          const ScenarioSet& s, int arc_index,
                                          const std::vector<int>& m_values,
                                          double outlier_value,
                                          std::uint64_t contamination_seed,
                                          const SolverOptions& sopts,
                                          int threads = 1);

struct ShiftExperimentConfig {
  int replications = 200;        // L >= 2
  int samples = 1000;            // M per replication
  int target_arc = 0;            // arc whose law shifts and whose flow is tracked
  std::uint64_t master_seed = 1;
  std::vector<int> l_grid;       // prefixes at which the ratio is reported
  int quantile_grid = 1000000;   // discretisation for the exact law distance
  int threads = 1;
};

struct ShiftRatioPoint {
  int l = 0;
  double delta1 = 0.0;  // W1 between the two L-point flow empiricals
  double ratio = 0.0;   // delta1 / delta2; NaN when delta2 == 0
};

struct ShiftExperimentResult {
  double delta2 = 0.0;               // W1 between the two capacity laws
  std::vector<std::uint64_t> seeds;  // per replication
  std::vector<double> v_base;        // target-arc flow under the base law
  std::vector<double> v_shift;       // target-arc flow under the shifted law
  std::vector<ShiftRatioPoint> series;
};

// Distribution-shift experiment: per replication ell, draws M scenarios from
// the base and shifted capacity laws with the shared seed derived from
// (master_seed, ell), solves both equilibria, and records the target-arc
// flow.  delta1(L) is the Kantorovich distance between the two L-point flow
// samples; delta2 the distance between the target-arc laws themselves.
// Shared seeds mean identical laws give delta1 = 0 exactly.
ShiftExperimentResult shift_ratio_experiment(
    const TrafficModel& m, const PenaltyConfig& cfg,
    const std::vector<CapacityModel>& base_models,
    const std::vector<CapacityModel>& shifted_models,
    const ShiftExperimentConfig& xcfg, const SolverOptions& sopts);

}  // namespace lapue
