#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "lapue/disutility.hpp"

namespace lapue {

struct SolverOptions {
  double tol = 1e-8;        // natural-residual stopping tolerance
  int max_iter = 500000;
  double step0 = 1.0;       // initial extragradient step
  double backtrack = 0.5;   // step shrink factor, in (0,1)
  double growth = 1.05;     // step growth after accepted steps, >= 1
  double armijo = 0.9;      // accept when step*|F(x)-F(y)| <= armijo*|x-y|

  void validate() const;
};

struct EquilibriumResult {
  Eigen::VectorXd f;                    // path flows
  Eigen::VectorXd v;                    // arc flows delta f
  Eigen::VectorXd expected_disutility;  // SAA disutility at f
  Eigen::VectorXd z_min;                // per-OD minimum expected disutility
  double residual = 0.0;                // natural residual at f
  int iterations = 0;
  bool converged = false;
};

// Natural residual |f - P_D(f - g0 F(f))|_inf with probe step
// g0 = 1/(1 + |F(f)|_inf); F_at_f must be the operator value at f.
double natural_residual(const Network& net, const Eigen::VectorXd& f,
                        const Eigen::VectorXd& F_at_f);

// Solves the SAA variational inequality 0 in F(f) + N_D(f) with
// F = SaaDisutility::value by the extragradient method with projection
// onto D, Armijo-style backtracking on the step, and the uniform OD demand
// split as the default starting point.
EquilibriumResult solve_equilibrium(
    const TrafficModel& m, const PenaltyConfig& cfg, const ScenarioSet& s,
    const SolverOptions& opts,
    std::optional<Eigen::VectorXd> initial = std::nullopt,
    std::optional<Eigen::VectorXd> scenario_weights = std::nullopt);

// Per-OD minimum of the expected disutility vector.
Eigen::VectorXd min_od_disutilities(const Network& net,
                                    const Eigen::VectorXd& expected_disutility);

struct ComplementarityRecord {
  int path = 0;
  int od = 0;
  double flow = 0.0;
  double gap = 0.0;        // expected disutility - z_min of its OD
  double product = 0.0;    // flow * gap
  char cls = '0';          // '+', '-', or '0' (degenerate)
};

struct ComplementarityReport {
  std::vector<ComplementarityRecord> records;
  double max_violation = 0.0;  // max(-gap, flow*gap/q_k) over paths
  bool pass = false;
};

// Checks 0 <= f  _|_  u - Pi^T z >= 0 at the solution within tolerances:
// gap >= -tol_gap and flow * gap <= tol_gap * demand of the OD.
ComplementarityReport complementarity_report(const Network& net,
                                             const EquilibriumResult& r,
                                             double tol_flow, double tol_gap);

struct ContinuationPoint {
  double t = 0.0;
  EquilibriumResult result;
  double distance_to_max = 0.0;  // |v_t - v_max|_inf against the max-mode solve
};

struct ContinuationResult {
  EquilibriumResult max_mode;  // the nonsmooth (max-penalty) reference solve
  std::vector<ContinuationPoint> points;
};

// Solves the max-mode problem once, then the smoothed problem on the given
// descending t grid, warm-starting each solve from the previous solution.
ContinuationResult t_continuation(const TrafficModel& m, const PenaltyConfig& cfg,
                                  const ScenarioSet& s, const SolverOptions& opts,
                                  const std::vector<double>& t_values);

}  // namespace lapue
