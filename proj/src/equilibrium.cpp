#include "lapue/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lapue {

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("solver: max_iter must be >= 1");
  if (!(step0 > 0.0)) throw std::invalid_argument("solver: step0 must be > 0");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw std::invalid_argument("solver: backtrack must lie in (0,1)");
  if (!(growth >= 1.0)) throw std::invalid_argument("solver: growth must be >= 1");
  if (!(armijo > 0.0 && armijo < 1.0))
    throw std::invalid_argument("solver: armijo must lie in (0,1)");
}

double natural_residual(const Network& net, const Eigen::VectorXd& f,
                        const Eigen::VectorXd& F_at_f) {
  const double probe = 1.0 / (1.0 + F_at_f.lpNorm<Eigen::Infinity>());
  const Eigen::VectorXd moved = project_feasible(net, f - probe * F_at_f);
  return (f - moved).lpNorm<Eigen::Infinity>();
}

namespace {

Eigen::VectorXd uniform_start(const Network& net) {
  Eigen::VectorXd f(net.num_paths());
  for (int k = 0; k < net.num_od_pairs(); ++k) {
    const std::vector<int> idx = net.od_path_indices(k);
    const double share = net.od_pairs[k].demand / static_cast<double>(idx.size());
    for (int r : idx) f[r] = share;
  }
  return f;
}

}  // namespace

EquilibriumResult solve_equilibrium(const TrafficModel& m, const PenaltyConfig& cfg,
                                    const ScenarioSet& s, const SolverOptions& opts,
                                    std::optional<Eigen::VectorXd> initial,
                                    std::optional<Eigen::VectorXd> scenario_weights) {
  opts.validate();
  m.network.validate();
  const SaaDisutility F =
      scenario_weights ? SaaDisutility(m, cfg, s, *scenario_weights)
                       : SaaDisutility(m, cfg, s);

  Eigen::VectorXd f = initial ? project_feasible(m.network, *initial)
                              : uniform_start(m.network);

  EquilibriumResult res;
  double gamma = opts.step0;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Eigen::VectorXd Ff = F.value(f);
    residual = natural_residual(m.network, f, Ff);
    if (residual <= opts.tol) break;

    // Extragradient step with backtracking:
    //   y = P_D(f - gamma F(f)), accept when
    //   gamma |F(f)-F(y)| <= armijo |f-y|, else halve gamma.
    Eigen::VectorXd y;
    Eigen::VectorXd Fy;
    for (;;) {
      y = project_feasible(m.network, f - gamma * Ff);
      Fy = F.value(y);
      const double lhs = gamma * (Ff - Fy).norm();
      const double rhs = opts.armijo * (f - y).norm();
      if (lhs <= rhs || gamma < 1e-300) break;
      gamma *= opts.backtrack;
    }
    f = project_feasible(m.network, f - gamma * Fy);
    gamma *= opts.growth;
  }

  res.f = f;
  res.v = m.inc.delta * f;
  res.expected_disutility = F.value(f);
  res.z_min = min_od_disutilities(m.network, res.expected_disutility);
  res.residual = natural_residual(m.network, f, res.expected_disutility);
  res.iterations = it;
  res.converged = res.residual <= opts.tol;
  return res;
}

Eigen::VectorXd min_od_disutilities(const Network& net,
                                    const Eigen::VectorXd& expected_disutility) {
  if (expected_disutility.size() != net.num_paths())
    throw std::invalid_argument("min_od_disutilities: size mismatch");
  Eigen::VectorXd z =
      Eigen::VectorXd::Constant(net.num_od_pairs(),
                                std::numeric_limits<double>::infinity());
  for (int r = 0; r < net.num_paths(); ++r) {
    const int k = net.paths[r].od_index;
    z[k] = std::min(z[k], expected_disutility[r]);
  }
  return z;
}

ComplementarityReport complementarity_report(const Network& net,
                                             const EquilibriumResult& r,
                                             double tol_flow, double tol_gap) {
  ComplementarityReport rep;
  rep.max_violation = 0.0;
  for (int p = 0; p < net.num_paths(); ++p) {
    const int k = net.paths[p].od_index;
    ComplementarityRecord rec;
    rec.path = p;
    rec.od = k;
    rec.flow = r.f[p];
    rec.gap = r.expected_disutility[p] - r.z_min[k];
    rec.product = rec.flow * rec.gap;
    if (rec.flow > tol_flow && std::abs(rec.gap) <= tol_gap) rec.cls = '+';
    else if (rec.flow <= tol_flow && rec.gap > tol_gap) rec.cls = '-';
    else rec.cls = '0';

    const double q = net.od_pairs[k].demand;
    rep.max_violation = std::max(rep.max_violation, -rec.gap);
    if (q > 0.0)
      rep.max_violation = std::max(rep.max_violation, rec.product / q);
    rep.records.push_back(rec);
  }
  rep.pass = rep.max_violation <= tol_gap;
  return rep;
}

ContinuationResult t_continuation(const TrafficModel& m, const PenaltyConfig& cfg,
                                  const ScenarioSet& s, const SolverOptions& opts,
                                  const std::vector<double>& t_values) {
  if (t_values.empty())
    throw std::invalid_argument("t_continuation: need at least one t value");
  for (size_t i = 1; i < t_values.size(); ++i) {
    if (!(t_values[i] < t_values[i - 1]))
      throw std::invalid_argument("t_continuation: t values must strictly decrease");
  }

  ContinuationResult out;
  PenaltyConfig max_cfg = cfg;
  max_cfg.mode = PenaltyMode::kMax;
  out.max_mode = solve_equilibrium(m, max_cfg, s, opts);

  std::optional<Eigen::VectorXd> warm;
  for (double t : t_values) {
    PenaltyConfig smooth_cfg = cfg;
    smooth_cfg.mode = PenaltyMode::kSmooth;
    smooth_cfg.t = t;
    ContinuationPoint pt;
    pt.t = t;
    pt.result = solve_equilibrium(m, smooth_cfg, s, opts, warm);
    pt.distance_to_max = (pt.result.v - out.max_mode.v).lpNorm<Eigen::Infinity>();
    warm = pt.result.f;
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace lapue
