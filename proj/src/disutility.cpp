#include "lapue/disutility.hpp"

#include <cmath>
#include <stdexcept>

namespace lapue {

void GbprParams::validate(int num_arcs) const {
  if (t0.size() != num_arcs || b.size() != num_arcs || n.size() != num_arcs)
    throw std::invalid_argument("gbpr: parameter vectors must have one entry per arc");
  for (int a = 0; a < num_arcs; ++a) {
    if (!(t0[a] > 0.0)) throw std::invalid_argument("gbpr: t0 must be > 0");
    if (!(b[a] >= 0.0)) throw std::invalid_argument("gbpr: b must be >= 0");
    if (!(n[a] >= 1.0)) throw std::invalid_argument("gbpr: n must be >= 1");
  }
}

Eigen::VectorXd arc_times(const GbprParams& g, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& caps) {
  const int A = static_cast<int>(v.size());
  Eigen::VectorXd T(A);
  for (int a = 0; a < A; ++a)
    T[a] = gbpr_time(v[a], caps[a], g.t0[a], g.b[a], g.n[a]);
  return T;
}

Eigen::VectorXd arc_time_jacobian_diag(const GbprParams& g, const Eigen::VectorXd& v,
                                       const Eigen::VectorXd& caps) {
  const int A = static_cast<int>(v.size());
  Eigen::VectorXd D(A);
  for (int a = 0; a < A; ++a)
    D[a] = gbpr_time_deriv(v[a], caps[a], g.t0[a], g.b[a], g.n[a]);
  return D;
}

void PenaltyConfig::validate(const Network& net) const {
  if (!(theta1 > 0.0)) throw std::invalid_argument("penalty: theta1 must be > 0");
  if (!(theta2 >= 0.0)) throw std::invalid_argument("penalty: theta2 must be >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("penalty: t must be > 0");
  if (tau.size() != net.num_od_pairs())
    throw std::invalid_argument("penalty: tau needs one entry per OD pair");
  if (d.size() != 0 && d.size() != net.num_paths())
    throw std::invalid_argument("penalty: d needs one entry per path (or none)");
}

Eigen::VectorXd tau_by_path(const Network& net, const Eigen::VectorXd& tau) {
  if (tau.size() != net.num_od_pairs())
    throw std::invalid_argument("tau_by_path: tau needs one entry per OD pair");
  Eigen::VectorXd out(net.num_paths());
  for (int r = 0; r < net.num_paths(); ++r) out[r] = tau[net.paths[r].od_index];
  return out;
}

void ScenarioSet::validate(int num_arcs) const {
  if (capacities.cols() != num_arcs)
    throw std::invalid_argument("scenarios: need one capacity column per arc");
  if (capacities.rows() < 1)
    throw std::invalid_argument("scenarios: need at least one scenario");
  if (!(capacities.array() > 0.0).all())
    throw std::invalid_argument("scenarios: capacities must be strictly positive");
}

Eigen::VectorXd path_costs(const TrafficModel& m, const Eigen::VectorXd& f,
                           const Eigen::VectorXd& caps) {
  const Eigen::VectorXd v = m.inc.delta * f;
  return m.inc.delta.transpose() * arc_times(m.gbpr, v, caps);
}

Eigen::VectorXd disutility(const TrafficModel& m, const PenaltyConfig& cfg,
                           const Eigen::VectorXd& f, const Eigen::VectorXd& caps) {
  const Eigen::VectorXd C = path_costs(m, f, caps);
  const Eigen::VectorXd tp = tau_by_path(m.network, cfg.tau);
  Eigen::VectorXd u(C.size());
  for (int r = 0; r < C.size(); ++r) {
    const double dterm = cfg.d.size() ? cfg.d[r] : 0.0;
    u[r] = cfg.theta0 * dterm + cfg.theta1 * C[r] +
           cfg.theta2 * penalty(C[r] - tp[r], cfg.t, cfg.mode);
  }
  return u;
}

Eigen::MatrixXd disutility_jacobian(const TrafficModel& m, const PenaltyConfig& cfg,
                                    const Eigen::VectorXd& f,
                                    const Eigen::VectorXd& caps) {
  const Eigen::VectorXd v = m.inc.delta * f;
  const Eigen::VectorXd C = m.inc.delta.transpose() * arc_times(m.gbpr, v, caps);
  const Eigen::VectorXd g = arc_time_jacobian_diag(m.gbpr, v, caps);
  const Eigen::VectorXd tp = tau_by_path(m.network, cfg.tau);
  Eigen::VectorXd beta(C.size());
  for (int r = 0; r < C.size(); ++r)
    beta[r] = cfg.theta1 + cfg.theta2 * penalty_deriv(C[r] - tp[r], cfg.t, cfg.mode);
  return beta.asDiagonal() * m.inc.delta.transpose() * g.asDiagonal() * m.inc.delta;
}

SaaDisutility::SaaDisutility(const TrafficModel& m, const PenaltyConfig& cfg,
                             const ScenarioSet& scenarios)
    : SaaDisutility(m, cfg, scenarios,
                    Eigen::VectorXd::Constant(scenarios.capacities.rows(),
                                              1.0 / scenarios.capacities.rows())) {}

SaaDisutility::SaaDisutility(const TrafficModel& m, const PenaltyConfig& cfg,
                             const ScenarioSet& scenarios,
                             const Eigen::VectorXd& weights)
    : model_(m), cfg_(cfg), weights_(weights) {
  scenarios.validate(m.network.num_arcs());
  cfg_.validate(m.network);
  if (weights_.size() != scenarios.capacities.rows())
    throw std::invalid_argument("saa: one weight per scenario required");
  if (!(weights_.array() >= 0.0).all() ||
      std::abs(weights_.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("saa: weights must be nonnegative and sum to 1");

  const int M = static_cast<int>(scenarios.capacities.rows());
  const int A = m.network.num_arcs();
  inv_cap_pow_.resize(M, A);
  for (int a = 0; a < A; ++a) {
    for (int i = 0; i < M; ++i)
      inv_cap_pow_(i, a) = std::pow(scenarios.capacities(i, a), -m.gbpr.n[a]);
  }
  tau_path_ = tau_by_path(m.network, cfg_.tau);
  d_path_ = cfg_.d.size() ? cfg_.d
                          : Eigen::VectorXd::Zero(m.network.num_paths());
  base_cost_ = m.inc.delta.transpose() * m.gbpr.t0;
}

Eigen::MatrixXd SaaDisutility::scenario_path_costs(const Eigen::VectorXd& f) const {
  const Eigen::VectorXd v = model_.inc.delta * f;
  const int A = model_.network.num_arcs();
  // T_a(v, cap) = t0_a + (t0_a b_a v_a^{n_a}) cap^{-n_a}; only the capacity
  // power varies across scenarios.
  Eigen::VectorXd p(A);
  for (int a = 0; a < A; ++a)
    p[a] = model_.gbpr.t0[a] * model_.gbpr.b[a] * std::pow(v[a], model_.gbpr.n[a]);
  Eigen::MatrixXd C = inv_cap_pow_ * (p.asDiagonal() * model_.inc.delta);
  C.rowwise() += base_cost_.transpose();
  return C;
}

Eigen::VectorXd SaaDisutility::value(const Eigen::VectorXd& f) const {
  const Eigen::MatrixXd C = scenario_path_costs(f);
  const int N = static_cast<int>(C.cols());
  Eigen::VectorXd u(N);
  for (int r = 0; r < N; ++r) {
    double mean_c = 0.0;
    double mean_h = 0.0;
    for (int i = 0; i < C.rows(); ++i) {
      mean_c += weights_[i] * C(i, r);
      mean_h += weights_[i] * penalty(C(i, r) - tau_path_[r], cfg_.t, cfg_.mode);
    }
    u[r] = cfg_.theta0 * d_path_[r] + cfg_.theta1 * mean_c + cfg_.theta2 * mean_h;
  }
  return u;
}

Eigen::MatrixXd SaaDisutility::jacobian(const Eigen::VectorXd& f) const {
  const Eigen::VectorXd v = model_.inc.delta * f;
  const int A = model_.network.num_arcs();
  const int M = num_scenarios();
  const Eigen::MatrixXd C = scenario_path_costs(f);
  const int N = static_cast<int>(C.cols());

  // dT_a/dv_a per scenario: (t0 n b v^{n-1}) cap^{-n}.
  Eigen::VectorXd pd(A);
  for (int a = 0; a < A; ++a)
    pd[a] = model_.gbpr.t0[a] * model_.gbpr.n[a] * model_.gbpr.b[a] *
            std::pow(v[a], model_.gbpr.n[a] - 1.0);
  // Weighted scenario mean of diag(beta_i) delta^T diag(g_i) delta collapses
  // to ((B^T G) o delta^T) delta with B(i,r) = w_i beta_{i,r}, G(i,a) = g_{i,a}.
  Eigen::MatrixXd B(M, N);
  for (int r = 0; r < N; ++r) {
    for (int i = 0; i < M; ++i) {
      B(i, r) = weights_[i] *
                (cfg_.theta1 + cfg_.theta2 * penalty_deriv(C(i, r) - tau_path_[r],
                                                           cfg_.t, cfg_.mode));
    }
  }
  const Eigen::MatrixXd G = inv_cap_pow_ * pd.asDiagonal();
  const Eigen::MatrixXd K =
      (B.transpose() * G).cwiseProduct(model_.inc.delta.transpose());
  return K * model_.inc.delta;
}

Eigen::VectorXd saa_disutility(const TrafficModel& m, const PenaltyConfig& cfg,
                               const ScenarioSet& s, const Eigen::VectorXd& f) {
  return SaaDisutility(m, cfg, s).value(f);
}

Eigen::MatrixXd saa_jacobian(const TrafficModel& m, const PenaltyConfig& cfg,
                             const ScenarioSet& s, const Eigen::VectorXd& f) {
  return SaaDisutility(m, cfg, s).jacobian(f);
}

}  // namespace lapue
