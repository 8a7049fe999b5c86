#include "lapue/robustness.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "lapue/rng.hpp"

namespace lapue {

namespace {

// Runs fn(0..n-1) on `threads` workers; any exception is rethrown after join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err = nullptr;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

ActiveSets active_sets(const Network& net, const EquilibriumResult& r,
                       double tol_flow, double tol_gap) {
  ActiveSets sets;
  for (int p = 0; p < net.num_paths(); ++p) {
    const double gap = r.expected_disutility[p] - r.z_min[net.paths[p].od_index];
    if (r.f[p] > tol_flow && std::abs(gap) <= tol_gap) sets.i_plus.push_back(p);
    else if (r.f[p] <= tol_flow && gap > tol_gap) sets.i_minus.push_back(p);
    else sets.i_zero.push_back(p);
  }
  return sets;
}

FiniteDifferenceIf if_finite_difference(const TrafficModel& m,
                                        const PenaltyConfig& cfg,
                                        const ScenarioSet& s,
                                        const Eigen::VectorXd& xi_tilde,
                                        double eps, const SolverOptions& sopts) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("if_finite_difference: eps must lie in (0,1)");
  if (xi_tilde.size() != s.capacities.cols())
    throw std::invalid_argument("if_finite_difference: xi_tilde needs one capacity per arc");

  FiniteDifferenceIf out;
  out.eps = eps;
  out.base = solve_equilibrium(m, cfg, s, sopts);

  // (1-eps) P_M + eps delta_{xi_tilde} as a weighted SAA with the outlier
  // appended as one extra scenario.
  const int M = s.num_scenarios();
  ScenarioSet mixed = s;
  mixed.source = s.source + "+outlier";
  mixed.capacities.conservativeResize(M + 1, Eigen::NoChange);
  mixed.capacities.row(M) = xi_tilde.transpose();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(M + 1, (1.0 - eps) / M);
  w[M] = eps;

  out.contaminated = solve_equilibrium(m, cfg, mixed, sopts, out.base.f, w);
  out.direction = (out.contaminated.f - out.base.f) / eps;
  return out;
}

namespace {

// Attempts the equality system for one degenerate sign pattern.  `free_set`
// holds the paths allowed nonzero (I+ plus the pattern's subset of I0).
bool try_pattern(const Eigen::MatrixXd& J, const Eigen::MatrixXd& pi,
                 const Eigen::VectorXd& b, const std::vector<int>& free_set,
                 const std::vector<int>& zero_check,  // I0 paths held at zero
                 double tol, Eigen::VectorXd* df, Eigen::VectorXd* dz) {
  const int p = static_cast<int>(free_set.size());
  const int W = static_cast<int>(pi.rows());
  const int N = static_cast<int>(J.cols());

  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(p + W, p + W);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + W);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sys(i, j) = J(free_set[i], free_set[j]);
    for (int k = 0; k < W; ++k) sys(i, p + k) = -pi(k, free_set[i]);
    rhs[i] = b[free_set[i]];
  }
  for (int k = 0; k < W; ++k) {
    for (int j = 0; j < p; ++j) sys(p + k, j) = pi(k, free_set[j]);
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);

  Eigen::VectorXd full_df = Eigen::VectorXd::Zero(N);
  for (int i = 0; i < p; ++i) full_df[free_set[i]] = sol[i];
  Eigen::VectorXd full_dz(W);
  for (int k = 0; k < W; ++k) full_dz[k] = sol[p + k];

  // Degenerate paths held at zero must keep a nonnegative gap derivative;
  // the sign of released degenerate paths is checked by the caller.
  const Eigen::VectorXd gap_dir = J * full_df - pi.transpose() * full_dz;
  for (int r : zero_check) {
    if (gap_dir[r] - b[r] < -tol) return false;
  }

  *df = full_df;
  *dz = full_dz;
  return true;
}

}  // namespace

GifResult gif_solve(const TrafficModel& m, const PenaltyConfig& cfg,
                    const ScenarioSet& s, const EquilibriumResult& eq,
                    const Eigen::VectorXd& xi_tilde, const SolverOptions& sopts,
                    const GifOptions& gopts) {
  const Network& net = m.network;
  const ActiveSets sets = active_sets(net, eq, gopts.tol_flow, gopts.tol_gap);
  const int n0 = static_cast<int>(sets.i_zero.size());

  GifResult out;
  const auto fallback = [&](const std::string& why) {
    const FiniteDifferenceIf fd =
        if_finite_difference(m, cfg, s, xi_tilde, gopts.fd_eps, sopts);
    out.direction = fd.direction;
    out.multiplier_direction =
        (min_od_disutilities(net, fd.contaminated.expected_disutility) -
         min_od_disutilities(net, fd.base.expected_disutility)) /
        gopts.fd_eps;
    out.solved_by = "finite-difference";
    out.note = why;
    return out;
  };

  if (n0 > gopts.max_degenerate) {
    out.strongly_regular = false;
    return fallback("degenerate set larger than max_degenerate");
  }

  const Eigen::MatrixXd J = saa_jacobian(m, cfg, s, eq.f);
  const Eigen::VectorXd b =
      eq.expected_disutility - disutility(m, cfg, eq.f, xi_tilde);

  // Enumerate sign patterns over I0, smallest free sets first so the
  // plain strictly-complementary system is tried immediately.
  std::vector<std::uint32_t> masks;
  for (std::uint32_t mask = 0; mask < (1u << n0); ++mask) masks.push_back(mask);
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t c) {
    const int pa = std::popcount(a);
    const int pc = std::popcount(c);
    return pa != pc ? pa < pc : a < c;
  });

  const double pattern_tol = 1e-7 * (1.0 + b.lpNorm<Eigen::Infinity>());
  bool saw_singular = false;
  for (std::uint32_t mask : masks) {
    std::vector<int> free_set = sets.i_plus;
    std::vector<int> zero_check;
    for (int j = 0; j < n0; ++j) {
      if (mask & (1u << j)) free_set.push_back(sets.i_zero[j]);
      else zero_check.push_back(sets.i_zero[j]);
    }
    if (free_set.empty()) continue;

    Eigen::VectorXd df;
    Eigen::VectorXd dz;
    if (!try_pattern(J, m.inc.pi, b, free_set, zero_check, pattern_tol, &df, &dz)) {
      saw_singular = true;
      continue;
    }
    // Degenerate paths released into the free set must not move negative.
    bool ok = true;
    for (int j = 0; j < n0 && ok; ++j) {
      if (mask & (1u << j)) ok = df[sets.i_zero[j]] >= -pattern_tol;
    }
    if (!ok) continue;

    out.direction = df;
    out.multiplier_direction = dz;
    out.solved_by = "active-set-lcp";
    out.strongly_regular = (n0 == 0);
    if (n0 > 0) out.note = "degenerate paths resolved by sign-pattern enumeration";
    return out;
  }

  out.strongly_regular = false;
  return fallback(saw_singular ? "singular active-set system"
                               : "no consistent sign pattern");
}

std::vector<BreakdownRow> breakdown_sweep(const TrafficModel& m,
                                          const PenaltyConfig& cfg,
                                          const ScenarioSet& s, int arc_index,
                                          const std::vector<int>& m_values,
                                          double outlier_value,
                                          std::uint64_t contamination_seed,
                                          const SolverOptions& sopts,
                                          int threads) {
  const int count = static_cast<int>(m_values.size());
  std::vector<BreakdownRow> rows(count);
  parallel_for(count, threads, [&](int i) {
    const ScenarioSet damaged =
        contaminate(s, arc_index, m_values[i], outlier_value, contamination_seed);
    const EquilibriumResult eq = solve_equilibrium(m, cfg, damaged, sopts);
    BreakdownRow row;
    row.m = m_values[i];
    row.seed = contamination_seed;
    row.f = eq.f;
    row.v = eq.v;
    row.z_min = eq.z_min;
    row.converged = eq.converged;
    rows[i] = std::move(row);
  });
  return rows;
}

ShiftExperimentResult shift_ratio_experiment(
    const TrafficModel& m, const PenaltyConfig& cfg,
    const std::vector<CapacityModel>& base_models,
    const std::vector<CapacityModel>& shifted_models,
    const ShiftExperimentConfig& xcfg, const SolverOptions& sopts) {
  const int A = m.network.num_arcs();
  if (static_cast<int>(base_models.size()) != A ||
      static_cast<int>(shifted_models.size()) != A)
    throw std::invalid_argument("shift: need one capacity model per arc");
  if (xcfg.replications < 2)
    throw std::invalid_argument("shift: need at least 2 replications");
  if (xcfg.samples < 1) throw std::invalid_argument("shift: need samples >= 1");
  if (xcfg.target_arc < 0 || xcfg.target_arc >= A)
    throw std::invalid_argument("shift: bad target arc");
  if (xcfg.l_grid.empty())
    throw std::invalid_argument("shift: l_grid must not be empty");
  for (size_t i = 0; i < xcfg.l_grid.size(); ++i) {
    if (xcfg.l_grid[i] < 2 || xcfg.l_grid[i] > xcfg.replications ||
        (i > 0 && xcfg.l_grid[i] <= xcfg.l_grid[i - 1]))
      throw std::invalid_argument("shift: l_grid must be increasing within [2, L]");
  }
  if (xcfg.quantile_grid < 100)
    throw std::invalid_argument("shift: quantile_grid too small");

  ShiftExperimentResult out;

  // Exact distance between the two target-arc laws from matched quantile
  // grids (the comonotone coupling is optimal in one dimension).
  const CapacityModel& qb = base_models[xcfg.target_arc];
  const CapacityModel& qs = shifted_models[xcfg.target_arc];
  double d2 = 0.0;
  const int K = xcfg.quantile_grid;
  for (int i = 0; i < K; ++i) {
    const double u = (i + 0.5) / K;
    d2 += std::abs(model_quantile(qb, u) - model_quantile(qs, u));
  }
  out.delta2 = d2 / K;

  const int L = xcfg.replications;
  out.seeds.resize(L);
  out.v_base.resize(L);
  out.v_shift.resize(L);
  std::atomic<bool> all_converged{true};
  parallel_for(L, xcfg.threads, [&](int ell) {
    const std::uint64_t seed =
        CounterRng::derive(xcfg.master_seed, 0x7265706cULL, ell);
    out.seeds[ell] = seed;
    // Shared seed across the two laws: common random numbers, so equal laws
    // give bitwise-equal scenario sets and flows.
    const ScenarioSet sb = sample_scenarios(base_models, xcfg.samples, seed);
    const ScenarioSet ss = sample_scenarios(shifted_models, xcfg.samples, seed);
    const EquilibriumResult eb = solve_equilibrium(m, cfg, sb, sopts);
    const EquilibriumResult es = solve_equilibrium(m, cfg, ss, sopts);
    if (!eb.converged || !es.converged) all_converged = false;
    out.v_base[ell] = eb.v[xcfg.target_arc];
    out.v_shift[ell] = es.v[xcfg.target_arc];
  });
  if (!all_converged)
    throw std::runtime_error("shift: a replication solve failed to converge");

  for (int l : xcfg.l_grid) {
    ShiftRatioPoint pt;
    pt.l = l;
    const std::vector<double> xb(out.v_base.begin(), out.v_base.begin() + l);
    const std::vector<double> xs(out.v_shift.begin(), out.v_shift.begin() + l);
    pt.delta1 = kantorovich_1d(EmpiricalDistribution(xb), EmpiricalDistribution(xs));
    pt.ratio = out.delta2 > 0.0 ? pt.delta1 / out.delta2
                                : std::numeric_limits<double>::quiet_NaN();
    out.series.push_back(pt);
  }
  return out;
}

}  // namespace lapue
