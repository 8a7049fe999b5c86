#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "lapue/equilibrium.hpp"
#include "lapue/robustness.hpp"
#include "lapue/stochastics.hpp"

using namespace lapue;

namespace {

struct GifSetting {
  LoadedConfig cfg;
  PenaltyConfig pc;
  ScenarioSet s;
  SolverOptions opts;
  EquilibriumResult eq;
};

GifSetting make_network1_setting() {
  GifSetting g{testing::load_network1(), {}, {}, {}, {}};
  g.pc = g.cfg.penalty;
  g.pc.tau = testing::experiment_tau();
  g.s = sample_scenarios(g.cfg.capacity_models, 60, 13);
  g.eq = solve_equilibrium(g.cfg.model, g.pc, g.s, g.opts);
  REQUIRE(g.eq.converged);
  return g;
}

Eigen::VectorXd outlier_scenario(const LoadedConfig& cfg, int arc, double value) {
  Eigen::VectorXd xi = mean_scenario_set(cfg.capacity_models).capacities.row(0);
  xi[arc] = value;
  return xi;
}

}  // namespace

TEST_CASE("active set classification") {
  const LoadedConfig cfg = testing::load_network1();
  PenaltyConfig pc = cfg.penalty;
  pc.theta2 = 0.0;
  const SolverOptions opts;
  const EquilibriumResult r =
      solve_equilibrium(cfg.model, pc, mean_scenario_set(cfg.capacity_models), opts);
  const ActiveSets as = active_sets(cfg.model.network, r, 1e-6, 1e-5);
  CHECK(as.i_plus == std::vector<int>{0, 1, 2, 3});  // every path carries flow
  CHECK(as.i_minus.empty());
  CHECK(as.i_zero.empty());

  const LoadedConfig nd = testing::load_nguyen_dupuis();
  const ScenarioSet s = sample_scenarios(nd.capacity_models, 60, 7);
  const EquilibriumResult rn = solve_equilibrium(nd.model, nd.penalty, s, opts);
  REQUIRE(rn.converged);
  const ActiveSets an = active_sets(nd.model.network, rn, 1e-6, 1e-5);
  CHECK(an.i_plus.size() + an.i_minus.size() + an.i_zero.size() == 25);
  CHECK(an.i_plus.size() >= 4);   // at least one used route per OD pair
  CHECK(an.i_minus.size() >= 5);  // plenty of unused routes on this network
}

TEST_CASE("influence direction solves the active-set system") {
  GifSetting g = make_network1_setting();
  const ActiveSets as = active_sets(g.cfg.model.network, g.eq, 1e-6, 1e-5);
  REQUIRE(as.i_plus.size() == 4);  // strongly regular configuration

  const IncidenceMatrices inc = build_incidence(g.cfg.model.network);
  double prev_d0 = -std::numeric_limits<double>::infinity();
  for (const double cap : {1470.0, 1480.0, 1490.0}) {
    const Eigen::VectorXd xi = outlier_scenario(g.cfg, 0, cap);
    const GifResult gif = gif_solve(g.cfg.model, g.pc, g.s, g.eq, xi, g.opts);

    CHECK(gif.solved_by == "active-set-lcp");
    CHECK(gif.strongly_regular);
    // demand conservation: per-OD components of the direction sum to zero
    CHECK((inc.pi * gif.direction).lpNorm<Eigen::Infinity>() <= 1e-10);
    // a capacity outlier on arc 1 pushes flow off the path that uses it
    CHECK(gif.direction[0] < 0.0);
    // and raises that OD pair's equilibrium disutility
    CHECK(gif.multiplier_direction[0] > 0.0);
    // severity ordering: the direction is linear in the cost discrepancy,
    // so milder outliers produce strictly smaller responses
    CHECK(gif.direction[0] > prev_d0);
    prev_d0 = gif.direction[0];

    // agreement with the contaminated-measure finite difference
    const FiniteDifferenceIf fd =
        if_finite_difference(g.cfg.model, g.pc, g.s, xi, 1e-3, g.opts);
    CHECK(fd.base.converged);
    CHECK(fd.contaminated.converged);
    const double rel = (gif.direction - fd.direction).lpNorm<Eigen::Infinity>() /
                       (1.0 + fd.direction.lpNorm<Eigen::Infinity>());
    CHECK(rel <= 0.05);
  }
}

TEST_CASE("strong regularity is quantified by the system's smallest singular value") {
  GifSetting g = make_network1_setting();
  const Eigen::MatrixXd J = saa_jacobian(g.cfg.model, g.pc, g.s, g.eq.f);
  const IncidenceMatrices inc = build_incidence(g.cfg.model.network);
  Eigen::MatrixXd S(6, 6);
  S << J, -inc.pi.transpose(), inc.pi, Eigen::MatrixXd::Zero(2, 2);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const double sigma_min = svd.singularValues().minCoeff();
  // regression band around the measured conditioning of this configuration
  CHECK(sigma_min >= 1e-3);
  CHECK(sigma_min <= 1e-1);
}

TEST_CASE("a scenario matching the mean operator has no influence") {
  GifSetting g = make_network1_setting();
  PenaltyConfig p0 = g.pc;
  p0.theta2 = 0.0;  // costs are then power sums of capacities, arc by arc
  const EquilibriumResult eq0 = solve_equilibrium(g.cfg.model, p0, g.s, g.opts);
  REQUIRE(eq0.converged);

  // the capacity whose cost contribution equals the sample average of the
  // congestion term: xi_a = (mean_i cap_{i,a}^{-n_a})^{-1/n_a}
  const int M = g.s.num_scenarios();
  Eigen::VectorXd xi(g.cfg.model.network.num_arcs());
  for (int a = 0; a < xi.size(); ++a) {
    const double n = g.cfg.model.gbpr.n[a];
    double acc = 0.0;
    for (int i = 0; i < M; ++i) acc += std::pow(g.s.capacities(i, a), -n);
    xi[a] = std::pow(acc / M, -1.0 / n);
  }

  const GifResult gif = gif_solve(g.cfg.model, p0, g.s, eq0, xi, g.opts);
  CHECK(gif.solved_by == "active-set-lcp");
  CHECK(gif.direction.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(gif.multiplier_direction.lpNorm<Eigen::Infinity>() <= 1e-8);

  const FiniteDifferenceIf fd =
      if_finite_difference(g.cfg.model, p0, g.s, xi, 1e-3, g.opts);
  CHECK(fd.direction.lpNorm<Eigen::Infinity>() <= 1e-7);
}

TEST_CASE("finite-difference influence behaves like a derivative") {
  GifSetting g = make_network1_setting();
  const Eigen::VectorXd xi = outlier_scenario(g.cfg, 0, 1470.0);

  const FiniteDifferenceIf f1 =
      if_finite_difference(g.cfg.model, g.pc, g.s, xi, 1e-3, g.opts);
  const FiniteDifferenceIf f2 =
      if_finite_difference(g.cfg.model, g.pc, g.s, xi, 2e-3, g.opts);
  CHECK(f1.eps == 1e-3);
  CHECK((f1.direction - (f1.contaminated.f - f1.base.f) / 1e-3)
            .lpNorm<Eigen::Infinity>() == 0.0);
  // halving eps moves the estimate by at most the first-order bias
  const double rel = (f1.direction - f2.direction).lpNorm<Eigen::Infinity>() /
                     (1.0 + f1.direction.lpNorm<Eigen::Infinity>());
  CHECK(rel <= 0.02);
  // the base solve is the plain equilibrium
  CHECK(f1.base.f == g.eq.f);

  CHECK_THROWS_AS(if_finite_difference(g.cfg.model, g.pc, g.s, xi, 0.0, g.opts),
                  std::invalid_argument);
  CHECK_THROWS_AS(if_finite_difference(g.cfg.model, g.pc, g.s, xi, 1.0, g.opts),
                  std::invalid_argument);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(if_finite_difference(g.cfg.model, g.pc, g.s, bad, 1e-3, g.opts),
                  std::invalid_argument);
}

TEST_CASE("forcing the fallback reproduces the closed-form direction") {
  GifSetting g = make_network1_setting();
  const Eigen::VectorXd xi = outlier_scenario(g.cfg, 0, 1480.0);
  const GifResult lcp = gif_solve(g.cfg.model, g.pc, g.s, g.eq, xi, g.opts);
  GifOptions forced;
  forced.max_degenerate = -1;  // every configuration exceeds this
  const GifResult fd = gif_solve(g.cfg.model, g.pc, g.s, g.eq, xi, g.opts, forced);
  CHECK(fd.solved_by == "finite-difference");
  CHECK_FALSE(fd.strongly_regular);
  CHECK(fd.note == "degenerate set larger than max_degenerate");
  const double rel = (lcp.direction - fd.direction).lpNorm<Eigen::Infinity>() /
                     (1.0 + lcp.direction.lpNorm<Eigen::Infinity>());
  CHECK(rel <= 0.05);
}

TEST_CASE("influence direction respects inactive paths on the larger network") {
  const LoadedConfig cfg = testing::load_nguyen_dupuis();
  const SolverOptions opts;
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, 40, 7);
  const EquilibriumResult eq = solve_equilibrium(cfg.model, cfg.penalty, s, opts);
  REQUIRE(eq.converged);

  const Eigen::VectorXd xi = outlier_scenario(cfg, 0, 480.0);
  const GifOptions gopts;
  const GifResult gif = gif_solve(cfg.model, cfg.penalty, s, eq, xi, opts, gopts);

  const IncidenceMatrices inc = build_incidence(cfg.model.network);
  CHECK((inc.pi * gif.direction).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(gif.direction.allFinite());
  if (gif.solved_by == "active-set-lcp") {
    const ActiveSets as =
        active_sets(cfg.model.network, eq, gopts.tol_flow, gopts.tol_gap);
    for (const int p : as.i_minus) CHECK(gif.direction[p] == 0.0);
    const FiniteDifferenceIf fd =
        if_finite_difference(cfg.model, cfg.penalty, s, xi, 1e-3, opts);
    const double rel = (gif.direction - fd.direction).lpNorm<Eigen::Infinity>() /
                       (1.0 + fd.direction.lpNorm<Eigen::Infinity>());
    CHECK(rel <= 0.1);
  }
}

TEST_CASE("breakdown sweep over nested contamination") {
  const LoadedConfig cfg = testing::load_network1();
  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();
  const SolverOptions opts;
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, 100, 19);
  const std::vector<int> m_values = {0, 5, 10, 20, 40};
  const std::vector<BreakdownRow> rows = breakdown_sweep(
      cfg.model, pc, s, 0, m_values, 1470.0, 31, opts, 1);

  REQUIRE(rows.size() == m_values.size());
  const EquilibriumResult base = solve_equilibrium(cfg.model, pc, s, opts);
  CHECK(rows[0].f == base.f);  // m = 0 is the uncontaminated problem
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].m == m_values[i]);
    CHECK(rows[i].seed == 31);
    CHECK(rows[i].converged);
    if (i > 0) {
      // worsening arc 1 drains its path and raises the OD's disutility
      CHECK(rows[i].f[0] <= rows[i - 1].f[0] + 1e-4);
      CHECK(rows[i].z_min[0] >= rows[i - 1].z_min[0] - 1e-6);
    }
  }
  CHECK(rows.back().f[0] < rows.front().f[0] - 1.0);
  CHECK(rows.back().z_min[0] > rows.front().z_min[0]);

  SUBCASE("thread count does not change the rows") {
    const std::vector<BreakdownRow> par = breakdown_sweep(
        cfg.model, pc, s, 0, m_values, 1470.0, 31, opts, 4);
    REQUIRE(par.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(par[i].f == rows[i].f);
      CHECK(par[i].z_min == rows[i].z_min);
    }
  }
}

TEST_CASE("distribution shift experiment") {
  const LoadedConfig cfg = testing::load_network1();
  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();
  const SolverOptions opts;

  ShiftExperimentConfig x;
  x.replications = 12;
  x.samples = 40;
  x.target_arc = 0;
  x.master_seed = 5;
  x.l_grid = {4, 8, 12};
  x.quantile_grid = 1000;
  x.threads = 1;

  SUBCASE("identical laws give exactly zero sample distance") {
    const ShiftExperimentResult r = shift_ratio_experiment(
        cfg.model, pc, cfg.capacity_models, cfg.capacity_models, x, opts);
    CHECK(r.delta2 == 0.0);
    REQUIRE(r.series.size() == 3);
    for (const ShiftRatioPoint& pt : r.series) {
      CHECK(pt.delta1 == 0.0);  // shared seeds couple the replications
      CHECK(std::isnan(pt.ratio));
    }
    for (int ell = 0; ell < 12; ++ell) CHECK(r.v_base[ell] == r.v_shift[ell]);
  }

  SUBCASE("a heavier tail on one arc is detected") {
    std::vector<CapacityModel> shifted = cfg.capacity_models;
    shifted[0] = PerturbedTailModel{1500.0, 5.0, 0.9, 0.002};
    x.quantile_grid = 1000000;
    const ShiftExperimentResult r = shift_ratio_experiment(
        cfg.model, pc, cfg.capacity_models, shifted, x, opts);
    // law distance against an independently computed reference
    CHECK(r.delta2 == doctest::Approx(2.2632844468198177).epsilon(1e-9));
    for (const ShiftRatioPoint& pt : r.series) {
      CHECK(pt.delta1 > 0.0);
      CHECK(pt.ratio == doctest::Approx(pt.delta1 / r.delta2));
      CHECK(std::isfinite(pt.ratio));
    }
    CHECK(r.seeds.size() == 12);
    // the first l-grid prefix uses the first replications only
    const std::vector<double> head(r.v_base.begin(), r.v_base.begin() + 4);
    const std::vector<double> head_s(r.v_shift.begin(), r.v_shift.begin() + 4);
    CHECK(r.series[0].delta1 ==
          doctest::Approx(kantorovich_1d(EmpiricalDistribution(head),
                                         EmpiricalDistribution(head_s))));

    SUBCASE("thread count does not change the outcome") {
      x.threads = 3;
      const ShiftExperimentResult r3 = shift_ratio_experiment(
          cfg.model, pc, cfg.capacity_models, shifted, x, opts);
      CHECK(r3.delta2 == r.delta2);
      for (int ell = 0; ell < 12; ++ell) {
        CHECK(r3.v_base[ell] == r.v_base[ell]);
        CHECK(r3.v_shift[ell] == r.v_shift[ell]);
      }
      for (size_t i = 0; i < r.series.size(); ++i)
        CHECK(r3.series[i].delta1 == r.series[i].delta1);
    }
  }

  SUBCASE("configuration validation") {
    ShiftExperimentConfig bad = x;
    bad.replications = 1;
    CHECK_THROWS_AS(shift_ratio_experiment(cfg.model, pc, cfg.capacity_models,
                                           cfg.capacity_models, bad, opts),
                    std::invalid_argument);
    bad = x;
    bad.l_grid = {4, 4};
    CHECK_THROWS_AS(shift_ratio_experiment(cfg.model, pc, cfg.capacity_models,
                                           cfg.capacity_models, bad, opts),
                    std::invalid_argument);
    bad = x;
    bad.l_grid = {4, 40};
    CHECK_THROWS_AS(shift_ratio_experiment(cfg.model, pc, cfg.capacity_models,
                                           cfg.capacity_models, bad, opts),
                    std::invalid_argument);
    bad = x;
    bad.target_arc = 6;
    CHECK_THROWS_AS(shift_ratio_experiment(cfg.model, pc, cfg.capacity_models,
                                           cfg.capacity_models, bad, opts),
                    std::invalid_argument);
  }
}
