#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "lapue/disutility.hpp"
#include "lapue/penalty.hpp"
#include "lapue/stochastics.hpp"

using namespace lapue;

namespace {

Eigen::VectorXd mean_caps(const LoadedConfig& cfg) {
  return mean_scenario_set(cfg.capacity_models).capacities.row(0);
}

}  // namespace

TEST_CASE("gbpr time and derivative") {
  // 16 (1 + 0.15 (2182/1500)^4), independently computed
  CHECK(gbpr_time(2182, 1500, 16, 0.15, 4) ==
        doctest::Approx(26.746454159822697).epsilon(1e-14));
  CHECK(gbpr_time_deriv(2182, 1500, 16, 0.15, 4) ==
        doctest::Approx(0.019700190943762963).epsilon(1e-14));

  // central differences across parameter space
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> uv(10.0, 5000.0);
  std::uniform_real_distribution<double> uc(100.0, 4000.0);
  std::uniform_real_distribution<double> un(1.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double v = uv(gen);
    const double cap = uc(gen);
    const double n = un(gen);
    const double h = 1e-4 * v;
    const double fd =
        (gbpr_time(v + h, cap, 9, 0.15, n) - gbpr_time(v - h, cap, 9, 0.15, n)) /
        (2 * h);
    const double an = gbpr_time_deriv(v, cap, 9, 0.15, n);
    CHECK(an == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("free-flow path costs on network-1") {
  const LoadedConfig cfg = testing::load_network1();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd c = path_costs(cfg.model, zero, mean_caps(cfg));
  CHECK(c(0) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(c(1) == doctest::Approx(14.0).epsilon(1e-14));  // 9 + 2 + 3
  CHECK(c(2) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(c(3) == doctest::Approx(13.0).epsilon(1e-14));
}

TEST_CASE("smooth penalty: values, C1 continuity, max-gap bound") {
  for (const double t : {0.01, 0.1, 1.0}) {
    // closed forms at the knots and centre
    CHECK(smooth_penalty(0.0, t) == doctest::Approx(t / 4.0).epsilon(1e-15));
    CHECK(smooth_penalty(t, t) == doctest::Approx(t).epsilon(1e-15));
    CHECK(smooth_penalty(-t, t) == 0.0);

    // derivative continuity at the band edges (exact in floating point)
    CHECK(std::abs(smooth_penalty_deriv(t, t) - 1.0) <= 1e-12);
    CHECK(std::abs(smooth_penalty_deriv(-t, t) - 0.0) <= 1e-12);
    CHECK(smooth_penalty_deriv(0.0, t) == doctest::Approx(0.5).epsilon(1e-15));

    // 0 <= h - max <= t/4 on a dense grid
    for (int i = 0; i <= 10000; ++i) {
      const double z = -3.0 * t + 6.0 * t * i / 10000.0;
      const double gap = smooth_penalty(z, t) - std::max(z, 0.0);
      CHECK(gap >= -1e-15);
      CHECK(gap <= t / 4.0 + 1e-15);
    }

    // derivative is the calculus derivative inside the band
    for (const double z : {-0.9 * t, -0.3 * t, 0.0, 0.4 * t, 0.9 * t}) {
      const double h = 1e-7 * t;
      const double fd = (smooth_penalty(z + h, t) - smooth_penalty(z - h, t)) / (2 * h);
      CHECK(smooth_penalty_deriv(z, t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  // max mode + lower subgradient selection at the kink
  CHECK(penalty(2.0, 0.5, PenaltyMode::kMax) == 2.0);
  CHECK(penalty(-2.0, 0.5, PenaltyMode::kMax) == 0.0);
  CHECK(penalty_deriv(0.0, 0.5, PenaltyMode::kMax) == 0.0);
  CHECK(penalty_deriv(1.0, 0.5, PenaltyMode::kMax) == 1.0);
}

TEST_CASE("disutility of path 1 at the published flow point") {
  const LoadedConfig cfg = testing::load_network1();
  Eigen::VectorXd f(4);
  f << 2182, 1318, 850, 3150;
  const Eigen::VectorXd u = disutility(cfg.model, cfg.penalty, f, mean_caps(cfg));
  // C1 - tau1 = 26.7465 - 27 < -t, so the penalty term vanishes
  CHECK(u(0) == doctest::Approx(26.746454159822697).epsilon(1e-12));
}

TEST_CASE("saa_disutility equals the naive per-scenario loop") {
  const LoadedConfig cfg = testing::load_network1();
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, 37, 99);
  std::mt19937 gen(3);

  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();  // make the penalty genuinely active

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd f = testing::random_feasible(cfg.model.network, gen);
    const Eigen::VectorXd fast = saa_disutility(cfg.model, pc, s, f);
    Eigen::VectorXd naive = Eigen::VectorXd::Zero(f.size());
    for (int i = 0; i < s.num_scenarios(); ++i)
      naive += disutility(cfg.model, pc, f, s.capacities.row(i));
    naive /= s.num_scenarios();
    CHECK((fast - naive).lpNorm<Eigen::Infinity>() <=
          1e-12 * (1.0 + naive.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("saa_disutility is affine in the scenario measure") {
  const LoadedConfig cfg = testing::load_network1();
  const ScenarioSet s1 = sample_scenarios(cfg.capacity_models, 16, 5);
  const ScenarioSet s2 = sample_scenarios(cfg.capacity_models, 24, 6);
  ScenarioSet both;
  both.capacities.resize(40, 6);
  both.capacities.topRows(16) = s1.capacities;
  both.capacities.bottomRows(24) = s2.capacities;
  both.seed = 0;
  both.source = "concat";

  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();

  std::mt19937 gen(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd f = testing::random_feasible(cfg.model.network, gen);
    const Eigen::VectorXd mixed = saa_disutility(cfg.model, pc, both, f);
    const Eigen::VectorXd split = (16.0 * saa_disutility(cfg.model, pc, s1, f) +
                                   24.0 * saa_disutility(cfg.model, pc, s2, f)) /
                                  40.0;
    CHECK((mixed - split).lpNorm<Eigen::Infinity>() <=
          1e-12 * (1.0 + split.lpNorm<Eigen::Infinity>()));
  }
}

namespace {

// Central finite differences of an SAA disutility, skipping points whose
// scenario path costs fall inside a band around the penalty kinks where
// differencing is invalid.
bool fd_jacobian_if_clear(const TrafficModel& m, const PenaltyConfig& pc,
                          const ScenarioSet& s, const Eigen::VectorXd& f,
                          double band, Eigen::MatrixXd* out) {
  const SaaDisutility saa(m, pc, s);
  const Eigen::MatrixXd C = saa.scenario_path_costs(f);
  const Eigen::VectorXd tp = tau_by_path(m.network, pc.tau);
  for (int r = 0; r < C.cols(); ++r) {
    for (int i = 0; i < C.rows(); ++i) {
      const double z = C(i, r) - tp[r];
      if (std::abs(z - pc.t) < band || std::abs(z + pc.t) < band) return false;
    }
  }
  const int N = static_cast<int>(f.size());
  out->resize(N, N);
  const double h = 1e-5;
  for (int col = 0; col < N; ++col) {
    Eigen::VectorXd fp = f;
    Eigen::VectorXd fm = f;
    fp[col] += h;
    fm[col] -= h;
    out->col(col) = (saa.value(fp) - saa.value(fm)) / (2 * h);
  }
  return true;
}

}  // namespace

TEST_CASE("saa_jacobian matches central finite differences") {
  const LoadedConfig cfg = testing::load_network1();
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, 20, 42);
  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();

  std::mt19937 gen(17);
  int tested = 0;
  int attempts = 0;
  while (tested < 25) {
    REQUIRE(++attempts < 1000);
    const Eigen::VectorXd f = testing::random_feasible(cfg.model.network, gen);
    Eigen::MatrixXd fd;
    if (!fd_jacobian_if_clear(cfg.model, pc, s, f, 1e-3, &fd)) continue;
    const Eigen::MatrixXd an = saa_jacobian(cfg.model, pc, s, f);
    const double scale = fd.cwiseAbs().maxCoeff();
    CHECK((an - fd).cwiseAbs().maxCoeff() <= 1e-5 * (scale + 1e-12));
    ++tested;
  }
}

TEST_CASE("single-scenario jacobian structure: diag(beta) delta^T dT delta") {
  const LoadedConfig cfg = testing::load_network1();
  const Eigen::VectorXd caps = mean_caps(cfg);
  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();

  std::mt19937 gen(23);
  const Eigen::VectorXd f = testing::random_feasible(cfg.model.network, gen);
  const Eigen::MatrixXd J = disutility_jacobian(cfg.model, pc, f, caps);

  // explicit loop construction
  const Eigen::VectorXd v = cfg.model.inc.delta * f;
  const Eigen::VectorXd g = arc_time_jacobian_diag(cfg.model.gbpr, v, caps);
  const Eigen::VectorXd C = path_costs(cfg.model, f, caps);
  const Eigen::VectorXd tp = tau_by_path(cfg.model.network, pc.tau);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  for (int r = 0; r < 4; ++r) {
    const double beta =
        pc.theta1 + pc.theta2 * penalty_deriv(C[r] - tp[r], pc.t, pc.mode);
    for (int sCol = 0; sCol < 4; ++sCol) {
      double acc = 0.0;
      for (int a = 0; a < 6; ++a)
        acc += cfg.model.inc.delta(a, r) * g[a] * cfg.model.inc.delta(a, sCol);
      expected(r, sCol) = beta * acc;
    }
  }
  CHECK((J - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.cwiseAbs().maxCoeff());

  // the three beta regimes are exercised by construction
  Eigen::VectorXd f2(4);
  f2 << 3500, 0, 4000, 0;  // heavy congestion: C - tau > t somewhere
  const Eigen::MatrixXd J2 = disutility_jacobian(cfg.model, pc, f2, caps);
  CHECK(J2.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("monotonicity proxy of the SAA operator on random feasible pairs") {
  const LoadedConfig cfg = testing::load_network1();
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, 30, 77);
  PenaltyConfig pc = cfg.penalty;
  pc.tau = testing::experiment_tau();

  std::mt19937 gen(29);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd f = testing::random_feasible(cfg.model.network, gen);
    const Eigen::VectorXd g = testing::random_feasible(cfg.model.network, gen);
    const Eigen::VectorXd Ff = saa_disutility(cfg.model, pc, s, f);
    const Eigen::VectorXd Fg = saa_disutility(cfg.model, pc, s, g);
    CHECK((Ff - Fg).dot(f - g) >= -1e-9);
  }
}

TEST_CASE("parameter validation") {
  const LoadedConfig cfg = testing::load_network1();
  GbprParams bad = cfg.model.gbpr;
  bad.t0[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(6), std::invalid_argument);
  bad = cfg.model.gbpr;
  bad.n[2] = 0.5;
  CHECK_THROWS_AS(bad.validate(6), std::invalid_argument);

  PenaltyConfig pc = cfg.penalty;
  pc.t = 0.0;
  CHECK_THROWS_AS(pc.validate(cfg.model.network), std::invalid_argument);
  pc = cfg.penalty;
  pc.tau.resize(1);
  CHECK_THROWS_AS(pc.validate(cfg.model.network), std::invalid_argument);

  ScenarioSet s = sample_scenarios(cfg.capacity_models, 3, 1);
  s.capacities(1, 2) = -5.0;
  CHECK_THROWS_AS(s.validate(6), std::invalid_argument);
}
