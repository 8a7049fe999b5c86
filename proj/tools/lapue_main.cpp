// Command-line driver: equilibrium solves and robustness experiments over
// JSON network configs, with CSV output.
#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lapue/config.hpp"
#include "lapue/csv.hpp"
#include "lapue/equilibrium.hpp"
#include "lapue/robustness.hpp"
#include "lapue/stochastics.hpp"

namespace {

using namespace lapue;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNotConverged = 3;

struct CommonArgs {
  std::string network;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
  int samples = 1000;
  double tol = 1e-8;
  int max_iter = 500000;
  // penalty overrides; NaN / empty means "keep the config's value"
  std::vector<double> tau;
  double theta0 = std::nan("");
  double theta1 = std::nan("");
  double theta2 = std::nan("");
  double smoothing_t = std::nan("");
};

// Relative --out paths may be redirected by the LAPUE_OUT_DIR environment
// variable; parent directories are created on demand.
std::string resolve_out(const std::string& out) {
  std::filesystem::path p(out);
  if (const char* dir = std::getenv("LAPUE_OUT_DIR"); dir && *dir && p.is_relative())
    p = std::filesystem::path(dir) / p;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

std::string summary_path(const std::string& out) {
  std::filesystem::path p(out);
  const std::string stem = p.stem().string() + "_summary";
  return (p.parent_path() / (stem + p.extension().string())).string();
}

void apply_overrides(PenaltyConfig& pc, const CommonArgs& a, const Network& net) {
  if (!a.tau.empty()) {
    if (static_cast<int>(a.tau.size()) != net.num_od_pairs())
      throw std::invalid_argument("--tau needs one value per OD pair");
    pc.tau = Eigen::Map<const Eigen::VectorXd>(a.tau.data(), a.tau.size());
  }
  if (!std::isnan(a.theta0)) pc.theta0 = a.theta0;
  if (!std::isnan(a.theta1)) pc.theta1 = a.theta1;
  if (!std::isnan(a.theta2)) pc.theta2 = a.theta2;
  if (!std::isnan(a.smoothing_t)) pc.t = a.smoothing_t;
}

SolverOptions solver_options(const CommonArgs& a) {
  SolverOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.validate();
  return opts;
}

std::string fmt(double x) { return CsvWriter::format(x); }

void print_solution_line(const Network& net, const EquilibriumResult& r) {
  std::cout << (r.converged ? "converged" : "NOT CONVERGED") << " after "
            << r.iterations << " iterations, residual " << r.residual << "\n";
  for (int k = 0; k < net.num_od_pairs(); ++k)
    std::cout << "z_min[" << net.od_pairs[k].origin << "->"
              << net.od_pairs[k].destination << "] = " << r.z_min[k] << "\n";
}

void write_solution_csv(const std::string& path, const Network& net,
                        const EquilibriumResult& r, std::uint64_t seed,
                        int samples) {
  CsvWriter w(path);
  w.write_row({"path_id", "od", "flow", "expected_disutility", "gap"});
  for (int p = 0; p < net.num_paths(); ++p) {
    const int k = net.paths[p].od_index;
    w.write_row({fmt(p), fmt(k), fmt(r.f[p]), fmt(r.expected_disutility[p]),
                 fmt(r.expected_disutility[p] - r.z_min[k])});
  }
  for (int k = 0; k < net.num_od_pairs(); ++k)
    w.write_row({"z_min", fmt(k), fmt(r.z_min[k]), "", ""});
  for (int a = 0; a < net.num_arcs(); ++a)
    w.write_row({"arc_flow", fmt(net.arcs[a].id), fmt(r.v[a]), "", ""});
  w.write_row({"residual", "", fmt(r.residual), "", ""});
  w.write_row({"iterations", "", fmt(r.iterations), "", ""});
  w.write_row({"converged", "", fmt(static_cast<int>(r.converged)), "", ""});
  w.write_row({"seed", "", CsvWriter::format(seed), "", ""});
  w.write_row({"samples", "", fmt(samples), "", ""});
}

void reference_check(const LoadedConfig& cfg, const std::string& mode,
                     double smoothing_t, const EquilibriumResult& r) {
  if (!cfg.reference) return;
  const ReferenceValues& ref = *cfg.reference;
  Eigen::VectorXd target;
  if (mode == "ue" && ref.ue_flows.size() == r.f.size()) target = ref.ue_flows;
  if (mode == "mlapue" && ref.mlapue_flows.size() == r.f.size() &&
      std::abs(smoothing_t - ref.mlapue_t) <= 1e-12)
    target = ref.mlapue_flows;
  if (target.size() == 0) return;
  double max_rel = 0.0;
  for (int p = 0; p < r.f.size(); ++p)
    max_rel = std::max(max_rel,
                       std::abs(r.f[p] - target[p]) / (1.0 + std::abs(target[p])));
  if (max_rel <= 0.02) {
    std::cout << "reference check: flows consistent with stored values (max "
                 "relative deviation "
              << max_rel << ")\n";
  } else {
    std::cout << "reference check: MISMATCH - solved flows deviate from the "
                 "stored reference by "
              << max_rel
              << " (flagged; the stored parameter table and flow table are "
                 "mutually inconsistent)\n";
  }
}

int cmd_solve(const CommonArgs& a, const std::string& mode) {
  const LoadedConfig cfg = load_config(a.network);
  PenaltyConfig pc = cfg.penalty;
  apply_overrides(pc, a, cfg.model.network);

  ScenarioSet s;
  if (mode == "ue") {
    pc.theta2 = 0.0;
    s = mean_scenario_set(cfg.capacity_models);
  } else {
    pc.mode = (mode == "lapue") ? PenaltyMode::kMax : PenaltyMode::kSmooth;
    s = sample_scenarios(cfg.capacity_models, a.samples, a.seed);
  }
  pc.validate(cfg.model.network);

  const EquilibriumResult r =
      solve_equilibrium(cfg.model, pc, s, solver_options(a));
  write_solution_csv(resolve_out(a.out), cfg.model.network, r, a.seed,
                     s.num_scenarios());
  std::cout << "mode " << mode << ": ";
  print_solution_line(cfg.model.network, r);
  reference_check(cfg, mode, pc.t, r);
  std::cout << "wrote " << resolve_out(a.out) << "\n";
  return r.converged ? kExitOk : kExitNotConverged;
}

int cmd_validate(const CommonArgs& a) {
  const LoadedConfig cfg = load_config(a.network);
  const Network& net = cfg.model.network;
  std::cout << "configuration valid: " << net.nodes.size() << " nodes, "
            << net.num_arcs() << " arcs, " << net.num_od_pairs()
            << " OD pairs, " << net.num_paths() << " paths, total demand "
            << net.demands().sum() << "\n";
  return kExitOk;
}

int cmd_continuation(const CommonArgs& a, const std::vector<double>& t_grid) {
  const LoadedConfig cfg = load_config(a.network);
  PenaltyConfig pc = cfg.penalty;
  apply_overrides(pc, a, cfg.model.network);
  pc.validate(cfg.model.network);
  const ScenarioSet s = sample_scenarios(cfg.capacity_models, a.samples, a.seed);

  const ContinuationResult c =
      t_continuation(cfg.model, pc, s, solver_options(a), t_grid);

  CsvWriter w(resolve_out(a.out));
  w.write_row({"t", "distance_to_max", "residual", "iterations", "converged",
               "seed"});
  bool all_ok = c.max_mode.converged;
  for (const ContinuationPoint& pt : c.points) {
    w.write_row({fmt(pt.t), fmt(pt.distance_to_max), fmt(pt.result.residual),
                 fmt(pt.result.iterations),
                 fmt(static_cast<int>(pt.result.converged)),
                 CsvWriter::format(a.seed)});
    all_ok = all_ok && pt.result.converged;
    std::cout << "t=" << pt.t << " distance-to-max " << pt.distance_to_max
              << "\n";
  }
  w.write_row({"max_mode_residual", fmt(c.max_mode.residual),
               fmt(c.max_mode.iterations),
               fmt(static_cast<int>(c.max_mode.converged)), "",
               CsvWriter::format(a.seed)});
  std::cout << "wrote " << resolve_out(a.out) << "\n";
  return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_influence(const CommonArgs& a, int arc, double capacity, double eps) {
  const LoadedConfig cfg = load_config(a.network);
  PenaltyConfig pc = cfg.penalty;
  apply_overrides(pc, a, cfg.model.network);
  pc.validate(cfg.model.network);
  const Network& net = cfg.model.network;
  if (arc < 0 || arc >= net.num_arcs())
    throw std::invalid_argument("--arc out of range");

  const ScenarioSet s = sample_scenarios(cfg.capacity_models, a.samples, a.seed);
  const SolverOptions opts = solver_options(a);
  const EquilibriumResult eq = solve_equilibrium(cfg.model, pc, s, opts);
  if (!eq.converged) {
    std::cout << "base equilibrium did not converge\n";
    return kExitNotConverged;
  }

  Eigen::VectorXd xi = mean_scenario_set(cfg.capacity_models).capacities.row(0);
  xi[arc] = capacity;
  const GifResult gif = gif_solve(cfg.model, pc, s, eq, xi, opts);
  const FiniteDifferenceIf fd =
      if_finite_difference(cfg.model, pc, s, xi, eps, opts);

  CsvWriter w(resolve_out(a.out));
  w.write_row({"path_id", "od", "direction", "fd_direction", "seed"});
  for (int p = 0; p < net.num_paths(); ++p)
    w.write_row({fmt(p), fmt(net.paths[p].od_index), fmt(gif.direction[p]),
                 fmt(fd.direction[p]), CsvWriter::format(a.seed)});
  for (int k = 0; k < net.num_od_pairs(); ++k)
    w.write_row({"multiplier_direction", fmt(k), fmt(gif.multiplier_direction[k]),
                 "", CsvWriter::format(a.seed)});
  w.write_row({"solved_by", "", gif.solved_by, "", CsvWriter::format(a.seed)});
  w.write_row({"strongly_regular", "",
               fmt(static_cast<int>(gif.strongly_regular)), "",
               CsvWriter::format(a.seed)});
  w.write_row({"arc", "", fmt(net.arcs[arc].id), "", CsvWriter::format(a.seed)});
  w.write_row({"outlier_capacity", "", fmt(capacity), "",
               CsvWriter::format(a.seed)});
  if (!gif.note.empty())
    w.write_row({"note", "", gif.note, "", CsvWriter::format(a.seed)});

  std::cout << "influence direction solved by " << gif.solved_by
            << (gif.strongly_regular ? " (strongly regular)" : "") << "\n";
  for (int p = 0; p < net.num_paths(); ++p)
    std::cout << "  path " << p << ": " << gif.direction[p]
              << " (finite difference " << fd.direction[p] << ")\n";
  std::cout << "wrote " << resolve_out(a.out) << "\n";
  return kExitOk;
}

int cmd_breakdown(const CommonArgs& a, int arc, double outlier,
                  const std::vector<int>& m_values,
                  std::uint64_t contamination_seed) {
  const LoadedConfig cfg = load_config(a.network);
  PenaltyConfig pc = cfg.penalty;
  apply_overrides(pc, a, cfg.model.network);
  pc.validate(cfg.model.network);
  const Network& net = cfg.model.network;
  if (arc < 0 || arc >= net.num_arcs())
    throw std::invalid_argument("--arc out of range");
  if (m_values.empty()) throw std::invalid_argument("--m needs at least one count");

  const ScenarioSet s = sample_scenarios(cfg.capacity_models, a.samples, a.seed);
  const std::vector<BreakdownRow> rows =
      breakdown_sweep(cfg.model, pc, s, arc, m_values, outlier,
                      contamination_seed, solver_options(a), a.threads);

  CsvWriter w(resolve_out(a.out));
  w.write_row({"m", "seed", "path_id", "od", "flow", "z_min", "converged"});
  bool all_ok = true;
  for (const BreakdownRow& row : rows) {
    all_ok = all_ok && row.converged;
    for (int p = 0; p < net.num_paths(); ++p) {
      const int k = net.paths[p].od_index;
      w.write_row({fmt(row.m), CsvWriter::format(row.seed), fmt(p), fmt(k),
                   fmt(row.f[p]), fmt(row.z_min[k]),
                   fmt(static_cast<int>(row.converged))});
    }
    std::cout << "m=" << row.m << " target-arc flow " << row.v[arc]
              << (row.converged ? "" : " (not converged)") << "\n";
  }
  std::cout << "wrote " << resolve_out(a.out) << "\n";
  return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_shift(const CommonArgs& a, int replications, int arc,
              std::vector<int> l_grid, int quantile_grid, double shift_q,
              double shift_beta) {
  const LoadedConfig cfg = load_config(a.network);
  PenaltyConfig pc = cfg.penalty;
  apply_overrides(pc, a, cfg.model.network);
  pc.validate(cfg.model.network);
  if (arc < 0 || arc >= cfg.model.network.num_arcs())
    throw std::invalid_argument("--arc out of range");

  const NormalModel* base = std::get_if<NormalModel>(&cfg.capacity_models[arc]);
  if (base == nullptr)
    throw std::invalid_argument(
        "shift: the target arc's configured capacity model must be normal");
  std::vector<CapacityModel> shifted = cfg.capacity_models;
  shifted[arc] = PerturbedTailModel{base->mu, base->sigma, shift_q, shift_beta};

  ShiftExperimentConfig x;
  x.replications = replications;
  x.samples = a.samples;
  x.target_arc = arc;
  x.master_seed = a.seed;
  x.l_grid = l_grid.empty() ? std::vector<int>{replications} : std::move(l_grid);
  x.quantile_grid = quantile_grid;
  x.threads = a.threads;

  const ShiftExperimentResult r = shift_ratio_experiment(
      cfg.model, pc, cfg.capacity_models, shifted, x, solver_options(a));

  CsvWriter w(resolve_out(a.out));
  w.write_row({"ell", "seed", "v_base", "v_shift"});
  for (int ell = 0; ell < replications; ++ell)
    w.write_row({fmt(ell), CsvWriter::format(r.seeds[ell]), fmt(r.v_base[ell]),
                 fmt(r.v_shift[ell])});

  CsvWriter ws(resolve_out(summary_path(a.out)));
  ws.write_row({"l", "delta1", "delta2", "ratio", "master_seed"});
  for (const ShiftRatioPoint& pt : r.series) {
    ws.write_row({fmt(pt.l), fmt(pt.delta1), fmt(r.delta2), fmt(pt.ratio),
                  CsvWriter::format(a.seed)});
    std::cout << "L=" << pt.l << " delta1 " << pt.delta1 << " ratio "
              << pt.ratio << "\n";
  }
  std::cout << "law distance delta2 " << r.delta2 << "\n";
  std::cout << "wrote " << resolve_out(a.out) << " and "
            << resolve_out(summary_path(a.out)) << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, CommonArgs& a, const std::string& default_out) {
  sub->add_option("--network", a.network, "network config (JSON)")->required();
  sub->add_option("--seed", a.seed, "sampling seed");
  sub->add_option("--threads", a.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  a.out = default_out;
  sub->add_option("--out", a.out, "output CSV path");
  sub->add_option("--samples", a.samples, "scenario count M")
      ->check(CLI::PositiveNumber);
  sub->add_option("--tol", a.tol, "solver residual tolerance");
  sub->add_option("--max-iter", a.max_iter, "solver iteration cap");
  sub->add_option("--tau", a.tau, "acceptable travel time per OD pair")
      ->delimiter(',');
  sub->add_option("--theta0", a.theta0, "distance weight");
  sub->add_option("--theta1", a.theta1, "travel-time weight");
  sub->add_option("--theta2", a.theta2, "lateness weight");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic traffic equilibria with late-arrival penalties"};
  app.require_subcommand(1);

  CommonArgs sa;
  std::string mode = "mlapue";
  CLI::App* solve = app.add_subcommand("solve", "compute an equilibrium");
  add_common(solve, sa, "solve.csv");
  solve->add_option("--mode", mode, "ue | lapue | mlapue")
      ->check(CLI::IsMember({"ue", "lapue", "mlapue"}));
  solve->add_option("--t", sa.smoothing_t, "smoothing parameter");

  CommonArgs va;
  CLI::App* validate = app.add_subcommand("validate", "check a config");
  validate->add_option("--network", va.network, "network config (JSON)")
      ->required();

  CommonArgs ca;
  std::vector<double> t_grid;
  CLI::App* cont =
      app.add_subcommand("continuation", "smoothing-parameter sweep");
  add_common(cont, ca, "continuation.csv");
  cont->add_option("--t", t_grid, "descending smoothing grid, e.g. 1,0.1,0.01")
      ->required()
      ->delimiter(',');

  CommonArgs ia;
  int inf_arc = 0;
  double inf_capacity = 0.0;
  double inf_eps = 1e-3;
  CLI::App* infl =
      app.add_subcommand("influence", "influence of an outlier scenario");
  add_common(infl, ia, "influence.csv");
  infl->add_option("--arc", inf_arc, "0-based target arc index");
  infl->add_option("--capacity", inf_capacity, "outlier capacity")->required();
  infl->add_option("--eps", inf_eps, "finite-difference contamination weight");

  CommonArgs ba;
  int br_arc = 0;
  double br_outlier = 0.0;
  std::vector<int> br_m;
  std::uint64_t br_cseed = 1;
  CLI::App* brk = app.add_subcommand("breakdown", "contamination sweep");
  add_common(brk, ba, "breakdown.csv");
  brk->add_option("--arc", br_arc, "0-based target arc index");
  brk->add_option("--outlier", br_outlier, "replacement capacity")->required();
  brk->add_option("--m", br_m, "contaminated scenario counts, e.g. 0,10,20")
      ->required()
      ->delimiter(',');
  brk->add_option("--contamination-seed", br_cseed,
                  "seed for the contamination index permutation");

  CommonArgs ha;
  int sh_L = 200;
  int sh_arc = 0;
  std::vector<int> sh_lgrid;
  int sh_qgrid = 1000000;
  double sh_q = 0.9;
  double sh_beta = 0.002;
  CLI::App* shift = app.add_subcommand("shift", "distribution-shift ratios");
  add_common(shift, ha, "shift.csv");
  shift->add_option("--L", sh_L, "replications")->check(CLI::PositiveNumber);
  shift->add_option("--arc", sh_arc, "0-based shifted arc index");
  shift->add_option("--l-grid", sh_lgrid, "report prefixes, e.g. 20,40,100")
      ->delimiter(',');
  shift->add_option("--quantile-grid", sh_qgrid, "law-distance grid size");
  shift->add_option("--shift-q", sh_q, "tail start quantile");
  shift->add_option("--shift-beta", sh_beta, "tail density");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, mode);
    if (validate->parsed()) return cmd_validate(va);
    if (cont->parsed()) return cmd_continuation(ca, t_grid);
    if (infl->parsed()) return cmd_influence(ia, inf_arc, inf_capacity, inf_eps);
    if (brk->parsed())
      return cmd_breakdown(ba, br_arc, br_outlier, br_m, br_cseed);
    if (shift->parsed())
      return cmd_shift(ha, sh_L, sh_arc, sh_lgrid, sh_qgrid, sh_q, sh_beta);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
