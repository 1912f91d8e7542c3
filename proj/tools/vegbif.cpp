// vegbif: command-line front end for the vegetation bifurcation toolkit.
//
//   vegbif [global flags] <subcommand> [flags]
//
// Exit status: 0 success, 2 partial results (a branch or run failed),
// 64 usage error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vegbif/error.hpp"
#include "vegbif/runner.hpp"

namespace {

using namespace vegbif;

struct Globals {
  std::string params_path;
  int grid_n = 40;
  std::string out = ".";
  std::uint64_t seed = 1;
  double rel_tol = 1e-6;
  double abs_tol = 1e-6;
  double t_end = 1e5;
  double snapshot_every = 0.0;
  double p_min = 0.0;
  double p_max = 2.0;
  int max_depth = 2;
};

RunConfig make_config(const Globals& g) {
  RunConfig cfg;
  if (!g.params_path.empty()) cfg.params = load_params(g.params_path);
  cfg.params.validate();
  cfg.grid_n = g.grid_n;
  cfg.out_dir = g.out;
  cfg.seed = g.seed;
  cfg.integrator.rel_tol = g.rel_tol;
  cfg.integrator.abs_tol = g.abs_tol;
  cfg.integrator.t_end = g.t_end;
  cfg.integrator.snapshot_interval = g.snapshot_every;
  cfg.integrator.validate();
  cfg.continuation.p_min = g.p_min;
  cfg.continuation.p_max = g.p_max;
  cfg.continuation.max_depth = g.max_depth;
  cfg.continuation.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation and simulation toolkit for the biomass-water-toxicity vegetation model"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--params", g.params_path, "JSON file of parameter overrides")->check(CLI::ExistingFile);
  app.add_option("--grid-n", g.grid_n, "grid intervals N (N + 1 nodes)")->check(CLI::Range(8, 1 << 22));
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "seed for noisy initial conditions");
  app.add_option("--rtol", g.rel_tol, "integrator relative tolerance");
  app.add_option("--atol", g.abs_tol, "integrator absolute tolerance");
  app.add_option("--t-end", g.t_end, "integration horizon");
  app.add_option("--snapshot-every", g.snapshot_every, "snapshot interval in time units (0: first and last only)");
  app.add_option("--p-min", g.p_min, "continuation lower bound on p");
  app.add_option("--p-max", g.p_max, "continuation upper bound on p");
  app.add_option("--max-depth", g.max_depth, "branch-switching depth for diagram");

  double eq_lo = 0.0, eq_hi = 2.0;
  int eq_steps = 200;
  auto* equilibria = app.add_subcommand("equilibria", "homogeneous equilibria and their stability over a p range");
  equilibria->add_option("--p-lo", eq_lo, "lower end of the p range");
  equilibria->add_option("--p-hi", eq_hi, "upper end of the p range");
  equilibria->add_option("--steps", eq_steps, "number of p intervals");

  double st_p = 1.0;
  int st_nmax = 64;
  auto* stability = app.add_subcommand("stability", "mode-by-mode Routh-Hurwitz verdicts at one p");
  stability->add_option("--p", st_p, "precipitation")->required();
  stability->add_option("--n-max", st_nmax, "highest mode index");

  std::vector<double> scan_L;
  int scan_nmax = 64;
  auto* scan = app.add_subcommand("turing-scan", "Turing roots per mode for one or more domain lengths");
  scan->add_option("--L", scan_L, "domain lengths (default: the model's L)");
  scan->add_option("--n-max", scan_nmax, "highest mode index");

  auto* critical = app.add_subcommand("critical-size", "smallest domain length admitting a Turing instability");

  std::string preset = "homogeneous";
  double sim_p = 1.1;
  PresetOptions popts;
  auto* simulate = app.add_subcommand("simulate", "integrate from a preset initial condition");
  simulate->add_option("--preset", preset,
                       "bare | homogeneous | bump-up | bump-down | bell-perturb-left | bell-perturb-right | file:<path>");
  simulate->add_option("--p", sim_p, "precipitation")->required();
  simulate->add_option("--window-lo", popts.window_lo, "left edge of the bump window");
  simulate->add_option("--window-hi", popts.window_hi, "right edge of the bump window");
  simulate->add_option("--noise", popts.noise, "relative amplitude of the homogeneous preset noise");

  std::string cont_seed = "vegetated";
  double cont_p = 2.0;
  int cont_dir = 1;
  int dump_every = 0;
  auto* cont = app.add_subcommand("continue", "one branch from a homogeneous seed");
  cont->add_option("--seed-branch", cont_seed, "vegetated | bare");
  cont->add_option("--p-start", cont_p, "p of the homogeneous seed");
  cont->add_option("--direction", cont_dir, "+1 follows decreasing p first, -1 the opposite");
  cont->add_option("--dump-every", dump_every, "write every k-th state (0: none)");

  auto* diagram = app.add_subcommand("diagram", "full bifurcation diagram with event report");
  diagram->add_option("--dump-every", dump_every, "write every k-th state (0: none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const RunConfig cfg = make_config(g);
    CommandResult res;
    if (*equilibria) {
      res = cmd_equilibria(cfg, eq_lo, eq_hi, eq_steps);
    } else if (*stability) {
      res = cmd_stability(cfg, st_p, st_nmax);
    } else if (*scan) {
      if (scan_L.empty()) scan_L.push_back(cfg.params.L);
      res = cmd_turing_scan(cfg, scan_L, scan_nmax);
    } else if (*critical) {
      res = cmd_critical_size(cfg);
    } else if (*simulate) {
      res = cmd_simulate(cfg, preset, sim_p, popts);
    } else if (*cont) {
      res = cmd_continue(cfg, cont_seed, cont_p, cont_dir, dump_every);
    } else if (*diagram) {
      res = cmd_diagram(cfg, dump_every);
    }
    std::cout << res.summary.dump(2) << '\n';
    return res.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "vegbif: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "vegbif: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vegbif: " << e.what() << '\n';
    return kExitPartial;
  }
}
