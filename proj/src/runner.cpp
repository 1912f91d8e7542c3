#include "vegbif/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "vegbif/error.hpp"
#include "vegbif/linear_stability.hpp"
#include "vegbif/model.hpp"
#include "vegbif/symmetry.hpp"

namespace vegbif {

namespace {

namespace fs = std::filesystem;

constexpr const char* kSchema = "vegbif/1";

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no NaN; absent values become null.
nlohmann::json num_or_null(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

class Output {
 public:
  Output(const RunConfig& cfg, nlohmann::json command)
      : dir_(cfg.out_dir), manifest_(run_manifest(cfg, std::move(command))), hash_(manifest_hash(manifest_)) {
    fs::create_directories(dir_);
    auto m = manifest_;
    m["manifest_hash"] = hash_;
    write_text("manifest.json", m.dump(2) + "\n");
  }

  const std::string& hash() const { return hash_; }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + (dir_ / name).string());
    out << text;
    files_.push_back(name);
  }

  void write_json(const std::string& name, nlohmann::json j) {
    j["manifest_hash"] = hash_;
    write_text(name, j.dump(2) + "\n");
  }

  // CSV with the manifest hash on the first comment line.
  void write_csv(const std::string& name, const std::string& body, const std::string& extra_comment = {}) {
    std::string text = "# manifest " + hash_ + "\n";
    if (!extra_comment.empty()) text += extra_comment;
    write_text(name, text + body);
  }

  CommandResult finish(int code, nlohmann::json summary) {
    summary["manifest_hash"] = hash_;
    return {code, files_, std::move(summary)};
  }

 private:
  fs::path dir_;
  nlohmann::json manifest_;
  std::string hash_;
  std::vector<std::string> files_;
};

nlohmann::json integrator_json(const IntegratorOptions& o) {
  return {{"rel_tol", o.rel_tol},
          {"abs_tol", o.abs_tol},
          {"initial_step", o.initial_step},
          {"max_step", std::isfinite(o.max_step) ? nlohmann::json(o.max_step) : nlohmann::json("inf")},
          {"t_end", o.t_end},
          {"steady_state_threshold", o.steady_state_threshold},
          {"snapshot_interval", o.snapshot_interval},
          {"max_steps", o.max_steps}};
}

nlohmann::json continuation_json(const ContinuationOptions& o) {
  return {{"p_min", o.p_min},
          {"p_max", o.p_max},
          {"h_initial", o.h_initial},
          {"h_min", o.h_min},
          {"h_max", o.h_max},
          {"h_grow", o.h_grow},
          {"fast_iterations", o.fast_iterations},
          {"max_points", o.max_points},
          {"tol_residual", o.tol_residual},
          {"tol_step", o.tol_step},
          {"max_corrector_iterations", o.max_corrector_iterations},
          {"event_tol", o.event_tol},
          {"eigenvalues_kept", o.eigenvalues_kept},
          {"monitor_stability", o.monitor_stability},
          {"detect_events", o.detect_events},
          {"min_biomass", o.min_biomass},
          {"switch_epsilon", o.switch_epsilon},
          {"max_depth", o.max_depth}};
}

nlohmann::json symmetry_json(const SymmetryReport& r) {
  return {{"defect", r.defect},
          {"defect_B", r.defect_B},
          {"classification", std::string(to_string(r.classification))},
          {"shape", std::string(to_string(r.shape))},
          {"first_moment", r.first_moment}};
}

nlohmann::json event_json(const BifurcationEvent& e) {
  return {{"label", e.label},
          {"kind", std::string(to_string(e.kind))},
          {"p", e.p},
          {"p_lo", e.p_lo},
          {"p_hi", e.p_hi},
          {"test_value", e.test_value},
          {"n_unstable_before", e.n_unstable_before},
          {"n_unstable_after", e.n_unstable_after},
          {"shape", std::string(to_string(e.shape))},
          {"branch", e.branch}};
}

std::string branch_csv(const ContinuationProblem& prob, const Branch& br) {
  std::ostringstream os;
  os << "index,arclength,p,mean_B,max_B,l2_B,n_unstable,shape,residual\n";
  for (std::size_t k = 0; k < br.points.size(); ++k) {
    const auto& pt = br.points[k];
    const auto shape = classify(prob.unpack(pt.x)).shape;
    os << k << ',' << num(pt.arclength) << ',' << num(pt.p) << ',' << num(pt.m.mean_B) << ',' << num(pt.m.max_B)
       << ',' << num(pt.m.l2_B) << ',' << pt.n_unstable << ',' << to_string(shape) << ',' << num(pt.residual)
       << '\n';
  }
  return os.str();
}

nlohmann::json branch_states_json(const ContinuationProblem& prob, const Branch& br, int every) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t k = 0; k < br.points.size(); k += static_cast<std::size_t>(every)) {
    arr.push_back({{"index", k}, {"p", br.points[k].p}, {"state", field_to_json(prob.unpack(br.points[k].x))}});
  }
  return {{"points", arr}};
}

char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xF]; }

FieldState uniform_upper(const GridSpec& g, double p, const ModelParams& params) {
  const auto up = upper_equilibrium(p, params);
  if (up.tag == BranchTag::bare_soil) {
    throw InvalidArgument("no vegetated homogeneous state at p = " + num(p));
  }
  return FieldState::uniform(g, up.triple());
}

void scale_window(FieldState& U, double lo, double hi, double factor) {
  const auto [first, last] = snap_window(U.grid, lo, hi);
  for (int i = first; i < last; ++i) U.B[i] *= factor;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json RunConfig::to_json() const {
  return {{"params", params_to_json(params)},
          {"grid_n", grid_n},
          {"integrator", integrator_json(integrator)},
          {"continuation", continuation_json(continuation)},
          {"seed", seed}};
}

nlohmann::json run_manifest(const RunConfig& cfg, const nlohmann::json& command) {
  return {{"schema", kSchema}, {"config", cfg.to_json()}, {"command", command}};
}

std::string manifest_hash(const nlohmann::json& manifest) {
  std::uint64_t h = fnv1a64(manifest.dump());
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex_digit(static_cast<unsigned>(h));
  return out;
}

std::pair<int, int> snap_window(const GridSpec& g, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("window needs lo <= hi");
  const auto snap = [&](double x) {
    return static_cast<int>(std::clamp(std::lround(x / g.h()), 0L, static_cast<long>(g.nodes())));
  };
  return {snap(lo), snap(hi)};
}

FieldState initial_condition(const std::string& preset, const GridSpec& g, double p, const ModelParams& params,
                             std::uint64_t seed, const PresetOptions& opts, const IntegratorOptions& integ) {
  if (preset == "bare") return FieldState::uniform(g, {0.0, p / params.l, 0.0});
  if (preset == "homogeneous") {
    FieldState U = uniform_upper(g, p, params);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto* arr : {&U.B, &U.W, &U.T}) {
      for (double& v : *arr) v *= 1.0 + opts.noise * unif(rng);
    }
    return U;
  }
  if (preset == "bump-up" || preset == "bump-down") {
    FieldState U = uniform_upper(g, p, params);
    scale_window(U, opts.window_lo, opts.window_hi, preset == "bump-up" ? opts.bump_factor : opts.dip_factor);
    return U;
  }
  if (preset == "bell-perturb-left" || preset == "bell-perturb-right") {
    FieldState U = uniform_upper(g, opts.bell_p, params);
    scale_window(U, opts.window_lo, opts.window_hi, opts.bump_factor);
    U = settle(U, opts.bell_p, integ, params);
    if (classify(U).shape != ProfileShape::bell) {
      throw ConsistencyError("bell-perturb: the base state at p = " + num(opts.bell_p) + " is not bell-shaped");
    }
    if (preset == "bell-perturb-left") {
      scale_window(U, opts.side_lo, opts.side_hi, opts.side_factor);
    } else {
      scale_window(U, g.L - opts.side_hi, g.L - opts.side_lo, opts.side_factor);
    }
    return U;
  }
  if (preset.rfind("file:", 0) == 0) {
    FieldState U = load_field(preset.substr(5));
    if (std::abs(U.grid.L - params.L) > 1e-12 * params.L) {
      throw InvalidArgument("initial field has L = " + num(U.grid.L) + " but the model has L = " + num(params.L));
    }
    return U;
  }
  throw UsageError("unknown preset '" + preset + "'");
}

SimulationResult run_simulation(const FieldState& U0, double p, const IntegratorOptions& opts,
                                const ModelParams& params) {
  SimulationResult res;
  res.trajectory = integrate(U0, p, opts, params);
  res.final_state = res.trajectory.final_state();
  res.final_residual = res.trajectory.final_rhs_norm;
  if (res.trajectory.reason == Termination::steady_state || res.final_residual < 1e-7) {
    auto nr = newton_steady_state(res.final_state, p, params, 1e-13);
    const auto before = res.final_state.to_vector();
    const auto after = nr.state.to_vector();
    double jump = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i) jump = std::max(jump, std::abs(after[i] - before[i]));
    if (nr.residual < 1e-10 && jump <= 1e-4 * (1.0 + max_abs(before))) {
      res.final_state = std::move(nr.state);
      res.final_residual = nr.residual;
      res.settled = true;
    }
  }
  res.symmetry = classify(res.final_state);
  return res;
}

int unstable_mode_count(double L, int n_max, const ModelParams& params) {
  int count = 0;
  for (const auto& row : turing_scan(L, n_max, params)) count += row.onset ? 1 : 0;
  return count;
}

CommandResult cmd_equilibria(const RunConfig& cfg, double p_lo, double p_hi, int steps) {
  if (!(p_lo <= p_hi) || p_lo < 0.0 || steps < 1) throw UsageError("equilibria: need 0 <= p_lo <= p_hi, steps >= 1");
  cfg.params.validate();
  Output out(cfg, {{"name", "equilibria"}, {"p_lo", p_lo}, {"p_hi", p_hi}, {"steps", steps}});
  std::ostringstream os;
  os << "p,branch_tag,B,W,T,stable_at_L\n";
  std::optional<double> lowest_stable_upper;
  int rows = 0;
  for (int i = 0; i <= steps; ++i) {
    const double p = p_lo + (p_hi - p_lo) * i / steps;
    for (const auto& u : homogeneous_equilibria(p, cfg.params)) {
      const bool stable = homogeneous_stability(u, p, cfg.params).stable;
      if (u.tag == BranchTag::upper && stable) {
        lowest_stable_upper = std::min(lowest_stable_upper.value_or(p), p);
      }
      os << num(p) << ',' << to_string(u.tag) << ',' << num(u.B) << ',' << num(u.W) << ',' << num(u.T) << ','
         << (stable ? 1 : 0) << '\n';
      ++rows;
    }
  }
  out.write_csv("equilibria.csv", os.str(), "# L " + num(cfg.params.L) + "\n");
  return out.finish(kExitOk, {{"rows", rows}, {"lowest_stable_upper_p", num_or_null(lowest_stable_upper)}});
}

CommandResult cmd_stability(const RunConfig& cfg, double p, int n_max) {
  if (!(p >= 0.0) || n_max < 0) throw UsageError("stability: need p >= 0 and n_max >= 0");
  cfg.params.validate();
  Output out(cfg, {{"name", "stability"}, {"p", p}, {"n_max", n_max}});
  nlohmann::json states = nlohmann::json::array();
  for (const auto& u : homogeneous_equilibria(p, cfg.params)) {
    const auto rep = homogeneous_stability(u, p, cfg.params, n_max);
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& mv : rep.modes) {
      modes.push_back({{"n", mv.n},
                       {"c2", mv.coeffs.c2},
                       {"c1", mv.coeffs.c1},
                       {"c0", mv.coeffs.c0},
                       {"routh_hurwitz", mv.routh_hurwitz_pass},
                       {"leading_real_part", mv.leading_real_part}});
    }
    states.push_back({{"branch_tag", std::string(to_string(u.tag))},
                      {"B", u.B},
                      {"W", u.W},
                      {"T", u.T},
                      {"stable", rep.stable},
                      {"first_violating_mode",
                       rep.first_violating_mode ? nlohmann::json(*rep.first_violating_mode) : nlohmann::json(nullptr)},
                      {"modes", modes}});
  }
  nlohmann::json doc = {{"p", p}, {"L", cfg.params.L}, {"states", states}};
  out.write_json("stability.json", doc);
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : states) summary.push_back({{"branch_tag", s["branch_tag"]}, {"stable", s["stable"]}});
  return out.finish(kExitOk, {{"states", summary}});
}

CommandResult cmd_turing_scan(const RunConfig& cfg, const std::vector<double>& lengths, int n_max) {
  if (lengths.empty() || n_max < 0) throw UsageError("turing-scan: need at least one length and n_max >= 0");
  for (double L : lengths) {
    if (!(L > 0.0)) throw UsageError("turing-scan: lengths must be positive");
  }
  cfg.params.validate();
  Output out(cfg, {{"name", "turing-scan"}, {"lengths", lengths}, {"n_max", n_max}});
  std::ostringstream os;
  os << "L,n,onset,roots\n";
  nlohmann::json counts = nlohmann::json::array();
  for (double L : lengths) {
    int count = 0;
    for (const auto& row : turing_scan(L, n_max, cfg.params)) {
      if (row.onset) ++count;
      os << num(L) << ',' << row.n << ',' << (row.onset ? num(*row.onset) : std::string()) << ',';
      for (std::size_t i = 0; i < row.roots.size(); ++i) os << (i ? ";" : "") << num(row.roots[i]);
      os << '\n';
    }
    counts.push_back({{"L", L}, {"unstable_modes", count}});
  }
  out.write_csv("turing_scan.csv", os.str());
  out.write_json("turing_scan.json", {{"n_max", n_max}, {"counts", counts}});
  return out.finish(kExitOk, {{"counts", counts}});
}

CommandResult cmd_critical_size(const RunConfig& cfg) {
  cfg.params.validate();
  Output out(cfg, {{"name", "critical-size"}});
  const double pc0 = fold_precipitation(cfg.params);
  const auto Ls = critical_domain_size(cfg.params);
  nlohmann::json doc = {{"fold_p", pc0}, {"critical_length", num_or_null(Ls)}};
  out.write_json("critical_size.json", doc);
  return out.finish(Ls ? kExitOk : kExitPartial, doc);
}

CommandResult cmd_simulate(const RunConfig& cfg, const std::string& preset, double p, const PresetOptions& popts) {
  if (!(p >= 0.0)) throw UsageError("simulate: need p >= 0");
  cfg.params.validate();
  cfg.integrator.validate();
  const GridSpec g(cfg.params.L, cfg.grid_n);
  const FieldState U0 = initial_condition(preset, g, p, cfg.params, cfg.seed, popts, cfg.integrator);
  Output out(cfg, {{"name", "simulate"},
                   {"preset", preset},
                   {"p", p},
                   {"window", {popts.window_lo, popts.window_hi}},
                   {"side_window", {popts.side_lo, popts.side_hi}},
                   {"bump_factor", popts.bump_factor},
                   {"dip_factor", popts.dip_factor},
                   {"side_factor", popts.side_factor},
                   {"noise", popts.noise},
                   {"bell_p", popts.bell_p}});
  const auto res = run_simulation(U0, p, cfg.integrator, cfg.params);

  std::ostringstream os;
  os << "t,x,B,W,T\n";
  const auto& tr = res.trajectory;
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const auto& U = tr.snapshots[k];
    for (int i = 0; i < U.grid.nodes(); ++i) {
      os << num(tr.times[k]) << ',' << num(U.grid.x(i)) << ',' << num(U.B[i]) << ',' << num(U.W[i]) << ','
         << num(U.T[i]) << '\n';
    }
  }
  out.write_csv("trajectory.csv", os.str());
  out.write_csv("final_state.csv", field_to_csv(res.final_state));
  nlohmann::json doc = {{"termination", std::string(to_string(tr.reason))},
                        {"t_final", tr.times.back()},
                        {"accepted_steps", tr.stats.accepted},
                        {"rejected_steps", tr.stats.rejected},
                        {"settled", res.settled},
                        {"final_residual", res.final_residual},
                        {"state_kind", state_kind(res.final_state)},
                        {"symmetry", symmetry_json(res.symmetry)}};
  out.write_json("simulate.json", doc);
  const int code = tr.reason == Termination::step_failure ? kExitPartial : kExitOk;
  return out.finish(code, doc);
}

CommandResult cmd_continue(const RunConfig& cfg, const std::string& seed_kind, double p_start, int direction,
                           int dump_every) {
  if (direction != 1 && direction != -1) throw UsageError("continue: direction must be +1 or -1");
  if (seed_kind != "vegetated" && seed_kind != "bare") throw UsageError("continue: seed must be vegetated or bare");
  if (dump_every < 0) throw UsageError("continue: dump interval must be >= 0");
  cfg.continuation.validate();
  const GridSpec g(cfg.params.L, cfg.grid_n);
  const ContinuationProblem prob(g, cfg.params);
  Output out(cfg, {{"name", "continue"},
                   {"seed", seed_kind},
                   {"p_start", p_start},
                   {"direction", direction},
                   {"dump_every", dump_every}});
  HomogeneousState u0{0.0, p_start / cfg.params.l, 0.0, BranchTag::bare_soil};
  if (seed_kind == "vegetated") {
    u0 = upper_equilibrium(p_start, cfg.params);
    if (u0.tag == BranchTag::bare_soil) throw UsageError("continue: no vegetated state at p = " + num(p_start));
  }
  Branch br;
  int code = kExitOk;
  try {
    br = continue_branch(prob, homogeneous_seed(prob, u0, p_start, cfg.continuation), direction, cfg.continuation);
  } catch (const std::exception& e) {
    br.termination = std::string("failed: ") + e.what();
    code = kExitPartial;
  }
  if (br.termination == "step_underflow") code = kExitPartial;
  br.provenance = seed_kind + " homogeneous from p = " + num(p_start);
  out.write_csv("branch_00.csv", branch_csv(prob, br),
                "# provenance " + br.provenance + "\n# termination " + br.termination + "\n");
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : br.events) events.push_back(event_json(e));
  out.write_json("events.json", {{"events", events}, {"diagnostics", br.diagnostics}});
  if (dump_every > 0) out.write_json("branch_00_states.json", branch_states_json(prob, br, dump_every));
  return out.finish(code, {{"points", br.points.size()}, {"termination", br.termination}, {"events", events}});
}

CommandResult write_diagram(const RunConfig& cfg, const Diagram& d, int dump_every) {
  const ContinuationProblem prob(d.grid, d.params);
  Output out(cfg, {{"name", "diagram"}, {"dump_every", dump_every}});
  nlohmann::json branches = nlohmann::json::array();
  for (std::size_t b = 0; b < d.branches.size(); ++b) {
    const auto& br = d.branches[b];
    char name[32];
    std::snprintf(name, sizeof name, "branch_%02zu", b);
    std::ostringstream head;
    head << "# provenance " << br.provenance << "\n# depth " << br.depth << "\n# termination " << br.termination
         << "\n# conjugate_of " << br.conjugate_of << "\n";
    out.write_csv(std::string(name) + ".csv", branch_csv(prob, br), head.str());
    if (dump_every > 0) out.write_json(std::string(name) + "_states.json", branch_states_json(prob, br, dump_every));
    branches.push_back({{"file", std::string(name) + ".csv"},
                        {"provenance", br.provenance},
                        {"depth", br.depth},
                        {"points", br.points.size()},
                        {"termination", br.termination},
                        {"closed_loop", br.closed_loop},
                        {"conjugate_of", br.conjugate_of},
                        {"diagnostics", br.diagnostics}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : d.events) events.push_back(event_json(e));
  out.write_json("events.json", {{"events", events}});
  out.write_json("diagram.json", {{"N", d.grid.N},
                                  {"L", d.grid.L},
                                  {"complete", d.complete},
                                  {"branches", branches},
                                  {"diagnostics", d.diagnostics}});
  out.write_text("event_report.txt", "# manifest " + out.hash() + "\n" + event_report(d));
  nlohmann::json labeled = nlohmann::json::object();
  for (const auto& e : d.events) {
    if (!e.label.empty()) labeled[e.label] = e.p;
  }
  return out.finish(d.complete ? kExitOk : kExitPartial,
                    {{"branches", d.branches.size()}, {"events", d.events.size()}, {"labeled", labeled},
                     {"complete", d.complete}});
}

CommandResult cmd_diagram(const RunConfig& cfg, int dump_every) {
  if (dump_every < 0) throw UsageError("diagram: dump interval must be >= 0");
  cfg.continuation.validate();
  const Diagram d = full_diagram(cfg.params, cfg.grid_n, cfg.continuation);
  return write_diagram(cfg, d, dump_every);
}

std::string event_report(const Diagram& d) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-13s %-14s %-10s %-10s %-6s %s\n", "label", "kind", "p_detected",
                "p_ref", "deviation", "tol", "status");
  os << line;
  for (const auto& ref : reference_events()) {
    const auto it = std::find_if(d.events.begin(), d.events.end(), [&](const auto& e) { return e.label == ref.label; });
    if (it == d.events.end()) {
      std::snprintf(line, sizeof line, "%-5s %-13s %-14s %-10.2f %-10s %-6.2f %s\n", std::string(ref.label).c_str(),
                    "-", "-", ref.p, "-", ref.tolerance, "missing");
    } else {
      const double dev = std::abs(it->p - ref.p);
      std::snprintf(line, sizeof line, "%-5s %-13s %-14.8f %-10.2f %-10.6f %-6.2f %s\n",
                    std::string(ref.label).c_str(), std::string(to_string(it->kind)).c_str(), it->p, ref.p, dev,
                    ref.tolerance, dev <= ref.tolerance ? "ok" : "outside");
    }
    os << line;
  }
  bool header = false;
  for (const auto& e : d.events) {
    if (!e.label.empty()) continue;
    if (!header) {
      os << "\nunlabeled events\n";
      header = true;
    }
    std::snprintf(line, sizeof line, "      %-13s %-14.8f shape=%s branch=%d\n", std::string(to_string(e.kind)).c_str(),
                  e.p, std::string(to_string(e.shape)).c_str(), e.branch);
    os << line;
  }
  return os.str();
}

}  // namespace vegbif
