#pragma once

// Scenario plumbing behind the command-line tool. Each cmd_* function writes
// its files into the configured output directory, stamps them with the
// manifest hash of the run configuration and returns a short summary.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vegbif/continuation.hpp"
#include "vegbif/integrator.hpp"
#include "vegbif/params.hpp"

namespace vegbif {

/// Everything a run depends on, with every default written out.
struct RunConfig {
  ModelParams params;
  int grid_n = 40;
  IntegratorOptions integrator;
  ContinuationOptions continuation;
  std::string out_dir = ".";
  std::uint64_t seed = 1;

  /// Scientific settings only; the output directory is not part of it, so
  /// the same run written to two places produces identical files.
  nlohmann::json to_json() const;
};

/// {"schema", "config", "command"} for one invocation.
nlohmann::json run_manifest(const RunConfig& cfg, const nlohmann::json& command);

/// 16 hex digits: FNV-1a (64 bit) of the compact dump of a manifest.
std::string manifest_hash(const nlohmann::json& manifest);

/// Exit statuses shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUsage = 64;

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  ///< written, relative to out_dir
  nlohmann::json summary;
};

std::uint64_t fnv1a64(std::string_view bytes);

// ---------------------------------------------------------------------------
// Initial conditions for `simulate`.

struct PresetOptions {
  double window_lo = 3.8;  ///< bump window for bump-up / bump-down
  double window_hi = 4.2;
  double bump_factor = 1.1;
  double dip_factor = 0.9;
  double side_lo = 1.1;  ///< perturbation window for bell-perturb-left
  double side_hi = 2.1;
  double side_factor = 1.1;
  double noise = 0.01;  ///< relative amplitude for `homogeneous`
  double bell_p = 1.1;  ///< precipitation at which the base bell is settled
};

/// Half-open node range [first, last) snapped to the nearest nodes of [lo, hi].
std::pair<int, int> snap_window(const GridSpec& g, double lo, double hi);

/// Names: bare, homogeneous, bump-up, bump-down, bell-perturb-left,
/// bell-perturb-right, file:<path>. Throws UsageError for anything else and
/// InvalidArgument when the preset has no vegetated state at p.
FieldState initial_condition(const std::string& preset, const GridSpec& g, double p, const ModelParams& params,
                             std::uint64_t seed, const PresetOptions& opts = {},
                             const IntegratorOptions& integ = {});

/// Integration followed by a Newton polish when the run came to rest.
struct SimulationResult {
  Trajectory trajectory;
  FieldState final_state;
  double final_residual = 0.0;
  bool settled = false;
  SymmetryReport symmetry;
};

SimulationResult run_simulation(const FieldState& U0, double p, const IntegratorOptions& opts,
                                const ModelParams& params);

// ---------------------------------------------------------------------------
// Commands.

CommandResult cmd_equilibria(const RunConfig& cfg, double p_lo, double p_hi, int steps);
CommandResult cmd_stability(const RunConfig& cfg, double p, int n_max);
CommandResult cmd_turing_scan(const RunConfig& cfg, const std::vector<double>& lengths, int n_max);
CommandResult cmd_critical_size(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg, const std::string& preset, double p,
                           const PresetOptions& popts = {});
/// One branch from a homogeneous seed ("vegetated" or "bare") at p_start.
CommandResult cmd_continue(const RunConfig& cfg, const std::string& seed_kind, double p_start, int direction,
                           int dump_every);
CommandResult cmd_diagram(const RunConfig& cfg, int dump_every);

/// Writes the per-branch CSVs, events JSON and report for a computed diagram.
CommandResult write_diagram(const RunConfig& cfg, const Diagram& d, int dump_every);

/// Detected labels beside the reference values and deviations.
std::string event_report(const Diagram& d);

/// Number of modes n in [0, n_max] with a Turing root, for domain length L.
int unstable_mode_count(double L, int n_max, const ModelParams& params);

}  // namespace vegbif
