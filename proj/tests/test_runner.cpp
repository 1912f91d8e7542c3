#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "vegbif/error.hpp"
#include "vegbif/runner.hpp"
#include "vegbif/symmetry.hpp"

using namespace vegbif;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vegbif_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VEGBIF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("manifest hash depends on the configuration, not the output directory") {
  RunConfig a, b;
  b.out_dir = "/elsewhere";
  const nlohmann::json cmd = {{"name", "x"}};
  CHECK(manifest_hash(run_manifest(a, cmd)) == manifest_hash(run_manifest(b, cmd)));
  b.seed = 2;
  CHECK(manifest_hash(run_manifest(a, cmd)) != manifest_hash(run_manifest(b, cmd)));
  RunConfig c;
  c.params.D_W = 0.81;
  CHECK(manifest_hash(run_manifest(a, cmd)) != manifest_hash(run_manifest(c, cmd)));
  CHECK(manifest_hash(run_manifest(a, cmd)).size() == 16);
}

TEST_CASE("window snapping") {
  const GridSpec g(8.0, 40);
  CHECK(snap_window(g, 3.8, 4.2) == std::pair{19, 21});
  CHECK(snap_window(g, 1.1, 2.1) == std::pair{6, 11});
  CHECK(snap_window(g, -5.0, 100.0) == std::pair{0, 41});
  CHECK_THROWS_AS(snap_window(g, 2.0, 1.0), InvalidArgument);
}

TEST_CASE("presets") {
  const ModelParams m;
  const GridSpec g(8.0, 40);
  const auto bare = initial_condition("bare", g, 1.0, m, 1);
  CHECK(max_abs(bare.B) == 0.0);
  CHECK(bare.W[0] == doctest::Approx(100.0));

  const auto up = initial_condition("bump-up", g, 1.1, m, 1);
  const auto base = upper_equilibrium(1.1, m);
  CHECK(up.B[19] == doctest::Approx(1.1 * base.B));
  CHECK(up.B[20] == doctest::Approx(1.1 * base.B));
  CHECK(up.B[21] == base.B);
  CHECK(up.W[20] == base.W);

  const auto a = initial_condition("homogeneous", g, 1.5, m, 9);
  const auto b = initial_condition("homogeneous", g, 1.5, m, 9);
  const auto c = initial_condition("homogeneous", g, 1.5, m, 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  CHECK_THROWS_AS(initial_condition("nope", g, 1.0, m, 1), UsageError);
  CHECK_THROWS_AS(initial_condition("bump-up", g, 0.3, m, 1), InvalidArgument);
}

TEST_CASE("simulate writes stamped, reproducible outputs") {
  RunConfig cfg;
  cfg.out_dir = scratch("sim_a").string();
  cfg.integrator.snapshot_interval = 5000.0;
  const auto r1 = cmd_simulate(cfg, "bump-up", 1.1);
  CHECK(r1.exit_code == kExitOk);
  CHECK(r1.summary["settled"] == true);
  CHECK(r1.summary["symmetry"]["shape"] == "bell");
  CHECK(r1.summary["final_residual"].get<double>() < 1e-10);

  RunConfig cfg2 = cfg;
  cfg2.out_dir = scratch("sim_b").string();
  (void)cmd_simulate(cfg2, "bump-up", 1.1);
  for (const auto& f : r1.files) {
    CAPTURE(f);
    const auto text = slurp(fs::path(cfg.out_dir) / f);
    CHECK(text == slurp(fs::path(cfg2.out_dir) / f));
    CHECK(text.find(r1.summary["manifest_hash"].get<std::string>()) != std::string::npos);
  }
}

TEST_CASE("equilibria report") {
  RunConfig cfg;
  cfg.out_dir = scratch("eq").string();
  const auto r = cmd_equilibria(cfg, 0.0, 0.6, 12);
  CHECK(r.exit_code == kExitOk);
  const auto text = slurp(fs::path(cfg.out_dir) / "equilibria.csv");
  CHECK(text.find("upper") == std::string::npos);
  CHECK(text.find("lower") == std::string::npos);

  cfg.params.L = 2.0;
  const auto r2 = cmd_equilibria(cfg, 0.0, 2.0, 400);
  CHECK(r2.summary["lowest_stable_upper_p"].get<double>() == doctest::Approx(0.645).epsilon(1e-9));
  cfg.params.L = 8.0;
  const auto r8 = cmd_equilibria(cfg, 0.0, 2.0, 400);
  CHECK(r8.summary["lowest_stable_upper_p"].get<double>() == doctest::Approx(1.145).epsilon(1e-9));
}

TEST_CASE("turing scan and critical size") {
  RunConfig cfg;
  cfg.out_dir = scratch("scan").string();
  const auto r = cmd_turing_scan(cfg, {2.0, 4.0, 6.0, 8.0}, 64);
  std::vector<int> counts;
  for (const auto& c : r.summary["counts"]) counts.push_back(c["unstable_modes"].get<int>());
  CHECK(counts == std::vector<int>{0, 1, 1, 2});
  const auto cs = cmd_critical_size(cfg);
  CHECK(cs.exit_code == kExitOk);
  CHECK(cs.summary["critical_length"].is_number());
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli").string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == kExitUsage);
  CHECK(run_cli("frobnicate") == kExitUsage);
  CHECK(run_cli("--out " + dir + " simulate --p 1.0 --preset nope") == kExitUsage);
  CHECK(run_cli("--out " + dir + " stability") == kExitUsage);
  CHECK(run_cli("--out " + dir + " --grid-n 2 stability --p 1") == kExitUsage);
  CHECK(run_cli("--out " + dir + " stability --p 1.0") == kExitOk);
  CHECK(fs::exists(fs::path(dir) / "stability.json"));
  CHECK(fs::exists(fs::path(dir) / "manifest.json"));
  CHECK(run_cli("critical-size --out " + dir) == kExitOk);
}
