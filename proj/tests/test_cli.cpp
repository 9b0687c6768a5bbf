#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

using namespace ymk;
using namespace testing_util;
namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("YMKLAB_BIN");
  return b ? b : "ymklab";
}

std::string config(const std::string& name) { return std::string(YMK_CONFIG_DIR) + "/" + name + ".json"; }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ymk_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int ymklab(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + bin() + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, ExitCodes) {
  auto dir = scratch("codes");
  EXPECT_EQ(ymklab("--help"), 0);
  EXPECT_EQ(ymklab(""), 2);
  EXPECT_EQ(ymklab("run --bogus"), 2);
  EXPECT_EQ(ymklab("run"), 2);
  EXPECT_EQ(ymklab("run --config " + (dir / "missing.json").string()), 3);
  std::ofstream(dir / "bad.json") << R"({"grid": {"sizes": [16, 16]}, "group": "so3"})";
  EXPECT_EQ(ymklab("run --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
  EXPECT_EQ(ymklab("rescale --snapshot " + (dir / "none.json").string()), 3);
  EXPECT_EQ(ymklab("gradcheck --k 0 --directions 2 --out " + dir.string(), "YMKLAB_THREADS=zero"), 2);
  EXPECT_EQ(ymklab("gradcheck --k 0 --directions 2 --out " + dir.string(), "YMKLAB_THREADS=2"), 0);
}

TEST(Cli, FlatStartWritesZeroDiagnostics) {
  auto dir = scratch("flat");
  std::ofstream(dir / "flat.json") << R"({"grid": {"sizes": [16, 16]}, "group": "su2",
    "flow": {"k": 1, "t_max": 1e-5}, "init": {"amplitude": 0.0}})";
  ASSERT_EQ(ymklab("run --quiet --config " + (dir / "flat.json").string() + " --out " + dir.string()), 0);
  const auto rows = read_csv(dir / "diagnostics.csv");
  ASSERT_GE(rows.size(), 2u);
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 10u);
    for (std::size_t c = 1; c < r.size(); ++c) EXPECT_EQ(r[c], 0.0);
  }
}

TEST(Cli, SameSeedGivesByteIdenticalCsv) {
  auto dir = scratch("seed");
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(ymklab("run --quiet --seed 11 --config " + config("su2_small") + " --out " + (dir / sub).string()), 0);
  ASSERT_EQ(ymklab("run --quiet --seed 12 --config " + config("su2_small") + " --out " + (dir / "c").string()), 0);
  const auto a = slurp(dir / "a" / "diagnostics.csv");
  EXPECT_GT(a.size(), 200u);
  EXPECT_EQ(a, slurp(dir / "b" / "diagnostics.csv"));
  EXPECT_NE(a, slurp(dir / "c" / "diagnostics.csv"));
  auto report = read_json_file((dir / "a" / "report.json").string());
  EXPECT_EQ(report["config"]["init"]["seed"], 11);
  EXPECT_FALSE(report["blowup"]["flag"].get<bool>());
}

// A single u(1) mode a·sin(2π m·x) e_axis evolves under the k = 0 flow by the heat equation on
// its transverse part: YM(t) = ½ a² (|ξ|² − ξ_axis²) · e^{−4|ξ|² t} on the unit square.
TEST(Cli, AbelianModeEnergyMatchesClosedForm) {
  auto dir = scratch("abelian");
  ASSERT_EQ(ymklab("run --quiet --config " + config("abelian_mode") + " --out " + dir.string()), 0);
  auto cfg = load_config(config("abelian_mode"));
  const double a = cfg.init.amplitude;
  const double x0 = 2 * M_PI * cfg.init.mode[0], x1 = 2 * M_PI * cfg.init.mode[1];
  const double xi2 = x0 * x0 + x1 * x1, xa = cfg.init.axis == 0 ? x0 : x1;
  const auto rows = read_csv(dir / "diagnostics.csv");
  ASSERT_GT(rows.size(), 3u);
  EXPECT_NEAR(rows.back()[0], cfg.flow.t_max, 1e-15);
  for (const auto& r : rows) {
    const double exact = 0.5 * a * a * (xi2 - xa * xa) * std::exp(-4.0 * xi2 * r[0]);
    EXPECT_LE(std::abs(r[1] - exact), 1e-6 * exact) << "t=" << r[0];
  }
}

TEST(Cli, GradcheckPassesAndWritesReport) {
  auto dir = scratch("grad");
  ASSERT_EQ(ymklab("gradcheck --quiet --k 2 --config " + config("su2_small") + " --out " + dir.string()), 0);
  auto rep = read_json_file((dir / "gradcheck.json").string());
  EXPECT_TRUE(rep["passed"].get<bool>());
  EXPECT_EQ(rep["results"][0]["directions"], 20);
  EXPECT_LE(rep["results"][0]["worst_relative"].get<double>(), 1e-6);
  EXPECT_EQ(ymklab("gradcheck --k 1 --tol 1e-30 --out " + dir.string()), 1);
}

TEST(Cli, GaugecheckPasses) {
  auto dir = scratch("gauge");
  ASSERT_EQ(ymklab("gaugecheck --quiet --pairs 3 --out " + dir.string()), 0);
  auto rep = read_json_file((dir / "gaugecheck.json").string());
  EXPECT_TRUE(rep["passed"].get<bool>());
  EXPECT_LE(rep["curvature_conjugation"].get<double>(), 1e-10);
}

TEST(Cli, RescaledSnapshotSatisfiesTheCurvatureLaw) {
  auto dir = scratch("rescale");
  ASSERT_EQ(ymklab("run --quiet --config " + config("su2_small") + " --out " + dir.string()), 0);
  const auto snap = (dir / "snapshot_final.json").string();
  ASSERT_EQ(ymklab("rescale --quiet --lambda 0.5 --center 0.1,0.37 --snapshot " + snap + " --out " + dir.string()), 0);
  auto rep = read_json_file((dir / "snapshot_final_rescaled_report.json").string());
  EXPECT_LE(rep["scaling_residual"].get<double>(), 1e-8);
  EXPECT_NEAR(rep["normalization"]["rescaled_peak"].get<double>(), 1.0, 1e-10);
  auto in = read_snapshot(snap), out = read_snapshot((dir / "snapshot_final_rescaled.json").string());
  // the rescaled connection at the center is λ times the original there
  auto c = zoom(in.connection, {0.1, 0.37}, 0.5, 1.0);
  EXPECT_LE(max_diff(c, out.connection), 1e-12);
  EXPECT_EQ(ymklab("rescale --lambda 0.3 --snapshot " + snap + " --out " + dir.string()), 2);
  EXPECT_EQ(ymklab("rescale --center 0.1 --snapshot " + snap + " --out " + dir.string()), 2);
}

TEST(Cli, ResumeFromSnapshotMatchesUninterruptedRun) {
  auto dir = scratch("resume");
  ASSERT_EQ(ymklab("run --quiet --config " + config("su2_small") + " --out " + (dir / "full").string()), 0);
  const auto mid = dir / "full" / "snapshot_00000020.json";
  ASSERT_TRUE(fs::exists(mid));
  ASSERT_EQ(ymklab("run --quiet --config " + config("su2_small") + " --resume " + mid.string() + " --out " +
                   (dir / "rest").string()),
            0);
  auto a = read_snapshot((dir / "full" / "snapshot_final.json").string());
  auto b = read_snapshot((dir / "rest" / "snapshot_final.json").string());
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.t, b.t);
  EXPECT_LE(max_diff(a.connection, b.connection), 1e-12);
  EXPECT_EQ(ymklab("run --config " + config("abelian_mode") + " --resume " + mid.string() + " --out " +
                   (dir / "x").string()),
            2);
}

TEST(Cli, VerifyWritesManifest) {
  auto dir = scratch("verify");
  ASSERT_EQ(ymklab("verify --quiet --trials 2 --symbol-samples 8 --out " + dir.string()), 0);
  auto man = read_json_file((dir / "manifest.json").string());
  EXPECT_TRUE(man["passed"].get<bool>());
  EXPECT_EQ(man["symbols"].size(), 8u);
  EXPECT_GE(man["identities"]["entries"].size(), 16u);
}
