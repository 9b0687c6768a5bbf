#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ymk/ymk.hpp"

using namespace ymk;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, check_failed = 1, usage = 2, io = 3 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  int threads = 1;
};

void say(const Common& c, const std::string& msg) {
  if (!c.quiet) std::printf("%s\n", msg.c_str());
}

// YMKLAB_THREADS must be a positive integer. The numerics are single-threaded for
// bit-reproducibility, so the value is validated and recorded only.
int threads_from_env() {
  const char* v = std::getenv("YMKLAB_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError("YMKLAB_THREADS must be a positive integer");
  return static_cast<int>(n);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string step_stem(const std::string& prefix, long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%08ld", step);
  return prefix + buf;
}

json header(const std::string& command, const Common& c) {
  return {{"command", command}, {"threads", c.threads}};
}

// ---------------------------------------------------------------------------

int cmd_run(const Common& c, const std::string& resume) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.init.seed = *c.seed;
  if (!c.out.empty()) cfg.output.dir = c.out;
  const FlowConfig fc = cfg.flow_config();
  const fs::path out(cfg.output.dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + out.string() + "'");

  FlowState start;
  if (resume.empty()) {
    start.connection = make_initial(TorusGrid::make(cfg.grid), cfg.group, cfg.init);
  } else {
    Snapshot snap = read_snapshot(resume);
    const auto& sg = *snap.connection.grid();
    auto expect = TorusGrid::make(cfg.grid);
    if (!sg.same_shape(*expect) || sg.band_limit() != expect->band_limit() || !(snap.connection.group() == cfg.group))
      throw ConfigError("resume: snapshot grid or group does not match the config");
    start.connection = snap.connection;
    start.t = snap.t;
    start.step_index = snap.step;
  }

  CsvWriter csv((out / cfg.output.csv).string());
  long last_snapshot = -1;
  auto observer = [&](const FlowState& s, const DiagnosticsRecord& r) {
    csv.write(r);
    if (cfg.monitor.snapshot_interval > 0 && s.step_index % cfg.monitor.snapshot_interval == 0 &&
        s.step_index != last_snapshot) {
      write_snapshot(out.string(), step_stem(cfg.output.snapshot_prefix, s.step_index),
                     {s.connection, s.t, cfg.flow.k, s.step_index, cfg.init.seed});
      last_snapshot = s.step_index;
    }
  };
  say(c, "run: " + c.config + " -> " + out.string());
  FlowResult res = run_flow(start, fc, observer);
  const auto& fs_ = res.final_state;
  const std::string final_side = write_snapshot(out.string(), cfg.output.snapshot_prefix + "_final",
                                                {fs_.connection, fs_.t, cfg.flow.k, fs_.step_index, cfg.init.seed});
  json rep = header("run", c);
  rep["config"] = to_json(cfg);
  rep["resumed_from"] = resume.empty() ? json(nullptr) : json(resume);
  rep["dt"] = res.dt;
  rep["steps"] = fs_.step_index;
  rep["t_final"] = fs_.t;
  rep["step_limit_reached"] = res.step_limit_reached;
  rep["blowup"] = to_json(res.blowup);
  rep["smoothing"] = to_json(smoothing_report(res.records));
  rep["final"] = res.records.empty() ? json(nullptr) : to_json(res.records.back());
  rep["final_snapshot"] = final_side;
  write_json_file((out / "report.json").string(), rep);
  if (res.blowup.flag)
    say(c, "blowup flagged at t=" + fmt(res.blowup.t) + " (" + res.blowup.reason + ")");
  say(c, "done: steps=" + std::to_string(fs_.step_index) + " t=" + fmt(fs_.t) +
             (res.records.empty() ? "" : " ymk=" + fmt(res.records.back().ymk)));
  return ok;
}

// ---------------------------------------------------------------------------

int cmd_verify(const Common& c, int trials, int symbol_samples) {
  const fs::path out(c.out.empty() ? "verify" : c.out);
  const std::uint64_t seed = c.seed.value_or(1);
  json man = header("verify", c);
  man["seed"] = seed;
  bool all = true;

  SuiteOptions opt;
  opt.trials = trials;
  opt.seed = seed;
  SuiteReport suite = run_identity_suite(opt);
  man["identities"] = to_json(suite);
  all = all && suite.passed();
  for (const auto& e : suite.entries)
    say(c, (e.passed ? "PASS " : "FAIL ") + e.name + " worst=" + fmt(e.worst_ratio) +
               (e.passed ? "" : " seed=" + std::to_string(e.failing_seed)));

  json symbols = json::array();
  auto square = TorusGrid::make({32, 32}, {1.0, 1.0});
  for (auto grp : {StructureGroup::u1(), StructureGroup::su2()})
    for (int k = 0; k <= 3; ++k) {
      Rng rng(seed * 31 + k);
      SymbolReport r = check_symbol(k, symbol_samples, square, grp, rng);
      json j = to_json(r);
      j["group"] = grp.name();
      symbols.push_back(j);
      all = all && r.passed();
      say(c, std::string(r.passed() ? "PASS " : "FAIL ") + "symbol[" + grp.name() + "] k=" + std::to_string(k));
    }
  man["symbols"] = symbols;

  {
    Rng rng(seed * 97);
    auto grp = StructureGroup::su2();
    auto G = random_connection(square, grp, 0.6, 2, rng);
    auto w = random_form(square, grp, 0, 1.0, 2, rng);
    ScalingReport sr = check_scaling(G, w, 0.5, 1, 2.0);
    const bool pass = sr.nabla_residual <= 1e-10 && std::abs(sr.measured_exponent - sr.expected_exponent) <= 1e-8;
    man["scaling"] = to_json(sr);
    man["scaling"]["passed"] = pass;
    all = all && pass;
    say(c, std::string(pass ? "PASS " : "FAIL ") + "scaling residual=" + fmt(sr.nabla_residual) +
               " exponent=" + fmt(sr.measured_exponent));
  }
  man["passed"] = all;
  write_json_file((out / "manifest.json").string(), man);
  say(c, std::string("verify: ") + (all ? "all checks passed" : "FAILURES") + " -> " + (out / "manifest.json").string());
  return all ? ok : check_failed;
}

// ---------------------------------------------------------------------------

struct Field {
  GridPtr grid;
  StructureGroup group;
  ConnectionField G;
  int band = 3;
};

// Grid, group and initial data from the config if given, else a 32² su(2) default.
Field field_from(const Common& c, double amplitude, int band) {
  Field f;
  if (!c.config.empty()) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) cfg.init.seed = *c.seed;
    f.grid = TorusGrid::make(cfg.grid);
    f.group = cfg.group;
    f.G = make_initial(f.grid, f.group, cfg.init);
    f.band = cfg.init.band;
  } else {
    f.grid = TorusGrid::make({32, 32}, {1.0, 1.0});
    f.group = StructureGroup::su2();
    Rng rng(c.seed.value_or(1));
    f.G = random_connection(f.grid, f.group, amplitude, band, rng);
    f.band = band;
  }
  return f;
}

int cmd_gradcheck(const Common& c, const std::vector<int>& ks, int directions, double tol) {
  Field f = field_from(c, 0.6, 3);
  Rng rng(c.seed.value_or(1) + 7);
  json rep = header("gradcheck", c);
  json arr = json::array();
  bool all = true;
  for (int k : ks) {
    GradientCheckReport r = gradient_check(f.G, EnergySpec::ymk(k), directions, f.band, rng);
    const bool pass = r.worst_relative <= tol;
    all = all && pass;
    arr.push_back({{"k", k}, {"directions", r.directions}, {"worst_relative", r.worst_relative}, {"step", r.step},
                   {"tolerance", tol}, {"passed", pass}});
    say(c, std::string(pass ? "PASS " : "FAIL ") + "gradient k=" + std::to_string(k) + " worst=" + fmt(r.worst_relative));
  }
  rep["results"] = arr;
  rep["passed"] = all;
  write_json_file((fs::path(c.out.empty() ? "." : c.out) / "gradcheck.json").string(), rep);
  return all ? ok : check_failed;
}

int cmd_gaugecheck(const Common& c, int pairs, int size) {
  auto g = TorusGrid::make({size, size}, {1.0, 1.0});
  StructureGroup grp = StructureGroup::su2();
  if (!c.config.empty()) grp = load_config(c.config).group;
  Rng rng(c.seed.value_or(1));
  GaugeCheckReport r = gauge_check(g, grp, pairs, 2, 0.6, 2, rng);
  json rep = header("gaugecheck", c);
  bool all = r.curvature_conjugation <= 1e-10;
  json en = json::object();
  for (std::size_t e = 0; e < r.energies.size(); ++e) {
    const bool pass = r.worst_relative[e] <= 1e-8;
    all = all && pass;
    en[r.energies[e]] = {{"worst_relative", r.worst_relative[e]}, {"passed", pass}};
    say(c, std::string(pass ? "PASS " : "FAIL ") + r.energies[e] + " worst=" + fmt(r.worst_relative[e]));
  }
  say(c, std::string(r.curvature_conjugation <= 1e-10 ? "PASS " : "FAIL ") + "curvature conjugation " +
             fmt(r.curvature_conjugation));
  rep["group"] = grp.name();
  rep["grid"] = size;
  rep["pairs"] = pairs;
  rep["energies"] = en;
  rep["curvature_conjugation"] = r.curvature_conjugation;
  rep["passed"] = all;
  write_json_file((fs::path(c.out.empty() ? "." : c.out) / "gaugecheck.json").string(), rep);
  return all ? ok : check_failed;
}

// ---------------------------------------------------------------------------

int cmd_rescale(const Common& c, const std::string& snapshot, double lambda, std::vector<double> center,
                std::optional<int> k_override) {
  Snapshot snap = read_snapshot(snapshot);
  const auto& G = snap.connection;
  const auto& g = *G.grid();
  FormField F = curvature(G);
  auto scan = blowup_monitor(F, FlowConfig{}.radius_for(g), snap.k + 2.0);
  if (center.empty()) center = scan.sup_location;
  if (static_cast<int>(center.size()) != g.dim()) throw ConfigError("rescale: --center needs one coordinate per axis");
  ConnectionField R = rescale_snapshot(G, center, lambda);
  // F^λ = λ²F(λx): compare the curvature of the output with the zoomed curvature
  // (modes beyond ⌊λB⌋ of the output curvature come from products the input grid truncated)
  const int band = static_cast<int>(std::floor(lambda * g.band_limit() + 1e-9));
  FormField lhs = low_pass(curvature(R), band), rhs = low_pass(zoom(F, center, lambda, 2.0), band);
  double diff = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < lhs.components(); ++i)
    for (std::size_t p = 0; p < lhs[i].raw().size(); ++p) {
      diff = std::max(diff, std::abs(lhs[i].raw()[p] - rhs[i].raw()[p]));
      mag = std::max(mag, std::abs(rhs[i].raw()[p]));
    }
  const int k = k_override.value_or(snap.k);
  const fs::path out(c.out.empty() ? fs::path(snapshot).parent_path() : fs::path(c.out));
  const std::string stem = fs::path(snapshot).stem().string() + "_rescaled";
  const std::string side = write_snapshot(out.string(), stem, {R, snap.t, snap.k, snap.step, snap.seed});
  json rep = header("rescale", c);
  rep["input"] = snapshot;
  rep["output"] = side;
  rep["lambda"] = lambda;
  rep["center"] = center;
  rep["scaling_residual"] = diff / (1.0 + mag);
  rep["scaling_exact"] = diff / (1.0 + mag) <= 1e-8;
  if (scan.sup_F > 0.0) {
    BlowupNormalization nb = normalize_blowup(G, scan.sup_location, k);
    rep["normalization"] = {{"k", k},
                            {"point", nb.point},
                            {"peak", nb.peak},
                            {"lambda_i", nb.lambda_i},
                            {"spatial_scale", nb.spatial_scale},
                            {"rescaled_peak", nb.rescaled_peak}};
  } else {
    rep["normalization"] = nullptr;
  }
  write_json_file((out / (stem + "_report.json")).string(), rep);
  say(c, "rescale: lambda=" + fmt(lambda) + " residual=" + fmt(diff / (1.0 + mag)) + " -> " + side);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ymklab: higher-order Yang-Mills flows on flat tori"};
  app.require_subcommand(1);
  Common c;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "experiment config (JSON)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", seed, "random seed (overrides init.seed)");
    sub->add_flag("--quiet", c.quiet, "suppress progress output");
  };

  auto* run = app.add_subcommand("run", "integrate a flow and write diagnostics and snapshots");
  add_common(run);
  std::string resume;
  run->add_option("--resume", resume, "snapshot sidecar to resume from");

  auto* verify = app.add_subcommand("verify", "run the randomized identity suite and write a manifest");
  add_common(verify);
  int trials = 50, samples = 100;
  verify->add_option("--trials", trials, "trials per identity")->check(CLI::PositiveNumber);
  verify->add_option("--symbol-samples", samples, "random (xi, B) samples per symbol check")->check(CLI::PositiveNumber);

  auto* grad = app.add_subcommand("gradcheck", "directional-derivative test of the discrete gradients");
  add_common(grad);
  std::vector<int> ks{0, 1, 2};
  int directions = 20;
  double tol = 1e-6;
  grad->add_option("--k", ks, "orders to check")->check(CLI::Range(0, 3));
  grad->add_option("--directions", directions, "random directions")->check(CLI::PositiveNumber);
  grad->add_option("--tol", tol, "relative tolerance");

  auto* gauge = app.add_subcommand("gaugecheck", "gauge invariance of the energies and curvature conjugation");
  add_common(gauge);
  int pairs = 20, size = 64;
  gauge->add_option("--pairs", pairs, "random (connection, gauge) pairs")->check(CLI::PositiveNumber);
  gauge->add_option("--size", size, "grid points per axis")->check(CLI::Range(8, 512));

  auto* rescale = app.add_subcommand("rescale", "rescale a snapshot about a point by a dyadic factor");
  add_common(rescale);
  std::string snapshot;
  double lambda = 0.5;
  std::vector<double> center;
  std::optional<int> k_norm;
  rescale->add_option("--snapshot", snapshot, "snapshot sidecar")->required();
  rescale->add_option("--lambda", lambda, "dyadic factor 2^-j");
  rescale->add_option("--center", center, "center (defaults to the point of max |F|)")->delimiter(',');
  rescale->add_option("--k", k_norm, "order for the blowup normalization (defaults to the snapshot's k)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }
  try {
    c.threads = threads_from_env();
    for (auto* sub : {run, verify, grad, gauge, rescale})
      if (sub->parsed() && sub->count("--seed")) c.seed = seed;
    if (run->parsed()) {
      if (c.config.empty()) throw ConfigError("run: --config is required");
      return cmd_run(c, resume);
    }
    if (verify->parsed()) return cmd_verify(c, trials, samples);
    if (grad->parsed()) return cmd_gradcheck(c, ks, directions, tol);
    if (gauge->parsed()) return cmd_gaugecheck(c, pairs, size);
    return cmd_rescale(c, snapshot, lambda, center, k_norm);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return usage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return io;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return check_failed;
  }
}
