#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flow.hpp"
#include "identities.hpp"

namespace ymk {

using json = nlohmann::json;

// Schema violations in an experiment config (CLI exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failed reads or writes of artifacts (CLI exit status 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitKind { random_band_limited, abelian_mode, lump };

inline std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::random_band_limited: return "random_band_limited";
    case InitKind::abelian_mode: return "abelian_mode";
    default: return "lump";
  }
}

struct InitSpec {
  InitKind kind = InitKind::random_band_limited;
  std::uint64_t seed = 1;
  double amplitude = 0.1;
  int band = 2;
  // abelian_mode: Γ_axis = amplitude·X·sin(2π Σ mode_i x_i / L_i) with X the first basis element.
  std::vector<int> mode;
  int axis = 0;
  // lump: Gaussian envelope of this width around `center` (defaults to the box center).
  double width = 0.0;
  std::vector<double> center;
  // Compress the generated data to period L/repeat (needed for exact zooms by 1/repeat).
  int repeat = 1;
};

struct MonitorSpec {
  int sample_interval = 1;
  long snapshot_interval = 0;  // steps between snapshots, 0 disables
  double ball_radius = 0.0;
  int q_max = 2;
  double sup_ceiling = 1e6;
  int scan_stride = 4;
};

struct OutputSpec {
  std::string dir = "out";
  std::string csv = "diagnostics.csv";
  std::string snapshot_prefix = "snapshot";
};

struct ExperimentConfig {
  GridDescriptor grid{{32, 32}, {1.0, 1.0}, -1};
  StructureGroup group = StructureGroup::su2();
  FlowConfig flow;
  InitSpec init;
  MonitorSpec monitor;
  OutputSpec output;

  // The flow config with monitor settings and the init seed folded in.
  FlowConfig flow_config() const {
    FlowConfig f = flow;
    f.sample_interval = monitor.sample_interval;
    f.ball_radius = monitor.ball_radius;
    f.q_max = monitor.q_max;
    f.sup_ceiling = monitor.sup_ceiling;
    f.scan_stride = monitor.scan_stride;
    f.seed = init.seed;
    return f;
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const std::string& where, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::get_or;
  ExperimentConfig c;
  check_keys(j, "config", {"grid", "group", "flow", "init", "monitor", "output"});
  if (!j.contains("grid")) throw ConfigError("config: missing 'grid'");
  const json& g = j.at("grid");
  check_keys(g, "grid", {"sizes", "lengths", "band_limit"});
  c.grid.sizes = get_or<std::vector<int>>(g, "grid", "sizes", {});
  c.grid.lengths = get_or<std::vector<double>>(g, "grid", "lengths", std::vector<double>(c.grid.sizes.size(), 1.0));
  c.grid.band_limit = get_or<int>(g, "grid", "band_limit", -1);
  if (c.grid.sizes.empty() || c.grid.sizes.size() > 4) throw ConfigError("grid.sizes: need 1 to 4 axes");
  if (c.grid.lengths.size() != c.grid.sizes.size()) throw ConfigError("grid.lengths: one length per axis");
  for (int n : c.grid.sizes)
    if (n < 4 || n % 2) throw ConfigError("grid.sizes: entries must be even and >= 4");
  for (double L : c.grid.lengths)
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid.lengths: entries must be positive");
  int nmin = *std::min_element(c.grid.sizes.begin(), c.grid.sizes.end());
  if (c.grid.band_limit > nmin / 2 - 1) throw ConfigError("grid.band_limit: must be <= N/2 - 1");

  try {
    c.group = StructureGroup::parse(get_or<std::string>(j, "config", "group", "su2"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }

  if (j.contains("flow")) {
    const json& f = j.at("flow");
    check_keys(f, "flow", {"k", "rho", "integrator", "dt_policy", "dt", "cfl_safety", "t_max", "max_steps", "k_max"});
    c.flow.k = get_or<int>(f, "flow", "k", c.flow.k);
    c.flow.rho = get_or<double>(f, "flow", "rho", c.flow.rho);
    std::string integ = get_or<std::string>(f, "flow", "integrator", "euler");
    if (integ == "euler") c.flow.integrator = Integrator::euler;
    else if (integ == "rk4") c.flow.integrator = Integrator::rk4;
    else throw ConfigError("flow.integrator: expected 'euler' or 'rk4'");
    std::string pol = get_or<std::string>(f, "flow", "dt_policy", "cfl");
    if (pol == "cfl") c.flow.dt_policy = DtPolicy::cfl;
    else if (pol == "fixed") c.flow.dt_policy = DtPolicy::fixed;
    else throw ConfigError("flow.dt_policy: expected 'cfl' or 'fixed'");
    c.flow.dt = get_or<double>(f, "flow", "dt", 0.0);
    c.flow.cfl_safety = get_or<double>(f, "flow", "cfl_safety", c.flow.cfl_safety);
    c.flow.t_max = get_or<double>(f, "flow", "t_max", c.flow.t_max);
    c.flow.max_steps = get_or<long>(f, "flow", "max_steps", 0);
    c.flow.k_max = get_or<int>(f, "flow", "k_max", c.flow.k_max);
  }

  if (j.contains("init")) {
    const json& i = j.at("init");
    check_keys(i, "init", {"kind", "seed", "amplitude", "band", "mode", "axis", "width", "center", "repeat"});
    std::string kind = get_or<std::string>(i, "init", "kind", "random_band_limited");
    if (kind == "random_band_limited") c.init.kind = InitKind::random_band_limited;
    else if (kind == "abelian_mode") c.init.kind = InitKind::abelian_mode;
    else if (kind == "lump") c.init.kind = InitKind::lump;
    else throw ConfigError("init.kind: expected random_band_limited, abelian_mode or lump");
    c.init.seed = get_or<std::uint64_t>(i, "init", "seed", c.init.seed);
    c.init.amplitude = get_or<double>(i, "init", "amplitude", c.init.amplitude);
    c.init.band = get_or<int>(i, "init", "band", c.init.band);
    c.init.mode = get_or<std::vector<int>>(i, "init", "mode", {});
    c.init.axis = get_or<int>(i, "init", "axis", 0);
    c.init.width = get_or<double>(i, "init", "width", 0.0);
    c.init.center = get_or<std::vector<double>>(i, "init", "center", {});
    c.init.repeat = get_or<int>(i, "init", "repeat", 1);
  }

  if (j.contains("monitor")) {
    const json& m = j.at("monitor");
    check_keys(m, "monitor", {"sample_interval", "snapshot_interval", "ball_radius", "q_max", "sup_ceiling", "scan_stride"});
    c.monitor.sample_interval = get_or<int>(m, "monitor", "sample_interval", 1);
    c.monitor.snapshot_interval = get_or<long>(m, "monitor", "snapshot_interval", 0);
    c.monitor.ball_radius = get_or<double>(m, "monitor", "ball_radius", 0.0);
    c.monitor.q_max = get_or<int>(m, "monitor", "q_max", 2);
    c.monitor.sup_ceiling = get_or<double>(m, "monitor", "sup_ceiling", 1e6);
    c.monitor.scan_stride = get_or<int>(m, "monitor", "scan_stride", 4);
  }
  if (c.monitor.snapshot_interval < 0) throw ConfigError("monitor.snapshot_interval: must be >= 0");
  if (c.monitor.sample_interval >= 1 && c.monitor.snapshot_interval % c.monitor.sample_interval != 0)
    throw ConfigError("monitor.snapshot_interval: must be a multiple of sample_interval");

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"dir", "csv", "snapshot_prefix"});
    c.output.dir = get_or<std::string>(o, "output", "dir", c.output.dir);
    c.output.csv = get_or<std::string>(o, "output", "csv", c.output.csv);
    c.output.snapshot_prefix = get_or<std::string>(o, "output", "snapshot_prefix", c.output.snapshot_prefix);
  }

  const int n = static_cast<int>(c.grid.sizes.size());
  if (!(c.init.amplitude >= 0.0) || !std::isfinite(c.init.amplitude)) throw ConfigError("init.amplitude: must be >= 0");
  if (c.init.band < 1) throw ConfigError("init.band: must be >= 1");
  if (c.init.repeat < 1) throw ConfigError("init.repeat: must be >= 1");
  for (int N : c.grid.sizes)
    if (N % c.init.repeat) throw ConfigError("init.repeat: must divide every grid size");
  int grid_band = c.grid.band_limit >= 0 ? c.grid.band_limit : nmin / 3;
  if (c.init.kind == InitKind::random_band_limited && c.init.band * c.init.repeat > grid_band)
    throw ConfigError("init.band: band times repeat exceeds the grid band limit (initial data must be band-limited)");
  if (c.init.kind == InitKind::abelian_mode) {
    if (static_cast<int>(c.init.mode.size()) != n) throw ConfigError("init.mode: one wavenumber per axis");
    long k2 = 0;
    for (int v : c.init.mode) k2 += static_cast<long>(v) * v;
    const long reach = static_cast<long>(grid_band) * grid_band;
    if (k2 == 0 || k2 * c.init.repeat * c.init.repeat > reach) throw ConfigError("init.mode: must be nonzero and within the band");
    if (c.init.axis < 0 || c.init.axis >= n) throw ConfigError("init.axis: out of range");
  }
  if (c.init.kind == InitKind::lump) {
    if (c.init.width < 0.0) throw ConfigError("init.width: must be >= 0");
    if (!c.init.center.empty() && static_cast<int>(c.init.center.size()) != n)
      throw ConfigError("init.center: one coordinate per axis");
  }
  try {
    c.flow_config().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

inline json grid_to_json(const TorusGrid& g) {
  std::vector<double> L(g.dim());
  for (int a = 0; a < g.dim(); ++a) L[a] = g.length(a);
  return {{"sizes", g.sizes()}, {"lengths", L}, {"band_limit", g.band_limit()}};
}

inline json to_json(const ExperimentConfig& c) {
  const auto& f = c.flow;
  json init = {{"kind", to_string(c.init.kind)}, {"seed", c.init.seed}, {"amplitude", c.init.amplitude}, {"band", c.init.band}};
  if (!c.init.mode.empty()) init["mode"] = c.init.mode;
  if (c.init.kind == InitKind::abelian_mode) init["axis"] = c.init.axis;
  if (c.init.kind == InitKind::lump) init["width"] = c.init.width;
  if (!c.init.center.empty()) init["center"] = c.init.center;
  if (c.init.repeat != 1) init["repeat"] = c.init.repeat;
  return {
      {"grid", {{"sizes", c.grid.sizes}, {"lengths", c.grid.lengths}, {"band_limit", c.grid.band_limit}}},
      {"group", c.group.name()},
      {"flow",
       {{"k", f.k}, {"rho", f.rho}, {"integrator", to_string(f.integrator)}, {"dt_policy", to_string(f.dt_policy)},
        {"dt", f.dt}, {"cfl_safety", f.cfl_safety}, {"t_max", f.t_max}, {"max_steps", f.max_steps}, {"k_max", f.k_max}}},
      {"init", init},
      {"monitor",
       {{"sample_interval", c.monitor.sample_interval}, {"snapshot_interval", c.monitor.snapshot_interval},
        {"ball_radius", c.monitor.ball_radius}, {"q_max", c.monitor.q_max}, {"sup_ceiling", c.monitor.sup_ceiling},
        {"scan_stride", c.monitor.scan_stride}}},
      {"output", {{"dir", c.output.dir}, {"csv", c.output.csv}, {"snapshot_prefix", c.output.snapshot_prefix}}}};
}

// ---------------------------------------------------------------------------
// Initial data. Every generator returns a band-limited field.

inline ConnectionField abelian_mode(const GridPtr& g, const StructureGroup& grp, const std::vector<int>& mode,
                                    int axis, double amplitude) {
  if (static_cast<int>(mode.size()) != g->dim()) throw std::invalid_argument("abelian_mode: one wavenumber per axis");
  ConnectionField G(g, grp, 1);
  const auto X = grp.basis().front();
  for (std::size_t p = 0; p < g->points(); ++p) {
    double phase = 0.0;
    for (int a = 0; a < g->dim(); ++a) phase += two_pi * mode[a] * g->coord(p, a) / g->length(a);
    const double v = amplitude * std::sin(phase);
    for (int e = 0; e < grp.m * grp.m; ++e) G(axis).at(p)[e] = v * X[e];
  }
  return project(G);
}

// Localized connection: Γ_a = amplitude·e(x)·X_{a mod dim g} with a Gaussian envelope e
// around `center`, projected onto the retained band. For su(2) the curvature carries the
// non-abelian term amplitude²·e²·[X_a, X_b], concentrated at the center.
inline ConnectionField lump(const GridPtr& g, const StructureGroup& grp, double amplitude, double width,
                            std::vector<double> center = {}) {
  const int n = g->dim();
  if (center.empty())
    for (int a = 0; a < n; ++a) center.push_back(0.5 * g->length(a));
  if (static_cast<int>(center.size()) != n) throw std::invalid_argument("lump: center dimension mismatch");
  if (width <= 0.0) {
    width = g->length(0);
    for (int a = 1; a < n; ++a) width = std::min(width, g->length(a));
    width /= 10.0;
  }
  const auto basis = grp.basis();
  ConnectionField G(g, grp, 1);
  for (std::size_t p = 0; p < g->points(); ++p) {
    double d2 = 0.0;
    for (int a = 0; a < n; ++a) {
      double d = g->displacement(p, a, center[a]);
      d2 += d * d;
    }
    const double e = amplitude * std::exp(-0.5 * d2 / (width * width));
    for (int a = 0; a < n; ++a) {
      const auto& X = basis[a % basis.size()];
      for (int k = 0; k < grp.m * grp.m; ++k) G(a).at(p)[k] = e * X[k];
    }
  }
  return project(G);
}

inline ConnectionField make_initial(const GridPtr& g, const StructureGroup& grp, const InitSpec& s) {
  ConnectionField G;
  switch (s.kind) {
    case InitKind::random_band_limited: {
      Rng rng(s.seed);
      G = random_connection(g, grp, s.amplitude, s.band, rng);
      break;
    }
    case InitKind::abelian_mode: G = abelian_mode(g, grp, s.mode, s.axis, s.amplitude); break;
    default: G = lump(g, grp, s.amplitude, s.width, s.center);
  }
  return s.repeat > 1 ? project(repeat_period(G, s.repeat)) : G;
}

// ---------------------------------------------------------------------------
// CSV diagnostics.

inline const char* csv_header() {
  return "t,ym,ymk,bym,ym_rho_k,grad_norm,sup_F,local_lp_max,smooth_q1,smooth_q2";
}

inline std::string csv_row(const DiagnosticsRecord& r) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string s = num(r.t);
  for (double v : {r.ym, r.ymk, r.bym, r.ym_rho_k, r.grad_norm, r.sup_F, r.local_lp_max}) s += "," + num(v);
  for (std::size_t q = 0; q < 2; ++q) s += "," + (q < r.smoothing.size() ? num(r.smoothing[q]) : std::string("nan"));
  return s;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write '" + path + "'");
    out_ << csv_header() << '\n';
  }
  void write(const DiagnosticsRecord& r) {
    out_ << csv_row(r) << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed on '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Snapshots: JSON sidecar plus raw little-endian float64 payload. Payload order is
// axis-major, then matrix entry (row-major), then grid point (C order), each
// value stored as interleaved re/im.

struct Snapshot {
  ConnectionField connection;
  double t = 0.0;
  int k = 0;
  long step = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* snapshot_layout = "axis-major, component-major, interleaved re/im float64";

namespace detail {

inline double to_little(double v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  u = __builtin_bswap64(u);
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace detail

inline std::size_t snapshot_payload_bytes(const TorusGrid& g, int m) {
  return static_cast<std::size_t>(g.dim()) * m * m * 2 * g.points() * 8;
}

// Writes <dir>/<stem>.json and <dir>/<stem>.bin; returns the sidecar path.
inline std::string write_snapshot(const std::string& dir, const std::string& stem, const Snapshot& s) {
  const auto& G = s.connection;
  const auto& g = *G.grid();
  const int m = G.m(), b = m * m;
  std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "'");
  const std::string bin = stem + ".bin";
  std::vector<double> payload;
  payload.reserve(snapshot_payload_bytes(g, m) / 8);
  for (int a = 0; a < G.dim(); ++a)
    for (int e = 0; e < b; ++e)
      for (std::size_t p = 0; p < g.points(); ++p) {
        const cplx z = G[a].at(p)[e];
        payload.push_back(detail::to_little(z.real()));
        payload.push_back(detail::to_little(z.imag()));
      }
  {
    std::ofstream out(base / bin, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * 8));
    if (!out) throw IoError("cannot write '" + (base / bin).string() + "'");
  }
  json side = {{"grid", grid_to_json(g)},
               {"group", G.group().name()},
               {"t", s.t},
               {"k", s.k},
               {"step", s.step},
               {"seed", s.seed},
               {"endianness", "little"},
               {"layout", snapshot_layout},
               {"payload", bin},
               {"payload_bytes", payload.size() * 8}};
  const auto side_path = (base / (stem + ".json")).string();
  std::ofstream out(side_path, std::ios::trunc);
  out << side.dump(2) << '\n';
  if (!out) throw IoError("cannot write '" + side_path + "'");
  return side_path;
}

inline Snapshot read_snapshot(const std::string& sidecar_path) {
  json side = read_json_file(sidecar_path);
  Snapshot s;
  GridPtr g;
  StructureGroup grp;
  std::string bin;
  try {
    if (side.at("endianness").get<std::string>() != "little" || side.at("layout").get<std::string>() != snapshot_layout)
      throw IoError("snapshot '" + sidecar_path + "': unsupported layout");
    const json& gj = side.at("grid");
    g = TorusGrid::make(gj.at("sizes").get<std::vector<int>>(), gj.at("lengths").get<std::vector<double>>(),
                        gj.at("band_limit").get<int>());
    grp = StructureGroup::parse(side.at("group").get<std::string>());
    s.t = side.at("t").get<double>();
    s.k = side.at("k").get<int>();
    s.step = side.value("step", 0L);
    s.seed = side.value("seed", std::uint64_t{0});
    bin = side.at("payload").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError("snapshot '" + sidecar_path + "': malformed sidecar (" + e.what() + ")");
  } catch (const std::invalid_argument& e) {
    throw IoError("snapshot '" + sidecar_path + "': " + e.what());
  }
  const auto bin_path = std::filesystem::path(sidecar_path).parent_path() / bin;
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + bin_path.string() + "'");
  const int m = grp.m, b = m * m;
  const std::size_t bytes = snapshot_payload_bytes(*g, m);
  std::vector<double> payload(bytes / 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes) || in.peek() != std::char_traits<char>::eof())
    throw IoError("snapshot payload '" + bin_path.string() + "' has the wrong length");
  s.connection = ConnectionField(g, grp, 1);
  std::size_t i = 0;
  for (int a = 0; a < g->dim(); ++a)
    for (int e = 0; e < b; ++e)
      for (std::size_t p = 0; p < g->points(); ++p, i += 2)
        s.connection[a].at(p)[e] = cplx(detail::to_little(payload[i]), detail::to_little(payload[i + 1]));
  return s;
}

// ---------------------------------------------------------------------------
// Reports.

inline void write_json_file(const std::string& path, const json& j) {
  std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("cannot write '" + path + "'");
}

inline json to_json(const DiagnosticsRecord& r) {
  return {{"t", r.t},         {"step", r.step},           {"ym", r.ym},
          {"ymk", r.ymk},     {"bym", r.bym},             {"ym_rho_k", r.ym_rho_k},
          {"grad_norm", r.grad_norm}, {"sup_F", r.sup_F}, {"local_lp_max", r.local_lp_max},
          {"smoothing", r.smoothing}, {"blowup", r.blowup}};
}

inline json to_json(const BlowupInfo& b) {
  return {{"flag", b.flag}, {"reason", b.reason}, {"t", b.t}, {"step", b.step}, {"sup_F", b.sup_F}, {"location", b.location}};
}

inline json to_json(const std::vector<SmoothingEntry>& rep) {
  json a = json::array();
  for (const auto& e : rep)
    a.push_back({{"q", e.q}, {"sup", e.sup}, {"finite", e.finite}, {"tail_nonincreasing", e.tail_nonincreasing}});
  return a;
}

inline json to_json(const SuiteReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"name", e.name},
                       {"trials", e.trials},
                       {"worst_ratio", e.worst_ratio},
                       {"tolerance", e.tolerance},
                       {"worst_seed", e.worst_seed},
                       {"failing_seed", e.failing_seed},
                       {"passed", e.passed}});
  return {{"entries", entries}, {"seconds", r.seconds}, {"passed", r.passed()}};
}

inline json to_json(const SymbolReport& r) {
  return {{"k", r.k},
          {"samples", r.samples},
          {"psi_closed_max", r.psi_closed_max},
          {"psi_discrete_max", r.psi_discrete_max},
          {"phi_discrete_max", r.phi_discrete_max},
          {"parallel_max", r.parallel_max},
          {"orthogonal_max", r.orthogonal_max},
          {"gram_min_eigen", r.gram_min_eigen},
          {"kernel_dim", r.kernel_dim},
          {"expected_kernel_dim", r.expected_kernel_dim},
          {"passed", r.passed()}};
}

inline json to_json(const ScalingReport& r) {
  return {{"lambda", r.lambda},
          {"l", r.l},
          {"nabla_residual", r.nabla_residual},
          {"p", r.p},
          {"q", r.q},
          {"r", r.r},
          {"expected_exponent", r.expected_exponent},
          {"measured_exponent", r.measured_exponent},
          {"ball_ratio", r.ball_ratio}};
}

}  // namespace ymk
