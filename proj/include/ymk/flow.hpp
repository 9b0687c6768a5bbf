#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "energy.hpp"

namespace ymk {

enum class Integrator { euler, rk4 };
enum class DtPolicy { fixed, cfl };

inline std::string to_string(Integrator i) { return i == Integrator::euler ? "euler" : "rk4"; }
inline std::string to_string(DtPolicy p) { return p == DtPolicy::fixed ? "fixed" : "cfl"; }

struct FlowConfig {
  int k = 1;
  double rho = 0.0;  // 0 runs the plain k-flow, > 0 the (ρ,k)-flow
  Integrator integrator = Integrator::euler;
  DtPolicy dt_policy = DtPolicy::cfl;
  double dt = 0.0;          // used when dt_policy == fixed
  double cfl_safety = 0.5;  // c in dt = c / ξ_max^{2k+2}
  double t_max = 1.0;
  long max_steps = 0;  // 0 means no limit
  int sample_interval = 1;
  double ball_radius = 0.0;  // 0 picks min(L)/8
  int q_max = 2;
  double sup_ceiling = 1e6;
  int scan_stride = 4;
  int k_max = conventions::default_k_max;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 0 || k > k_max) throw std::invalid_argument("flow config: k must lie in [0, k_max]");
    if (!(rho >= 0.0)) throw std::invalid_argument("flow config: rho must be >= 0");
    if (dt_policy == DtPolicy::fixed && !(dt > 0.0)) throw std::invalid_argument("flow config: fixed dt must be > 0");
    if (dt_policy == DtPolicy::cfl && !(cfl_safety > 0.0 && cfl_safety <= 1.0))
      throw std::invalid_argument("flow config: cfl safety factor must lie in (0, 1]");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("flow config: t_max must be finite and >= 0");
    if (max_steps < 0) throw std::invalid_argument("flow config: max_steps must be >= 0");
    if (sample_interval < 1) throw std::invalid_argument("flow config: sample_interval must be >= 1");
    if (!(ball_radius >= 0.0)) throw std::invalid_argument("flow config: ball_radius must be >= 0");
    if (q_max < 0 || q_max > 2) throw std::invalid_argument("flow config: q_max must lie in [0, 2]");
    if (!(sup_ceiling > 0.0)) throw std::invalid_argument("flow config: sup_ceiling must be > 0");
    if (scan_stride < 1) throw std::invalid_argument("flow config: scan_stride must be >= 1");
  }

  EnergySpec energy_spec() const {
    EnergySpec s = rho > 0.0 ? EnergySpec::ym_rho_k(rho, k) : EnergySpec::ymk(k);
    s.k_max = k_max;
    return s;
  }

  double radius_for(const TorusGrid& g) const {
    if (ball_radius > 0.0) return ball_radius;
    double lmin = g.length(0);
    for (int a = 1; a < g.dim(); ++a) lmin = std::min(lmin, g.length(a));
    return lmin / 8.0;
  }
};

// Stable explicit step for the order-(2k+2) linearization ∂Γ = −s·ξ^{2k+2}Γ:
// dt = c / ξ_max^{2k+2}, reduced by 2/s when the gradient scale s exceeds 2.
// With ρ > 0 the symbol is s(ρξ^{2k+2} + ξ²).
inline double cfl_timestep(const TorusGrid& g, int k, double gradient_scale, double c = 0.5, double rho = 0.0) {
  if (k < 0) throw std::invalid_argument("cfl_timestep: k must be >= 0");
  if (g.band_limit() < 1) throw std::invalid_argument("cfl_timestep: band_limit must be >= 1");
  const double xi = g.xi_max();
  double symbol = rho > 0.0 ? rho * std::pow(xi, 2 * k + 2) + xi * xi : std::pow(xi, 2 * k + 2);
  double safety = gradient_scale > 2.0 ? 2.0 / gradient_scale : 1.0;
  return c * safety / symbol;
}

inline double timestep(const FlowConfig& cfg, const TorusGrid& g) {
  if (cfg.dt_policy == DtPolicy::fixed) return cfg.dt;
  return cfl_timestep(g, cfg.k, conventions::gradient_scale, cfg.cfl_safety, cfg.rho);
}

struct FlowState {
  double t = 0.0;
  ConnectionField connection;
  long step_index = 0;
  double last_dissipation = 0.0;  // ‖grad‖² at the start of the last step
  bool blowup = false;
};

struct DiagnosticsRecord {
  double t = 0.0;
  long step = 0;
  double ym = 0.0, ymk = 0.0, bym = 0.0, ym_rho_k = 0.0;
  double grad_norm = 0.0;
  double sup_F = 0.0;
  double local_lp_max = 0.0;
  std::vector<double> smoothing;  // entry q−1 holds t^{q/(k+1)}‖∇^(q)F‖²
  bool blowup = false;

  bool finite() const {
    for (double v : {t, ym, ymk, bym, ym_rho_k, grad_norm, sup_F, local_lp_max})
      if (!std::isfinite(v)) return false;
    for (double v : smoothing)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// One explicit step of ∂Γ/∂t = −grad_discrete(E). A non-finite gradient or
// update sets the blowup flag and leaves the state untouched.
inline FlowState step(const FlowState& s, const FlowConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  FlowState out = s;
  if (s.blowup) return out;
  const auto spec = cfg.energy_spec();
  const ConnectionField& G = s.connection;
  ConnectionField k1 = grad_discrete(G, spec);
  if (!k1.all_finite()) {
    out.blowup = true;
    return out;
  }
  ConnectionField next = G;
  if (cfg.integrator == Integrator::euler) {
    next.axpy(-dt, k1);
  } else {
    ConnectionField tmp = G;
    tmp.axpy(-0.5 * dt, k1);
    ConnectionField k2 = grad_discrete(tmp, spec);
    tmp = G;
    tmp.axpy(-0.5 * dt, k2);
    ConnectionField k3 = grad_discrete(tmp, spec);
    tmp = G;
    tmp.axpy(-dt, k3);
    ConnectionField k4 = grad_discrete(tmp, spec);
    next.axpy(-dt / 6.0, k1);
    next.axpy(-dt / 3.0, k2);
    next.axpy(-dt / 3.0, k3);
    next.axpy(-dt / 6.0, k4);
  }
  if (!next.all_finite()) {
    out.blowup = true;
    return out;
  }
  out.connection = std::move(next);
  out.t = s.t + dt;
  out.step_index = s.step_index + 1;
  out.last_dissipation = l2_norm_sq(k1);
  return out;
}

inline FlowState step(const FlowState& s, const FlowConfig& cfg) {
  return step(s, cfg, timestep(cfg, *s.connection.grid()));
}

struct ConcentrationReport {
  double sup_F = 0.0;
  std::vector<double> sup_location;
  double local_lp_max = 0.0;
  std::vector<double> max_center;
  // Scan centers whose ball mass is at least `threshold` times the maximum, largest first.
  std::vector<std::vector<double>> concentration_points;
};

// Scans ∫_{B_r(c)}|F|^p over centers c on the lattice of every `stride`-th grid point.
// All ball masses come from one FFT convolution of |F|^p with the ball indicator.
inline ConcentrationReport blowup_monitor(const FormField& F, double radius, double p, int stride = 4,
                                          double threshold = 0.9) {
  if (!(p >= 1.0)) throw std::invalid_argument("blowup_monitor: p must be >= 1");
  if (stride < 1) throw std::invalid_argument("blowup_monitor: stride must be >= 1");
  const auto& gp = F.grid();
  const auto& g = *gp;
  const int n = g.dim();
  ConcentrationReport rep;
  ScalarField s2 = norm_sq_field(F);
  std::size_t arg = 0;
  for (std::size_t q = 0; q < g.points(); ++q)
    if (!(s2[q] <= s2[arg])) arg = q;
  rep.sup_F = std::sqrt(s2[arg]);
  for (int a = 0; a < n; ++a) rep.sup_location.push_back(g.coord(arg, a));

  ScalarField mask = ball_mask(gp, std::vector<double>(n, 0.0), radius);
  std::vector<cplx> d(g.points()), m(g.points()), dh(g.points()), mh(g.points());
  for (std::size_t q = 0; q < g.points(); ++q) {
    d[q] = std::pow(std::max(s2[q], 0.0), 0.5 * p);
    m[q] = mask[q];
  }
  g.forward(d.data(), dh.data(), 1);
  g.forward(m.data(), mh.data(), 1);
  for (std::size_t q = 0; q < g.points(); ++q) dh[q] *= mh[q];
  g.backward(dh.data(), d.data(), 1);

  std::vector<std::pair<double, std::size_t>> centers;
  for (std::size_t q = 0; q < g.points(); ++q) {
    auto idx = g.multi_index(q);
    bool on_lattice = true;
    for (int a = 0; a < n; ++a) on_lattice = on_lattice && idx[a] % stride == 0;
    if (on_lattice) centers.emplace_back(std::max(d[q].real(), 0.0) * g.cell_volume(), q);
  }
  std::stable_sort(centers.begin(), centers.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  rep.local_lp_max = centers.front().first;
  for (int a = 0; a < n; ++a) rep.max_center.push_back(g.coord(centers.front().second, a));
  if (rep.local_lp_max > 0.0)
    for (const auto& [mass, q] : centers) {
      if (mass < threshold * rep.local_lp_max || rep.concentration_points.size() >= 16) break;
      std::vector<double> c(n);
      for (int a = 0; a < n; ++a) c[a] = g.coord(q, a);
      rep.concentration_points.push_back(std::move(c));
    }
  return rep;
}

inline ConcentrationReport blowup_monitor(const FlowState& s, const FlowConfig& cfg) {
  return blowup_monitor(curvature(s.connection), cfg.radius_for(*s.connection.grid()), cfg.k + 2.0,
                        cfg.scan_stride);
}

inline DiagnosticsRecord diagnose(const FlowState& s, const FlowConfig& cfg) {
  DiagnosticsRecord r;
  r.t = s.t;
  r.step = s.step_index;
  r.smoothing.assign(cfg.q_max, 0.0);
  const ConnectionField& G = s.connection;
  if (!G.all_finite()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.ym = r.ymk = r.bym = r.ym_rho_k = r.grad_norm = r.sup_F = r.local_lp_max = nan;
    std::fill(r.smoothing.begin(), r.smoothing.end(), nan);
    r.blowup = true;
    return r;
  }
  FormField F = curvature(G);
  r.ym = ym_energy(G);
  r.ymk = ymk_energy(G, cfg.k, cfg.k_max);
  r.bym = bym_energy(G);
  r.ym_rho_k = cfg.rho * r.ymk + r.ym;
  ConnectionField grad = grad_discrete(G, cfg.energy_spec());
  r.grad_norm = grad.all_finite() ? std::sqrt(l2_norm_sq(grad)) : std::numeric_limits<double>::quiet_NaN();
  auto scan = blowup_monitor(F, cfg.radius_for(*G.grid()), cfg.k + 2.0, cfg.scan_stride);
  r.sup_F = scan.sup_F;
  r.local_lp_max = scan.local_lp_max;
  FormField nq = F;
  for (int q = 1; q <= cfg.q_max; ++q) {
    nq = covariant_derivative(G, nq);
    r.smoothing[q - 1] = std::pow(s.t, static_cast<double>(q) / (cfg.k + 1)) * l2_norm_sq(nq);
  }
  r.blowup = s.blowup || !r.finite();
  return r;
}

struct BlowupInfo {
  bool flag = false;
  std::string reason;
  double t = 0.0;
  long step = 0;
  double sup_F = 0.0;
  std::vector<double> location;  // point of max |F|
};

struct FlowResult {
  FlowState final_state;  // last good state when the blowup flag is set
  std::vector<DiagnosticsRecord> records;
  BlowupInfo blowup;
  double dt = 0.0;
  bool step_limit_reached = false;
};

using FlowObserver = std::function<void(const FlowState&, const DiagnosticsRecord&)>;

// Integrates to t_max (the last step is shortened to land on t_max exactly),
// sampling diagnostics every sample_interval steps and at the end.
// Starting from `start` (t and step index carry over) allows resuming from a snapshot.
inline FlowResult run_flow(const FlowState& start, const FlowConfig& cfg, const FlowObserver& observer = {}) {
  cfg.validate();
  FlowResult res;
  FlowState s = start;
  s.blowup = false;
  const ConnectionField& G0 = start.connection;
  res.dt = timestep(cfg, *G0.grid());
  auto flag = [&](const std::string& why, const FlowState& where, double sup, std::vector<double> loc) {
    res.blowup = {true, why, where.t, where.step_index, sup, std::move(loc)};
    s.blowup = true;
  };
  auto sample = [&]() {
    DiagnosticsRecord rec = diagnose(s, cfg);
    res.records.push_back(rec);
    if (observer) observer(s, rec);
    return rec;
  };
  if (!G0.all_finite()) throw std::invalid_argument("run_flow: initial connection is not finite");
  DiagnosticsRecord first = sample();
  if (first.blowup) flag("non-finite diagnostics at start", s, first.sup_F, {});

  const double eps = 1e-12 * std::max(cfg.t_max, res.dt);
  while (!s.blowup && s.t < cfg.t_max - eps) {
    if (cfg.max_steps > 0 && s.step_index >= cfg.max_steps) {
      res.step_limit_reached = true;
      break;
    }
    double h = std::min(res.dt, cfg.t_max - s.t);
    FlowState next = step(s, cfg, h);
    if (next.blowup) {
      auto scan = blowup_monitor(curvature(s.connection), cfg.radius_for(*G0.grid()), cfg.k + 2.0, cfg.scan_stride);
      flag("non-finite gradient or state", s, scan.sup_F, scan.sup_location);
      break;
    }
    FormField F = curvature(next.connection);
    auto scan = blowup_monitor(F, cfg.radius_for(*G0.grid()), cfg.k + 2.0, cfg.scan_stride);
    if (!std::isfinite(scan.sup_F) || scan.sup_F > cfg.sup_ceiling) {
      flag(std::isfinite(scan.sup_F) ? "sup_F exceeded ceiling" : "non-finite sup_F", next, scan.sup_F,
           scan.sup_location);
      break;
    }
    s = std::move(next);
    if (s.step_index % cfg.sample_interval == 0 || s.t >= cfg.t_max - eps) {
      DiagnosticsRecord rec = sample();
      if (rec.blowup) flag("non-finite diagnostics", s, rec.sup_F, {});
    }
  }
  res.final_state = s;
  return res;
}

inline FlowResult run_flow(const ConnectionField& G0, const FlowConfig& cfg, const FlowObserver& observer = {}) {
  FlowState s;
  s.connection = G0;
  return run_flow(s, cfg, observer);
}

// ---------------------------------------------------------------------------
// Spatial zoom and blowup normalization.

namespace detail {

// Weights evaluating the trigonometric interpolant of N samples (Nyquist omitted)
// at the points y: row j, column i holds (1/N) Σ_{|k|<N/2} e^{2πik(y_j − x_i)/L}.
inline std::vector<double> interpolation_matrix(int N, double L, const std::vector<double>& y) {
  const int K = N % 2 ? (N - 1) / 2 : N / 2 - 1;
  std::vector<double> E(y.size() * N);
  for (std::size_t j = 0; j < y.size(); ++j)
    for (int i = 0; i < N; ++i) {
      double d = two_pi * (y[j] - L * i / N) / L;
      double s = 1.0;
      for (int k = 1; k <= K; ++k) s += 2.0 * std::cos(k * d);
      E[j * N + i] = s / N;
    }
  return E;
}

inline MatrixField apply_along_axis(const MatrixField& f, int axis, const std::vector<double>& E) {
  const auto& g = *f.grid();
  const int N = g.size(axis);
  const int b = f.block();
  std::size_t stride = 1;
  for (int a = g.dim() - 1; a > axis; --a) stride *= g.size(a);
  MatrixField out(f.grid(), f.m());
  std::vector<cplx> line(static_cast<std::size_t>(N) * b);
  for (std::size_t p = 0; p < g.points(); ++p) {
    if ((p / stride) % N != 0) continue;  // p starts a line along `axis`
    for (int i = 0; i < N; ++i) std::copy_n(f.at(p + i * stride), b, line.data() + static_cast<std::size_t>(i) * b);
    for (int j = 0; j < N; ++j) {
      cplx* o = out.at(p + j * stride);
      for (int i = 0; i < N; ++i) {
        const double w = E[static_cast<std::size_t>(j) * N + i];
        const cplx* v = line.data() + static_cast<std::size_t>(i) * b;
        for (int e = 0; e < b; ++e) o[e] += w * v[e];
      }
    }
  }
  return out;
}

inline void check_center(const TorusGrid& g, const std::vector<double>& center) {
  if (static_cast<int>(center.size()) != g.dim()) throw std::invalid_argument("zoom: center dimension mismatch");
}

}  // namespace detail

// x ↦ f(λ(x − c) + c) through the exact trigonometric interpolant, axis by axis.
// The result is the zoom exactly when f has period λL_i along every axis.
inline MatrixField zoom(const MatrixField& f, const std::vector<double>& center, double lambda) {
  const auto& g = *f.grid();
  detail::check_center(g, center);
  MatrixField out = f;
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<double> y(g.size(a));
    for (int j = 0; j < g.size(a); ++j) y[j] = lambda * (g.length(a) * j / g.size(a) - center[a]) + center[a];
    out = detail::apply_along_axis(out, a, detail::interpolation_matrix(g.size(a), g.length(a), y));
  }
  return out;
}

// λ^weight · ω(λ(x − c) + c), componentwise. Connections have weight 1, curvature 2,
// and ∇^(ℓ)F weight ℓ + 2.
inline FormField zoom(const FormField& w, const std::vector<double>& center, double lambda, double weight) {
  FormField out(w.grid(), w.group(), w.degree());
  const double s = std::pow(lambda, weight);
  for (std::size_t c = 0; c < w.components(); ++c) {
    out[c] = zoom(w[c], center, lambda);
    out[c] *= s;
  }
  return out;
}

inline constexpr int max_dyadic_level = 6;

inline int dyadic_level(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("rescale: lambda must be a dyadic value 2^-j");
  int j = static_cast<int>(std::lround(-std::log2(lambda)));
  if (j < 0 || j > max_dyadic_level || std::abs(lambda - std::ldexp(1.0, -j)) > 1e-15)
    throw std::invalid_argument("rescale: lambda must be 2^-j with 0 <= j <= 6");
  return j;
}

// Γ^λ(x) = λΓ(λ(x − c) + c) on the same grid, for λ = 2^{−j}.
inline ConnectionField rescale_snapshot(const ConnectionField& G, const std::vector<double>& center, double lambda) {
  if (G.degree() != 1) throw std::invalid_argument("rescale: expects a connection (degree 1)");
  if (dyadic_level(lambda) == 0) return G;
  return zoom(G, center, lambda, 1.0);
}

// Keeps the modes with Σ k_i² ≤ band². Zooming by λ maps the grid band B onto ⌊λB⌋, so
// scaling laws for nonlinear quantities hold exactly after this truncation.
inline FormField low_pass(FormField w, int band) {
  const auto& g = *w.grid();
  const long b2 = static_cast<long>(band) * band;
  for (std::size_t c = 0; c < w.components(); ++c) {
    MatrixField& f = w[c];
    std::vector<cplx> spec(f.raw().size());
    g.forward(f.data(), spec.data(), f.block());
    for (std::size_t p = 0; p < g.points(); ++p) {
      long k2 = 0;
      for (int a = 0; a < g.dim(); ++a) k2 += static_cast<long>(g.wavenumber(p, a)) * g.wavenumber(p, a);
      if (k2 > b2)
        for (int j = 0; j < f.block(); ++j) spec[p * f.block() + j] = 0.0;
    }
    g.backward(spec.data(), f.data(), f.block());
  }
  return w;
}

// x ↦ ω(s·x): the same field with every period divided by s, obtained by exact index
// mapping. Used to build data whose zoom by 1/s is realizable on the grid.
inline FormField repeat_period(const FormField& w, int s) {
  const auto& g = *w.grid();
  if (s < 1) throw std::invalid_argument("repeat_period: factor must be >= 1");
  FormField out(w.grid(), w.group(), w.degree());
  for (std::size_t p = 0; p < g.points(); ++p) {
    auto idx = g.multi_index(p);
    for (int a = 0; a < g.dim(); ++a) idx[a] = static_cast<int>((static_cast<long>(idx[a]) * s) % g.size(a));
    std::size_t q = g.flat_index(idx);
    for (std::size_t c = 0; c < w.components(); ++c) std::copy_n(w[c].at(q), w[c].block(), out[c].at(p));
  }
  return out;
}

// Exact evaluation of the trigonometric interpolant of a grid field (Nyquist modes
// omitted) and of its partial derivatives at arbitrary points.
class SpectralInterpolant {
 public:
  explicit SpectralInterpolant(const MatrixField& f) : grid_(f.grid()), block_(f.block()) {
    const auto& g = *grid_;
    std::vector<cplx> spec(g.points() * block_);
    g.forward(f.data(), spec.data(), block_);
    double cmax = 0.0;
    for (const auto& z : spec) cmax = std::max(cmax, std::abs(z));
    const double n = static_cast<double>(g.points());
    for (std::size_t p = 0; p < g.points(); ++p) {
      if (!g.full_mask()[p]) continue;
      bool any = false;
      for (int e = 0; e < block_; ++e) any = any || std::abs(spec[p * block_ + e]) > 1e-14 * cmax;
      if (!any) continue;
      for (int a = 0; a < g.dim(); ++a) k_.push_back(g.wavenumber(p, a));
      for (int e = 0; e < block_; ++e) c_.push_back(spec[p * block_ + e] / n);
    }
  }

  std::size_t modes() const { return c_.size() / block_; }

  // Values at x; with `axis` >= 0 the partial derivative along that axis instead.
  std::vector<cplx> operator()(const std::vector<double>& x, int axis = -1) const {
    const auto& g = *grid_;
    const int n = g.dim();
    std::vector<std::vector<cplx>> table(n);
    for (int a = 0; a < n; ++a) {
      const int N = g.size(a);
      table[a].resize(N + 1);
      for (int k = -N / 2; k <= N / 2; ++k) table[a][k + N / 2] = std::polar(1.0, two_pi * k * x[a] / g.length(a));
    }
    std::vector<cplx> out(block_, 0.0);
    for (std::size_t md = 0; md < modes(); ++md) {
      cplx ph = 1.0;
      for (int a = 0; a < n; ++a) ph *= table[a][k_[md * n + a] + g.size(a) / 2];
      if (axis >= 0) ph *= cplx(0.0, two_pi * k_[md * n + axis] / g.length(axis));
      const cplx* c = c_.data() + md * block_;
      for (int e = 0; e < block_; ++e) out[e] += c[e] * ph;
    }
    return out;
  }

 private:
  GridPtr grid_;
  int block_;
  std::vector<int> k_;
  std::vector<cplx> c_;
};

namespace detail {

// F_ab = ∂_aΓ_b − ∂_bΓ_a + [Γ_a, Γ_b] from pointwise values and derivatives; returns |F|².
inline double pointwise_curvature_sq(const std::vector<std::vector<cplx>>& val,
                                     const std::vector<std::vector<std::vector<cplx>>>& der, int m) {
  const int n = static_cast<int>(val.size());
  double s = 0.0;
  std::vector<cplx> F(m * m);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      for (int e = 0; e < m * m; ++e) F[e] = der[a][b][e] - der[b][a][e];
      mat::commutator_add(val[a].data(), val[b].data(), F.data(), m);
      for (const auto& z : F) s += std::norm(z);
    }
  return s;
}

}  // namespace detail

struct BlowupNormalization {
  std::vector<double> point;
  double peak = 0.0;           // |F(x*)|
  double lambda_i = 0.0;       // |F(x*)|^{−(k+1)}
  double spatial_scale = 0.0;  // λ_i^{1/(2k+2)}
  double rescaled_peak = 0.0;  // |F^i(0)| of the zoomed connection
};

// Blowup rescaling at x*: Γ^i(y) = μΓ(μy + x*) with μ = λ_i^{1/(2k+2)} and
// λ_i = |F(x*)|^{−(k+1)}. The zoomed curvature at 0 is assembled from the zoomed
// connection by the chain rule (values μΓ(x*), derivatives μ²∂Γ(x*)).
inline BlowupNormalization normalize_blowup(const ConnectionField& G, const std::vector<double>& x_star, int k) {
  if (k < 0) throw std::invalid_argument("normalize_blowup: k must be >= 0");
  detail::check_center(*G.grid(), x_star);
  const int n = G.dim(), m = G.m();
  std::vector<std::vector<cplx>> val(n);
  std::vector<std::vector<std::vector<cplx>>> der(n, std::vector<std::vector<cplx>>(n));
  for (int b = 0; b < n; ++b) {
    SpectralInterpolant I(G(b));
    val[b] = I(x_star);
    for (int a = 0; a < n; ++a) der[a][b] = I(x_star, a);
  }
  BlowupNormalization r;
  r.point = x_star;
  r.peak = std::sqrt(detail::pointwise_curvature_sq(val, der, m));
  if (!(r.peak > 0.0) || !std::isfinite(r.peak)) throw std::domain_error("normalize_blowup: curvature vanishes at x*");
  r.lambda_i = std::pow(r.peak, -(k + 1.0));
  const double mu = std::pow(r.lambda_i, 1.0 / (2.0 * k + 2.0));
  r.spatial_scale = mu;
  for (int b = 0; b < n; ++b) {
    for (auto& z : val[b]) z *= mu;
    for (int a = 0; a < n; ++a)
      for (auto& z : der[a][b]) z *= mu * mu;
  }
  r.rescaled_peak = std::sqrt(detail::pointwise_curvature_sq(val, der, m));
  return r;
}

// ---------------------------------------------------------------------------
// Smoothing monitor.

struct SmoothingEntry {
  int q = 0;
  double sup = 0.0;
  bool finite = true;
  bool tail_nonincreasing = true;
};

// Running sup of t^{q/(k+1)}‖∇^(q)F‖² per q, and whether the series is
// non-increasing over samples with t ≥ transient_fraction·t_end.
inline std::vector<SmoothingEntry> smoothing_report(const std::vector<DiagnosticsRecord>& series,
                                                    double transient_fraction = 0.5) {
  std::vector<SmoothingEntry> out;
  if (series.empty()) return out;
  const std::size_t qn = series.front().smoothing.size();
  const double t_cut = transient_fraction * series.back().t;
  for (std::size_t q = 0; q < qn; ++q) {
    SmoothingEntry e;
    e.q = static_cast<int>(q) + 1;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : series) {
      double v = r.smoothing.at(q);
      if (!std::isfinite(v)) {
        e.finite = false;
        continue;
      }
      e.sup = std::max(e.sup, v);
      if (r.t >= t_cut) {
        if (v > prev * (1.0 + 1e-9) + 1e-300) e.tail_nonincreasing = false;
        prev = v;
      }
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace ymk
