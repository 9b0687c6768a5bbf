#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "calculus.hpp"

namespace ymk {

// Factor conventions, kept in one place.
namespace conventions {
// YM = c∫|F|², YM_k = c∫|∇^(k)F|², BYM = c∫|D*F|², YM(ρ,k) = ρ YM_k + YM.
inline constexpr double energy_prefactor = 0.5;
// D* is the adjoint of D up to 1/p: ∫⟨D*ω,ψ⟩ = (1/p)∫⟨ω,Dψ⟩.
inline constexpr bool codifferential_rescaled = true;
// grad_discrete = gradient_scale · grad_continuum_ymk (measured by calibration tests).
inline constexpr double gradient_scale = 2.0;
inline constexpr int default_k_max = 3;
}  // namespace conventions

enum class EnergyKind { ym, ymk, ym_rho_k, bym };

inline std::string to_string(EnergyKind k) {
  switch (k) {
    case EnergyKind::ym: return "ym";
    case EnergyKind::ymk: return "ymk";
    case EnergyKind::ym_rho_k: return "ym_rho_k";
    default: return "bym";
  }
}

struct EnergySpec {
  EnergyKind kind = EnergyKind::ym;
  int k = 0;
  double rho = 0.0;
  int k_max = conventions::default_k_max;

  static EnergySpec ym() { return {EnergyKind::ym, 0, 0.0}; }
  static EnergySpec ymk(int k) { return {EnergyKind::ymk, k, 0.0}; }
  static EnergySpec ym_rho_k(double rho, int k) { return {EnergyKind::ym_rho_k, k, rho}; }
  static EnergySpec bym() { return {EnergyKind::bym, 0, 0.0}; }
};

namespace detail {

inline void check_k(int k, int k_max) {
  if (k < 0) throw std::invalid_argument("energy: k must be non-negative");
  if (k > k_max) throw std::invalid_argument("energy: k exceeds k_max");
}

// One forward transform serving Pb and ∂_a Pb for several axes.
class ProjectedSpectrum {
 public:
  explicit ProjectedSpectrum(const MatrixField& b) : grid_(b.grid()), m_(b.m()), spec_(spectrum(b)) {
    apply_mask(*grid_, spec_.data(), m_ * m_);
  }
  MatrixField value() const {
    std::vector<cplx> s = spec_;
    return from_spectrum(grid_, m_, s, false);
  }
  MatrixField derivative(int axis) const {
    std::vector<cplx> s(spec_.size(), 0.0);
    add_derivative(*grid_, spec_, s, m_ * m_, axis);
    return from_spectrum(grid_, m_, s, false);
  }

 private:
  GridPtr grid_;
  int m_;
  std::vector<cplx> spec_;
};

// T_0 = F, T_l = ∇ T_{l-1}.
inline std::vector<FormField> curvature_tower(const ConnectionField& G, int k) {
  std::vector<FormField> T;
  T.reserve(k + 1);
  T.push_back(curvature(G));
  for (int l = 1; l <= k; ++l) T.push_back(covariant_derivative(G, T.back()));
  return T;
}

// Reverse step through T_next = ∇T_prev: returns the cotangent of T_prev and
// accumulates the connection cotangent into gG.
inline FormField backprop_covariant(const ConnectionField& G, const FormField& T_prev,
                                    const FormField& bar_next, ConnectionField& gG) {
  const int n = G.dim();
  const std::size_t nc = T_prev.components();
  FormField bar_prev(T_prev.grid(), T_prev.group(), T_prev.degree());
  for (int a = 0; a < n; ++a)
    for (std::size_t I = 0; I < nc; ++I) {
      ProjectedSpectrum ps(bar_next[a * nc + I]);
      MatrixField b = ps.value();
      bar_prev[I].axpy(-1.0, ps.derivative(a));
      commutator_add(b, G[a], bar_prev[I]);
      commutator_add(T_prev[I], b, gG[a]);
    }
  return bar_prev;
}

// Reverse step through F = P(∂_iΓ_j − ∂_jΓ_i + [Γ_i, Γ_j]) for every ordered pair.
inline void backprop_curvature(const ConnectionField& G, const FormField& barF, ConnectionField& gG) {
  const int n = G.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      ProjectedSpectrum ps(barF(i, j));
      MatrixField b = ps.value();
      gG[j].axpy(-1.0, ps.derivative(i));
      gG[i].axpy(1.0, ps.derivative(j));
      commutator_add(G[j], b, gG[i]);
      commutator_add(b, G[i], gG[j]);
    }
}

inline ConnectionField grad_ymk_discrete(const ConnectionField& G, int k) {
  auto T = curvature_tower(G, k);
  ConnectionField gG(G.grid(), G.group(), 1);
  FormField bar = T[k];
  for (int l = k; l >= 1; --l) bar = backprop_covariant(G, T[l - 1], bar, gG);
  backprop_curvature(G, bar, gG);
  return project(gG);
}

inline ConnectionField grad_bym_discrete(const ConnectionField& G) {
  const int n = G.dim();
  FormField F = curvature(G);
  FormField S = codifferential(G, F);
  ConnectionField gG(G.grid(), G.group(), 1);
  FormField barF(G.grid(), G.group(), 2);
  // S_j = −Σ_i P(∂_i F_ij + [Γ_i, F_ij])
  for (int j = 0; j < n; ++j) {
    MatrixField b = project(S[j]);
    for (int i = 0; i < n; ++i) {
      barF(i, j).axpy(1.0, partial(b, i));
      commutator_add(b, G[i], barF(i, j), -1.0);
      commutator_add(F(i, j), b, gG[i], -1.0);
    }
  }
  backprop_curvature(G, barF, gG);
  return project(gG);
}

}  // namespace detail

inline double ym_energy(const ConnectionField& G) {
  return conventions::energy_prefactor * l2_norm_sq(curvature(G));
}

inline double ymk_energy(const ConnectionField& G, int k, int k_max = conventions::default_k_max) {
  detail::check_k(k, k_max);
  auto T = detail::curvature_tower(G, k);
  return conventions::energy_prefactor * l2_norm_sq(T[k]);
}

inline double ym_rho_k_energy(const ConnectionField& G, double rho, int k,
                              int k_max = conventions::default_k_max) {
  if (rho < 0.0) throw std::invalid_argument("ym_rho_k: rho must be non-negative");
  double e = ym_energy(G);
  if (rho > 0.0) e += rho * ymk_energy(G, k, k_max);
  return e;
}

inline double bym_energy(const ConnectionField& G) {
  return conventions::energy_prefactor * l2_norm_sq(codifferential(G, curvature(G)));
}

inline double energy(const ConnectionField& G, const EnergySpec& s) {
  switch (s.kind) {
    case EnergyKind::ym: return ym_energy(G);
    case EnergyKind::ymk: return ymk_energy(G, s.k, s.k_max);
    case EnergyKind::ym_rho_k: return ym_rho_k_energy(G, s.rho, s.k, s.k_max);
    default: return bym_energy(G);
  }
}

// Exact gradient of the discretized functional restricted to band-limited
// connections, with respect to the L² pairing ∫⟨·,·⟩.
inline ConnectionField grad_discrete(const ConnectionField& G, const EnergySpec& s) {
  switch (s.kind) {
    case EnergyKind::ym: return detail::grad_ymk_discrete(G, 0);
    case EnergyKind::ymk:
      detail::check_k(s.k, s.k_max);
      return detail::grad_ymk_discrete(G, s.k);
    case EnergyKind::ym_rho_k: {
      if (s.rho < 0.0) throw std::invalid_argument("ym_rho_k: rho must be non-negative");
      detail::check_k(s.k, s.k_max);
      ConnectionField g = detail::grad_ymk_discrete(G, 0);
      if (s.rho > 0.0) g.axpy(s.rho, detail::grad_ymk_discrete(G, s.k));
      return g;
    }
    default: return detail::grad_bym_discrete(G);
  }
}

// Continuum Euler-Lagrange expressions:
//   k = 0:  D*F
//   k = 1:  −D*ΔF + ½ Σ_{ij} [F_ij, ∇_a F_ij]
// grad_discrete = conventions::gradient_scale · grad_continuum_ymk.
inline ConnectionField grad_continuum_ymk(const ConnectionField& G, int k) {
  if (k < 0 || k > 1) throw std::invalid_argument("grad_continuum_ymk: only k in {0,1} is implemented");
  FormField F = curvature(G);
  if (k == 0) return codifferential(G, F);
  ConnectionField out = codifferential(G, rough_laplacian(G, F));
  out *= -1.0;
  if (G.m() > 1) {
    FormField nF = covariant_derivative(G, F);
    const int n = G.dim();
    const std::size_t nc = F.components();
    ConnectionField low(G.grid(), G.group(), 1);
    for (int a = 0; a < n; ++a)
      for (std::size_t I = 0; I < nc; ++I) commutator_add(F[I], nF[a * nc + I], low[a], 0.5);
    out += project(low);
  }
  return out;
}

}  // namespace ymk
