#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "energy.hpp"

// Gauge action convention (a right action):
//   act(ς, Γ)_i = ς⁻¹∂_iς + ς⁻¹Γ_iς,   act(ς, ω) = ς⁻¹ως,
//   act(ς₂, act(ς₁, Γ)) = act(ς₁ς₂, Γ).

namespace ymk {

namespace detail {

using CMat = Eigen::MatrixXcd;

inline CMat load(const cplx* a, int m) {
  CMat M(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) M(r, c) = a[r * m + c];
  return M;
}

inline void store(const CMat& M, cplx* a) {
  const int m = static_cast<int>(M.rows());
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) a[r * m + c] = M(r, c);
}

inline CMat expm_skew(const CMat& X) {
  Eigen::SelfAdjointEigenSolver<CMat> es(cplx(0.0, 1.0) * X);  // iX is Hermitian
  Eigen::VectorXcd ph = (cplx(0.0, -1.0) * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// φ(z) = (e^z − 1)/z
inline cplx phi1(cplx z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

// e^{−X} d(e^{X}) for anti-Hermitian X and derivative dX.
inline CMat dexp_left(const CMat& X, const CMat& dX) {
  Eigen::SelfAdjointEigenSolver<CMat> es(cplx(0.0, 1.0) * X);
  const CMat& V = es.eigenvectors();
  Eigen::VectorXcd mu = cplx(0.0, -1.0) * es.eigenvalues().cast<cplx>();
  CMat Y = V.adjoint() * dX * V;
  const int m = static_cast<int>(X.rows());
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) Y(p, q) *= phi1(mu(q) - mu(p));
  return V * Y * V.adjoint();
}

}  // namespace detail

class GaugeField {
 public:
  GaugeField() = default;

  static GaugeField identity(const GridPtr& g, const StructureGroup& grp) {
    GaugeField s(g, grp);
    for (std::size_t p = 0; p < g->points(); ++p)
      for (int r = 0; r < grp.m; ++r) s.values_.at(p)[r * grp.m + r] = 1.0;
    return s;
  }

  static GaugeField constant(const GridPtr& g, const StructureGroup& grp, const std::vector<cplx>& U) {
    GaugeField s(g, grp);
    for (std::size_t p = 0; p < g->points(); ++p) std::copy(U.begin(), U.end(), s.values_.at(p));
    s.check_unitary();
    return s;
  }

  // ς = exp(X) for an anti-Hermitian (band-limited) generator X.
  static GaugeField exponential(const MatrixField& X, const StructureGroup& grp) {
    GaugeField s(X.grid(), grp);
    const int m = grp.m;
    for (std::size_t p = 0; p < X.points(); ++p)
      detail::store(detail::expm_skew(detail::load(X.at(p), m)), s.values_.at(p));
    s.generator_ = X;
    return s;
  }

  static GaugeField from_values(MatrixField values, const StructureGroup& grp) {
    GaugeField s(values.grid(), grp);
    s.values_ = std::move(values);
    s.check_unitary();
    return s;
  }

  const GridPtr& grid() const { return values_.grid(); }
  const StructureGroup& group() const { return group_; }
  const MatrixField& values() const { return values_; }
  const std::optional<MatrixField>& generator() const { return generator_; }

  GaugeField inverse() const {
    GaugeField s(grid(), group_);
    for (std::size_t p = 0; p < values_.points(); ++p) mat::adjoint(values_.at(p), s.values_.at(p), group_.m);
    if (generator_) s.generator_ = -1.0 * *generator_;
    return s;
  }

  // Pointwise product (ς₁ς₂)(x) = ς₁(x)ς₂(x).
  friend GaugeField operator*(const GaugeField& a, const GaugeField& b) {
    GaugeField s(a.grid(), a.group_);
    s.values_ = product(a.values_, b.values_);
    return s;
  }

  double unitarity_defect() const {
    const int m = group_.m;
    double err = 0.0;
    for (std::size_t p = 0; p < values_.points(); ++p) {
      detail::CMat U = detail::load(values_.at(p), m);
      err = std::max(err, (U.adjoint() * U - detail::CMat::Identity(m, m)).cwiseAbs().maxCoeff());
      if (group_.traceless()) err = std::max(err, std::abs(U.determinant() - 1.0));
    }
    return err;
  }

  void check_unitary(double tol = 1e-10) const {
    if (unitarity_defect() > tol) throw std::invalid_argument("gauge field is not unitary");
  }

 private:
  GaugeField(const GridPtr& g, const StructureGroup& grp) : group_(grp), values_(g, grp.m) {}

  StructureGroup group_;
  MatrixField values_;
  std::optional<MatrixField> generator_;
};

inline GaugeField random_gauge(const GridPtr& g, const StructureGroup& grp, double amplitude, int band, Rng& rng) {
  return GaugeField::exponential(random_algebra_field(g, grp, amplitude, band, rng), grp);
}

inline FormField act_on_form(const GaugeField& s, const FormField& w) {
  if (!(s.group() == w.group())) throw std::invalid_argument("act_on_form: group mismatch");
  const int m = w.m();
  const auto& U = s.values();
  FormField out(w.grid(), w.group(), w.degree());
  std::vector<cplx> Ui(m * m), tmp(m * m);
  for (std::size_t c = 0; c < w.components(); ++c)
    for (std::size_t p = 0; p < U.points(); ++p) {
      mat::adjoint(U.at(p), Ui.data(), m);
      std::fill(tmp.begin(), tmp.end(), cplx(0.0));
      mat::mul_add(Ui.data(), w[c].at(p), tmp.data(), m);
      mat::mul_add(tmp.data(), U.at(p), out[c].at(p), m);
    }
  return out;
}

inline ConnectionField act_on_connection(const GaugeField& s, const ConnectionField& G) {
  if (!(s.group() == G.group())) throw std::invalid_argument("act_on_connection: group mismatch");
  s.check_unitary();
  ConnectionField out = act_on_form(s, G);
  const int n = G.dim(), m = G.m();
  const auto& U = s.values();
  for (int i = 0; i < n; ++i) {
    if (s.generator()) {
      const MatrixField& X = *s.generator();
      MatrixField dX = partial(X, i, Spectrum::full);
      for (std::size_t p = 0; p < U.points(); ++p) {
        detail::CMat t = detail::dexp_left(detail::load(X.at(p), m), detail::load(dX.at(p), m));
        cplx* o = out[i].at(p);
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c) o[r * m + c] += t(r, c);
      }
    } else {
      MatrixField dU = partial(U, i, Spectrum::full);
      std::vector<cplx> Ui(m * m);
      for (std::size_t p = 0; p < U.points(); ++p) {
        mat::adjoint(U.at(p), Ui.data(), m);
        mat::mul_add(Ui.data(), dU.at(p), out[i].at(p), m);
      }
    }
  }
  return out;
}

// Polar projection A ↦ A(A†A)^{-1/2}, with the determinant fixed to 1 for su(2).
inline void unitarize(MatrixField& A, const StructureGroup& grp) {
  const int m = grp.m;
  for (std::size_t p = 0; p < A.points(); ++p) {
    detail::CMat M = detail::load(A.at(p), m);
    Eigen::SelfAdjointEigenSolver<detail::CMat> es(M.adjoint() * M);
    const auto& ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-24) || !std::isfinite(ev.maxCoeff()))
      throw std::runtime_error("gauge step: non-invertible update in polar projection");
    Eigen::VectorXd inv_sqrt = ev.array().rsqrt();
    detail::CMat U = M * es.eigenvectors() * inv_sqrt.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    if (grp.traceless()) U /= std::pow(U.determinant(), 1.0 / m);
    detail::store(U, A.at(p));
  }
}

namespace detail {

inline void check_psi_k(int k) {
  if (k < 0 || k > 1) throw std::invalid_argument("psi_k: k must be 0 or 1");
}

}  // namespace detail

// Generator A of the gauge ODE ∂ς/∂t = A ς with
//   A = c (−1)^k Δ^k D*(Γ_t − Γ₀),   c = conventions::gradient_scale.
inline MatrixField gauge_generator(const ConnectionField& Gt, const ConnectionField& G0, int k) {
  FormField u = codifferential(Gt, Gt - G0);
  u = rough_laplacian(Gt, u, k);
  double sign = (k % 2 ? -1.0 : 1.0) * conventions::gradient_scale;
  u *= sign;
  return u[0];
}

// Right side of the gauge-fixed system:
//   Ψ_k = −c·grad_continuum_ymk(Γ) + c (−1)^{k+1} D Δ^k D*(Γ − Γ₀)
// which at k = 0 reads −2D*F − 2DD*(Γ − Γ₀).
inline ConnectionField psi_k_rhs(const ConnectionField& G, const ConnectionField& G0, int k) {
  detail::check_psi_k(k);
  const double c = conventions::gradient_scale;
  ConnectionField out = grad_continuum_ymk(G, k);
  out *= -c;
  FormField u = codifferential(G, G - G0);
  u = rough_laplacian(G, u, k);
  out.axpy((k % 2 ? 1.0 : -1.0) * c, exterior_derivative(G, u));
  return out;
}

inline GaugeField gauge_flow_step(const GaugeField& s, const ConnectionField& Gt, const ConnectionField& G0,
                                  int k, double dt) {
  detail::check_psi_k(k);
  MatrixField A = gauge_generator(Gt, G0, k);
  MatrixField next = s.values();
  const int m = s.group().m;
  for (std::size_t p = 0; p < next.points(); ++p) mat::mul_add(A.at(p), s.values().at(p), next.at(p), m, dt);
  unitarize(next, s.group());
  return GaugeField::from_values(std::move(next), s.group());
}

inline double coulomb_residual(const ConnectionField& G, const ConnectionField& G0) {
  return std::sqrt(l2_norm_sq(codifferential(G, G - G0)));
}

struct EquivalenceReport {
  double discrepancy_sup = 0.0;
  double dt = 0.0;
  double t_end = 0.0;
  int steps = 0;
  int k = 0;
  std::vector<int> grid;
  // discrepancy_sup / dt: the constant C of the first-order model C·dt.
  double first_order_constant = 0.0;
  // L² mass of the compared connection outside the retained band at t_end.
  double spectral_tail = 0.0;
};

// Runs the Ψ-flow from Γ₀ together with the gauge ODE and compares act(ς_t, Γ̃_t)
// with the direct flow ∂_tΓ = −grad_discrete(YM_k) from Γ₀. Explicit Euler, same dt.
inline EquivalenceReport equivalence_test(const ConnectionField& G0, int k, double t_end, double dt) {
  detail::check_psi_k(k);
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw std::invalid_argument("equivalence_test: bad time parameters");
  EquivalenceReport rep;
  rep.dt = dt;
  rep.t_end = t_end;
  rep.k = k;
  rep.grid = G0.grid()->sizes();
  rep.steps = static_cast<int>(std::llround(t_end / dt));
  const auto spec = EnergySpec::ymk(k);

  ConnectionField direct = G0, tilde = G0;
  GaugeField s = GaugeField::identity(G0.grid(), G0.group());
  auto compare = [&]() {
    ConnectionField pulled = act_on_connection(s, tilde);
    double d = std::sqrt(l2_norm_sq(pulled - direct));
    if (!std::isfinite(d)) throw std::runtime_error("equivalence_test: blowup before t_end");
    rep.discrepancy_sup = std::max(rep.discrepancy_sup, d);
    return pulled;
  };
  compare();
  for (int n = 0; n < rep.steps; ++n) {
    ConnectionField gd = grad_discrete(direct, spec);
    ConnectionField psi = psi_k_rhs(tilde, G0, k);
    GaugeField s_next = gauge_flow_step(s, tilde, G0, k, dt);
    direct.axpy(-dt, gd);
    tilde.axpy(dt, psi);
    s = std::move(s_next);
    if (n + 1 == rep.steps) {
      ConnectionField pulled = compare();
      rep.spectral_tail = std::sqrt(l2_norm_sq(pulled - project(pulled)));
    } else {
      compare();
    }
  }
  rep.first_order_constant = rep.discrepancy_sup / dt;
  return rep;
}

}  // namespace ymk
