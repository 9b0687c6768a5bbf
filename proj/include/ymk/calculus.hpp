#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "algebra.hpp"

// Conventions (flat torus, trivial bundle, matrix rows = fiber upper index):
//   ∇_a ω = P(∂_a ω + [Γ_a, ω])
//   F_ij  = P(∂_i Γ_j − ∂_j Γ_i + [Γ_i, Γ_j])      so [∇_i, ∇_j] ω = [F_ij, ω]
//   (Dω)_{i0..ip} = Σ_s (−1)^s (∇ω)_{i_s, i0..î_s..ip}
//   (D*ω)_J = −Σ_j (∇ω)_{j, jJ}                     so ∫⟨D*ω,ψ⟩ = (1/p)∫⟨ω,Dψ⟩
//   Δ = Σ_j ∇_j ∇_j,   Δ_D = D*D + DD*
// P is the projection onto the retained spectral ball; every product is
// formed pointwise and then projected.

namespace ymk {

namespace detail {

inline std::vector<cplx> spectrum(const MatrixField& f) {
  std::vector<cplx> s(f.raw().size());
  f.grid()->forward(f.data(), s.data(), f.block());
  return s;
}

inline MatrixField from_spectrum(const GridPtr& g, int m, std::vector<cplx>& spec, bool mask) {
  if (mask) apply_mask(*g, spec.data(), m * m);
  MatrixField out(g, m);
  g->backward(spec.data(), out.data(), m * m);
  return out;
}

// acc += iξ_axis · src  (masked), both spectra of one matrix field.
inline void add_derivative(const TorusGrid& g, const std::vector<cplx>& src, std::vector<cplx>& acc,
                           int block, int axis, double sign = 1.0) {
  const auto& xi = g.angular_frequencies(axis);
  const auto& mask = g.band_mask();
  for (std::size_t p = 0; p < g.points(); ++p) {
    if (!mask[p]) continue;
    const double f = sign * xi[p];
    for (int j = 0; j < block; ++j) {
      const cplx v = src[p * block + j];
      acc[p * block + j] += cplx(-f * v.imag(), f * v.real());
    }
  }
}

inline void add_spectrum(const std::vector<cplx>& src, std::vector<cplx>& acc, double sign = 1.0) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sign * src[i];
}

inline void check_pair(const ConnectionField& G, const FormField& w) {
  if (G.degree() != 1) throw std::invalid_argument("connection must be a 1-form");
  if (!(G.group() == w.group()) || !G.grid()->same_shape(*w.grid()))
    throw std::invalid_argument("connection and form live on different grids or groups");
}

}  // namespace detail

// Componentwise masked spectral derivative of a form.
inline FormField partial(const FormField& w, int axis) {
  FormField out(w.grid(), w.group(), w.degree());
  for (std::size_t c = 0; c < w.components(); ++c) out[c] = partial(w[c], axis);
  return out;
}

inline FormField curvature(const ConnectionField& G) {
  const auto& g = *G.grid();
  const int n = G.dim(), m = G.m(), b = m * m;
  FormField F(G.grid(), G.group(), 2);
  std::vector<std::vector<cplx>> spec(n);
  for (int i = 0; i < n; ++i) spec[i] = detail::spectrum(G[i]);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::vector<cplx> acc(g.points() * b, 0.0);
      detail::add_derivative(g, spec[j], acc, b, i);
      detail::add_derivative(g, spec[i], acc, b, j, -1.0);
      if (m > 1) detail::add_spectrum(detail::spectrum(commutator(G[i], G[j])), acc);
      F(i, j) = detail::from_spectrum(G.grid(), m, acc, true);
      F(j, i) = F(i, j);
      F(j, i) *= -1.0;
    }
  return F;
}

// ∇ω as a form of degree p+1 with the derivative slot first.
inline FormField covariant_derivative(const ConnectionField& G, const FormField& w) {
  detail::check_pair(G, w);
  const auto& g = *w.grid();
  const int n = w.dim(), m = w.m(), b = m * m;
  FormField out(w.grid(), w.group(), w.degree() + 1);
  const std::size_t nc = w.components();
  for (std::size_t I = 0; I < nc; ++I) {
    auto s = detail::spectrum(w[I]);
    for (int a = 0; a < n; ++a) {
      std::vector<cplx> acc(g.points() * b, 0.0);
      detail::add_derivative(g, s, acc, b, a);
      if (m > 1) detail::add_spectrum(detail::spectrum(commutator(G[a], w[I])), acc);
      out[a * nc + I] = detail::from_spectrum(w.grid(), m, acc, true);
    }
  }
  return out;
}

inline FormField covariant_derivative(const ConnectionField& G, const FormField& w, int times) {
  FormField r = w;
  for (int l = 0; l < times; ++l) r = covariant_derivative(G, r);
  return r;
}

// Position-alternating sum of a form whose first slot is a derivative slot.
inline FormField alternate_leading(const FormField& nw) {
  const int p1 = nw.degree();
  FormField out(nw.grid(), nw.group(), p1);
  for (std::size_t c = 0; c < out.components(); ++c) {
    auto idx = out.indices(c);
    for (int s = 0; s < p1; ++s) {
      std::vector<int> src;
      src.reserve(p1);
      src.push_back(idx[s]);
      for (int t = 0; t < p1; ++t)
        if (t != s) src.push_back(idx[t]);
      out[c].axpy(s % 2 ? -1.0 : 1.0, nw[nw.flat(src)]);
    }
  }
  return out;
}

inline FormField exterior_derivative(const ConnectionField& G, const FormField& w) {
  return alternate_leading(covariant_derivative(G, w));
}

inline FormField codifferential(const ConnectionField& G, const FormField& w) {
  detail::check_pair(G, w);
  if (w.degree() < 1) throw std::invalid_argument("codifferential: degree 0 input");
  const auto& g = *w.grid();
  const int n = w.dim(), m = w.m(), b = m * m;
  FormField out(w.grid(), w.group(), w.degree() - 1);
  const std::size_t nJ = out.components();
  for (std::size_t J = 0; J < nJ; ++J) {
    std::vector<cplx> acc(g.points() * b, 0.0);
    for (int j = 0; j < n; ++j) {
      const MatrixField& c = w[j * nJ + J];
      detail::add_derivative(g, detail::spectrum(c), acc, b, j, -1.0);
      if (m > 1) detail::add_spectrum(detail::spectrum(commutator(G[j], c)), acc, -1.0);
    }
    out[J] = detail::from_spectrum(w.grid(), m, acc, true);
  }
  return out;
}

inline FormField rough_laplacian(const ConnectionField& G, const FormField& w) {
  detail::check_pair(G, w);
  const auto& g = *w.grid();
  const int n = w.dim(), m = w.m(), b = m * m;
  FormField out(w.grid(), w.group(), w.degree());
  for (std::size_t I = 0; I < w.components(); ++I) {
    auto s = detail::spectrum(w[I]);
    std::vector<cplx> total(g.points() * b, 0.0);
    for (int a = 0; a < n; ++a) {
      std::vector<cplx> acc(g.points() * b, 0.0);
      detail::add_derivative(g, s, acc, b, a);
      if (m > 1) detail::add_spectrum(detail::spectrum(commutator(G[a], w[I])), acc);
      MatrixField d = detail::from_spectrum(w.grid(), m, acc, true);
      auto sd = detail::spectrum(d);
      detail::add_derivative(g, sd, total, b, a);
      if (m > 1) detail::add_spectrum(detail::spectrum(commutator(G[a], d)), total);
    }
    out[I] = detail::from_spectrum(w.grid(), m, total, true);
  }
  return out;
}

inline FormField rough_laplacian(const ConnectionField& G, const FormField& w, int times) {
  FormField r = w;
  for (int l = 0; l < times; ++l) r = rough_laplacian(G, r);
  return r;
}

inline FormField hodge_laplacian(const ConnectionField& G, const FormField& w) {
  FormField r = codifferential(G, exterior_derivative(G, w));
  if (w.degree() > 0) r += exterior_derivative(G, codifferential(G, w));
  return r;
}

}  // namespace ymk
