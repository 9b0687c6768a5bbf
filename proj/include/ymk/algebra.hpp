#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "torus.hpp"

namespace ymk {

enum class GroupKind { u1, su2, um };

struct StructureGroup {
  GroupKind kind = GroupKind::su2;
  int m = 2;

  static StructureGroup u1() { return {GroupKind::u1, 1}; }
  static StructureGroup su2() { return {GroupKind::su2, 2}; }
  static StructureGroup u(int m) {
    if (m < 1) throw std::invalid_argument("group: matrix_dim must be >= 1");
    return m == 1 ? u1() : StructureGroup{GroupKind::um, m};
  }

  static StructureGroup parse(const std::string& s) {
    if (s == "u1" || s == "u(1)") return u1();
    if (s == "su2" || s == "su(2)") return su2();
    if (s.size() > 1 && s[0] == 'u') {
      std::string digits = s.substr(1);
      if (!digits.empty() && digits.front() == '(' && digits.back() == ')')
        digits = digits.substr(1, digits.size() - 2);
      try {
        return u(std::stoi(digits));
      } catch (const std::logic_error&) {
      }
    }
    throw std::invalid_argument("group: unknown kind '" + s + "'");
  }

  std::string name() const {
    switch (kind) {
      case GroupKind::u1: return "u1";
      case GroupKind::su2: return "su2";
      default: return "u" + std::to_string(m);
    }
  }

  bool traceless() const { return kind == GroupKind::su2; }
  bool abelian() const { return m == 1; }
  int algebra_dim() const { return traceless() ? m * m - 1 : m * m; }

  // Orthogonal basis of the Lie algebra (row-major m×m matrices).
  std::vector<std::vector<cplx>> basis() const {
    std::vector<std::vector<cplx>> out;
    const cplx I(0.0, 1.0);
    auto zero = [&] { return std::vector<cplx>(m * m, 0.0); };
    if (kind == GroupKind::su2) {
      auto s1 = zero(), s2 = zero(), s3 = zero();
      s1[1] = I, s1[2] = I;
      s2[1] = 1.0, s2[2] = -1.0;
      s3[0] = I, s3[3] = -I;
      return {s1, s2, s3};
    }
    for (int j = 0; j < m; ++j) {
      auto e = zero();
      e[j * m + j] = I;
      out.push_back(e);
    }
    for (int j = 0; j < m; ++j)
      for (int l = j + 1; l < m; ++l) {
        auto a = zero(), b = zero();
        a[j * m + l] = 1.0, a[l * m + j] = -1.0;
        b[j * m + l] = I, b[l * m + j] = I;
        out.push_back(a);
        out.push_back(b);
      }
    return out;
  }

  bool operator==(const StructureGroup& o) const { return kind == o.kind && m == o.m; }
};

// Dense m×m helpers on row-major storage.
namespace mat {

inline void mul_add(const cplx* a, const cplx* b, cplx* out, int m, cplx alpha = 1.0) {
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < m; ++k) {
      const cplx ark = cmul(alpha, a[r * m + k]);
      if (ark == 0.0) continue;
      for (int c = 0; c < m; ++c) out[r * m + c] += cmul(ark, b[k * m + c]);
    }
}

// out += alpha (ab - ba)
inline void commutator_add(const cplx* a, const cplx* b, cplx* out, int m, cplx alpha = 1.0) {
  if (m == 1) return;
  mul_add(a, b, out, m, alpha);
  mul_add(b, a, out, m, -alpha);
}

// -Re tr(ab)
inline double minus_trace(const cplx* a, const cplx* b, int m) {
  double s = 0.0;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) s += (a[r * m + c] * b[c * m + r]).real();
  return -s;
}

inline void adjoint(const cplx* a, cplx* out, int m) {
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) out[c * m + r] = std::conj(a[r * m + c]);
}

}  // namespace mat

// Field of m×m complex matrices, point-major storage data[p*m*m + r*m + c].
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(GridPtr g, int m) : grid_(std::move(g)), m_(m), d_(grid_->points() * m * m, 0.0) {}

  const GridPtr& grid() const { return grid_; }
  int m() const { return m_; }
  int block() const { return m_ * m_; }
  std::size_t points() const { return grid_->points(); }
  cplx* at(std::size_t p) { return d_.data() + p * block(); }
  const cplx* at(std::size_t p) const { return d_.data() + p * block(); }
  cplx* data() { return d_.data(); }
  const cplx* data() const { return d_.data(); }
  std::vector<cplx>& raw() { return d_; }
  const std::vector<cplx>& raw() const { return d_; }

  MatrixField& operator+=(const MatrixField& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    return *this;
  }
  MatrixField& operator-=(const MatrixField& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
    return *this;
  }
  MatrixField& operator*=(cplx s) {
    for (auto& x : d_) x = cmul(x, s);
    return *this;
  }
  MatrixField& axpy(cplx a, const MatrixField& x) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += cmul(a, x.d_[i]);
    return *this;
  }
  void set_zero() { std::fill(d_.begin(), d_.end(), cplx(0.0)); }

  friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
  friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
  friend MatrixField operator*(cplx s, MatrixField a) { return a *= s; }

 private:
  GridPtr grid_;
  int m_ = 0;
  std::vector<cplx> d_;
};

inline std::size_t ipow(int n, int p) {
  std::size_t r = 1;
  for (int i = 0; i < p; ++i) r *= static_cast<std::size_t>(n);
  return r;
}

// Ad-valued p-form: one MatrixField per ordered index tuple (i_1..i_p), the
// leading index most significant in the flat component number.
class FormField {
 public:
  FormField() = default;
  FormField(GridPtr g, StructureGroup grp, int degree)
      : grid_(std::move(g)), group_(grp), degree_(degree) {
    if (degree < 0) throw std::invalid_argument("form: negative degree");
    comps_.assign(ipow(grid_->dim(), degree), MatrixField(grid_, group_.m));
  }

  const GridPtr& grid() const { return grid_; }
  const StructureGroup& group() const { return group_; }
  int m() const { return group_.m; }
  int dim() const { return grid_->dim(); }
  int degree() const { return degree_; }
  std::size_t components() const { return comps_.size(); }

  MatrixField& operator[](std::size_t c) { return comps_[c]; }
  const MatrixField& operator[](std::size_t c) const { return comps_[c]; }

  std::size_t flat(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != degree_) throw std::invalid_argument("form: index count");
    std::size_t f = 0;
    for (int i : idx) {
      if (i < 0 || i >= dim()) throw std::out_of_range("form: index out of range");
      f = f * dim() + i;
    }
    return f;
  }
  template <class... Ix>
  MatrixField& operator()(Ix... idx) {
    return comps_[flat({static_cast<int>(idx)...})];
  }
  template <class... Ix>
  const MatrixField& operator()(Ix... idx) const {
    return comps_[flat({static_cast<int>(idx)...})];
  }

  std::vector<int> indices(std::size_t c) const {
    std::vector<int> idx(degree_);
    for (int s = degree_ - 1; s >= 0; --s) {
      idx[s] = static_cast<int>(c % dim());
      c /= dim();
    }
    return idx;
  }
  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * dim() + i;
    return f;
  }

  FormField& operator+=(const FormField& o) {
    check_compatible(o);
    for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c] += o.comps_[c];
    return *this;
  }
  FormField& operator-=(const FormField& o) {
    check_compatible(o);
    for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c] -= o.comps_[c];
    return *this;
  }
  FormField& operator*=(cplx s) {
    for (auto& c : comps_) c *= s;
    return *this;
  }
  FormField& axpy(cplx a, const FormField& x) {
    check_compatible(x);
    for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c].axpy(a, x.comps_[c]);
    return *this;
  }
  friend FormField operator+(FormField a, const FormField& b) { return a += b; }
  friend FormField operator-(FormField a, const FormField& b) { return a -= b; }
  friend FormField operator*(cplx s, FormField a) { return a *= s; }

  void check_compatible(const FormField& o) const {
    if (degree_ != o.degree_ || !(group_ == o.group_) || !grid_->same_shape(*o.grid_))
      throw std::invalid_argument("form: incompatible operands");
  }

  bool all_finite() const {
    for (const auto& c : comps_)
      for (const auto& z : c.raw())
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

 private:
  GridPtr grid_;
  StructureGroup group_;
  int degree_ = 0;
  std::vector<MatrixField> comps_;
};

// A connection is stored as its coefficient 1-form Γ = (Γ_i).
using ConnectionField = FormField;

inline ConnectionField zero_connection(const GridPtr& g, const StructureGroup& grp) {
  return FormField(g, grp, 1);
}

// ---------------------------------------------------------------------------
// Spectral operations on matrix fields.

inline MatrixField partial(const MatrixField& f, int axis, Spectrum band = Spectrum::dealiased) {
  const auto& g = *f.grid();
  detail::check_axis(g, axis);
  std::vector<cplx> spec(f.raw().size());
  g.forward(f.data(), spec.data(), f.block());
  detail::apply_derivative_symbol(g, spec.data(), f.block(), axis, band);
  MatrixField out(f.grid(), f.m());
  g.backward(spec.data(), out.data(), f.block());
  return out;
}

inline void project_inplace(MatrixField& f) {
  const auto& g = *f.grid();
  std::vector<cplx> spec(f.raw().size());
  g.forward(f.data(), spec.data(), f.block());
  detail::apply_mask(g, spec.data(), f.block());
  g.backward(spec.data(), f.data(), f.block());
}

inline MatrixField project(MatrixField f) {
  project_inplace(f);
  return f;
}

inline FormField project(FormField f) {
  for (std::size_t c = 0; c < f.components(); ++c) project_inplace(f[c]);
  return f;
}

inline MatrixField product(const MatrixField& a, const MatrixField& b) {
  MatrixField out(a.grid(), a.m());
  for (std::size_t p = 0; p < a.points(); ++p) mat::mul_add(a.at(p), b.at(p), out.at(p), a.m());
  return out;
}

// Pointwise commutator, not projected.
inline MatrixField commutator(const MatrixField& a, const MatrixField& b) {
  MatrixField out(a.grid(), a.m());
  if (a.m() == 1) return out;
  for (std::size_t p = 0; p < a.points(); ++p)
    mat::commutator_add(a.at(p), b.at(p), out.at(p), a.m());
  return out;
}

inline void commutator_add(const MatrixField& a, const MatrixField& b, MatrixField& out,
                           cplx alpha = 1.0) {
  if (a.m() == 1) return;
  for (std::size_t p = 0; p < a.points(); ++p)
    mat::commutator_add(a.at(p), b.at(p), out.at(p), a.m(), alpha);
}

// ---------------------------------------------------------------------------
// Algebraic operations.

inline std::vector<cplx> bracket(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("bracket: dimension mismatch");
  int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.size()))));
  if (static_cast<std::size_t>(m * m) != a.size())
    throw std::invalid_argument("bracket: operands are not square");
  std::vector<cplx> out(a.size(), 0.0);
  mat::mul_add(a.data(), b.data(), out.data(), m);
  mat::mul_add(b.data(), a.data(), out.data(), m, -1.0);
  return out;
}

// (ω # ζ)_{JK} = Σ_j ω_{jJ} ζ_{jK}, fiber product in the order ω·ζ.
inline FormField pound(const FormField& w, const FormField& z) {
  if (w.degree() < 1 || z.degree() < 1) throw std::invalid_argument("pound: degree 0 input");
  const int n = w.dim();
  const int p = w.degree(), q = z.degree();
  FormField out(w.grid(), w.group(), p + q - 2);
  const std::size_t nj = ipow(n, p - 1), nk = ipow(n, q - 1);
  for (std::size_t J = 0; J < nj; ++J)
    for (std::size_t K = 0; K < nk; ++K) {
      MatrixField& o = out[J * nk + K];
      for (int j = 0; j < n; ++j) {
        const MatrixField& a = w[j * nj + J];
        const MatrixField& b = z[j * nk + K];
        for (std::size_t x = 0; x < a.points(); ++x) mat::mul_add(a.at(x), b.at(x), o.at(x), w.m());
      }
    }
  return out;
}

// [ω, ζ]^#_{JK} = (ω#ζ)_{JK} − (ζ#ω)_{KJ} = Σ_j [ω_{jJ}, ζ_{jK}].
inline FormField pound_bracket(const FormField& w, const FormField& z) {
  if (w.degree() < 1 || z.degree() < 1) throw std::invalid_argument("pound: degree 0 input");
  const int n = w.dim();
  const int p = w.degree(), q = z.degree();
  FormField out(w.grid(), w.group(), p + q - 2);
  const std::size_t nj = ipow(n, p - 1), nk = ipow(n, q - 1);
  for (std::size_t J = 0; J < nj; ++J)
    for (std::size_t K = 0; K < nk; ++K)
      for (int j = 0; j < n; ++j) commutator_add(w[j * nj + J], z[j * nk + K], out[J * nk + K]);
  return out;
}

// Pointwise ⟨ω,ζ⟩ = −Σ_I Re tr(ω_I ζ_I) over ordered tuples.
inline ScalarField inner_product(const FormField& w, const FormField& z) {
  if (w.degree() != z.degree()) throw std::invalid_argument("inner_product: degree mismatch");
  ScalarField out(w.grid());
  for (std::size_t c = 0; c < w.components(); ++c)
    for (std::size_t p = 0; p < out.size(); ++p)
      out[p] += mat::minus_trace(w[c].at(p), z[c].at(p), w.m());
  return out;
}

// |ω|² as the Frobenius sum Σ|entries|². It equals ⟨ω,ω⟩ on skew-Hermitian values
// and stays non-negative when roundoff leaves a field slightly off the algebra.
inline ScalarField norm_sq_field(const FormField& w) {
  ScalarField out(w.grid());
  const std::size_t mm = static_cast<std::size_t>(w.m()) * w.m();
  for (std::size_t c = 0; c < w.components(); ++c)
    for (std::size_t p = 0; p < out.size(); ++p) {
      const cplx* a = w[c].at(p);
      for (std::size_t e = 0; e < mm; ++e) out[p] += std::norm(a[e]);
    }
  return out;
}

inline ScalarField norm_field(const FormField& w) {
  ScalarField s = norm_sq_field(w);
  for (auto& x : s.values()) x = std::sqrt(std::max(x, 0.0));
  return s;
}

// (ω, ζ) = ∫⟨ω,ζ⟩ dV
inline double l2_inner(const FormField& w, const FormField& z) { return integrate(inner_product(w, z)); }

inline double l2_norm_sq(const FormField& w) { return integrate(norm_sq_field(w)); }

// ∫ ⟨ω,ω⟩^{p/2} · mask dV
inline double lp_mass(const FormField& w, double p, const ScalarField* mask = nullptr) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  ScalarField s = norm_sq_field(w);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double v = std::pow(std::max(s[i], 0.0), 0.5 * p);
    s[i] = mask ? v * (*mask)[i] : v;
  }
  return integrate(s);
}

inline double lp_norm(const FormField& w, double p, const ScalarField* mask = nullptr) {
  return std::pow(lp_mass(w, p, mask), 1.0 / p);
}

inline double sup_norm(const FormField& w) {
  ScalarField s = norm_sq_field(w);
  double m = 0.0;
  for (double x : s.values()) m = std::max(m, x);
  return std::sqrt(m);
}

// Largest deviation from anti-Hermitian (and tracelessness for su(2)).
inline double algebra_defect(const FormField& w) {
  double err = 0.0;
  const int m = w.m();
  for (std::size_t c = 0; c < w.components(); ++c)
    for (std::size_t p = 0; p < w[c].points(); ++p) {
      const cplx* a = w[c].at(p);
      cplx tr = 0.0;
      for (int r = 0; r < m; ++r) {
        tr += a[r * m + r];
        for (int s = 0; s < m; ++s) err = std::max(err, std::abs(a[r * m + s] + std::conj(a[s * m + r])));
      }
      if (w.group().traceless()) err = std::max(err, std::abs(tr));
    }
  return err;
}

// Largest deviation from antisymmetry under transposition of any two slots.
inline double antisymmetry_defect(const FormField& w) {
  double err = 0.0;
  const int p = w.degree();
  for (std::size_t c = 0; c < w.components(); ++c) {
    auto idx = w.indices(c);
    for (int s = 0; s + 1 < p; ++s) {
      auto sw = idx;
      std::swap(sw[s], sw[s + 1]);
      const auto& a = w[c];
      const auto& b = w[w.flat(sw)];
      for (std::size_t i = 0; i < a.raw().size(); ++i) err = std::max(err, std::abs(a.raw()[i] + b.raw()[i]));
    }
  }
  return err;
}

// ---------------------------------------------------------------------------
// Random band-limited data.

using Rng = std::mt19937_64;

// Real trigonometric polynomial with wavenumbers 0 < Σk² ≤ band², RMS ≈ amplitude.
inline ScalarField random_scalar(const GridPtr& g, double amplitude, int band, Rng& rng,
                                 bool include_mean = false) {
  if (band > g->band_limit()) throw std::invalid_argument("random field: band exceeds grid band_limit");
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<cplx> spec(g->points(), 0.0);
  std::size_t count = 0;
  for (std::size_t p = 0; p < g->points(); ++p) {
    long k2 = 0;
    for (int a = 0; a < g->dim(); ++a) k2 += static_cast<long>(g->wavenumber(p, a)) * g->wavenumber(p, a);
    if (!g->full_mask()[p] || k2 > static_cast<long>(band) * band) continue;
    if (k2 == 0 && !include_mean) continue;
    double re = nd(rng), im = nd(rng);
    spec[p] = cplx(re, im);
    ++count;
  }
  std::vector<cplx> vals(g->points());
  g->backward(spec.data(), vals.data(), 1);
  double scale = count ? amplitude * static_cast<double>(g->points()) / std::sqrt(static_cast<double>(count)) : 0.0;
  ScalarField s(g);
  for (std::size_t p = 0; p < g->points(); ++p) s[p] = scale * vals[p].real();
  return s;
}

inline MatrixField random_algebra_field(const GridPtr& g, const StructureGroup& grp, double amplitude,
                                        int band, Rng& rng) {
  MatrixField out(g, grp.m);
  const auto basis = grp.basis();
  const double w = 1.0 / std::sqrt(static_cast<double>(basis.size()));
  for (const auto& e : basis) {
    ScalarField s = random_scalar(g, amplitude * w, band, rng);
    for (std::size_t p = 0; p < g->points(); ++p)
      for (int j = 0; j < grp.m * grp.m; ++j) out.at(p)[j] += s[p] * e[j];
  }
  return out;
}

// Random Ad-valued p-form, antisymmetric in its slots.
inline FormField random_form(const GridPtr& g, const StructureGroup& grp, int degree, double amplitude,
                             int band, Rng& rng) {
  FormField f(g, grp, degree);
  for (std::size_t c = 0; c < f.components(); ++c) {
    auto idx = f.indices(c);
    if (!std::is_sorted(idx.begin(), idx.end()) ||
        std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      continue;
    MatrixField v = random_algebra_field(g, grp, amplitude, band, rng);
    // Distribute over all permutations with the permutation sign.
    auto perm = idx;
    do {
      int inv = 0;
      for (int a = 0; a < degree; ++a)
        for (int b = a + 1; b < degree; ++b)
          if (perm[a] > perm[b]) ++inv;
      f[f.flat(perm)] = v;
      if (inv % 2) f[f.flat(perm)] *= -1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return f;
}

inline ConnectionField random_connection(const GridPtr& g, const StructureGroup& grp, double amplitude,
                                         int band, Rng& rng) {
  return random_form(g, grp, 1, amplitude, band, rng);
}

}  // namespace ymk
