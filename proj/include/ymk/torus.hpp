#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ymk {

using cplx = std::complex<double>;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Complex product without the NaN/Inf recovery of the library operator,
// which otherwise dominates the pointwise loops.
inline cplx cmul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

struct GridDescriptor {
  std::vector<int> sizes;
  std::vector<double> lengths;
  // Radius (in integer wavenumber units) of the retained spectral ball.
  // Negative means the 2/3-rule default N_min/3.
  int band_limit = -1;
};

class TorusGrid;
using GridPtr = std::shared_ptr<const TorusGrid>;

// Flat periodic box with FFTW plans for batched complex transforms.
// Points are stored in C order: axis 0 varies slowest.
class TorusGrid {
 public:
  static GridPtr make(const GridDescriptor& d) {
    return GridPtr(new TorusGrid(d));
  }

  static GridPtr make(std::vector<int> sizes, std::vector<double> lengths,
                      int band_limit = -1) {
    return make(GridDescriptor{std::move(sizes), std::move(lengths), band_limit});
  }

  ~TorusGrid() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (auto& [b, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }

  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  int dim() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  int size(int axis) const { return sizes_.at(axis); }
  double length(int axis) const { return lengths_.at(axis); }
  const std::vector<double>& lengths() const { return lengths_; }
  double spacing(int axis) const { return lengths_.at(axis) / sizes_.at(axis); }
  std::size_t points() const { return npoints_; }
  int band_limit() const { return band_; }
  const GridDescriptor& descriptor() const { return desc_; }

  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= spacing(i);
    return v;
  }
  double volume() const {
    double v = 1.0;
    for (double l : lengths_) v *= l;
    return v;
  }

  std::vector<int> multi_index(std::size_t p) const {
    std::vector<int> idx(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(p % sizes_[a]);
      p /= sizes_[a];
    }
    return idx;
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t p = 0;
    for (int a = 0; a < dim(); ++a) {
      int n = sizes_[a];
      p = p * n + static_cast<std::size_t>(((idx[a] % n) + n) % n);
    }
    return p;
  }

  double coord(std::size_t p, int axis) const {
    return coords_[axis][p];
  }

  // Signed integer wavenumber of spectral index p along axis; 0 at Nyquist.
  int wavenumber(std::size_t p, int axis) const { return wavenum_[axis][p]; }

  // Angular frequency 2πk/L at spectral index p along axis (0 at Nyquist).
  double angular_frequency(std::size_t p, int axis) const {
    return xi_[axis][p];
  }
  const std::vector<double>& angular_frequencies(int axis) const {
    return xi_.at(axis);
  }

  // 1 where Σ k_i² ≤ band², 0 elsewhere (Nyquist always 0).
  const std::vector<unsigned char>& band_mask() const { return mask_; }
  // 1 everywhere except Nyquist planes.
  const std::vector<unsigned char>& full_mask() const { return full_mask_; }

  double xi_max() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) m = std::max(m, two_pi * band_ / lengths_[i]);
    return m;
  }

  // Unnormalized forward DFT of `batch` interleaved fields (stride batch).
  void forward(const cplx* in, cplx* out, int batch) const {
    fftw_execute_dft(plan(batch).first,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

  // Inverse DFT including the 1/N normalization.
  void backward(const cplx* in, cplx* out, int batch) const {
    fftw_execute_dft(plan(batch).second,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / static_cast<double>(npoints_);
    const std::size_t n = npoints_ * static_cast<std::size_t>(batch);
    for (std::size_t i = 0; i < n; ++i) out[i] *= s;
  }

  // Minimum-image displacement x_p - c along axis.
  double displacement(std::size_t p, int axis, double c) const {
    double L = lengths_[axis];
    double d = coords_[axis][p] - c;
    d -= L * std::round(d / L);
    return d;
  }

  bool same_shape(const TorusGrid& o) const {
    return sizes_ == o.sizes_ && lengths_ == o.lengths_ && band_ == o.band_;
  }

 private:
  explicit TorusGrid(const GridDescriptor& d) : desc_(d), sizes_(d.sizes), lengths_(d.lengths) {
    if (sizes_.empty() || sizes_.size() != lengths_.size())
      throw std::invalid_argument("grid: sizes and lengths must be non-empty and of equal length");
    npoints_ = 1;
    int nmin = sizes_[0];
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (sizes_[i] < 4 || sizes_[i] % 2 != 0)
        throw std::invalid_argument("grid: sizes must be even and at least 4");
      if (!(lengths_[i] > 0.0) || !std::isfinite(lengths_[i]))
        throw std::invalid_argument("grid: lengths must be positive");
      npoints_ *= static_cast<std::size_t>(sizes_[i]);
      nmin = std::min(nmin, sizes_[i]);
    }
    band_ = d.band_limit < 0 ? nmin / 3 : d.band_limit;
    if (band_ > nmin / 2 - 1)
      throw std::invalid_argument("grid: band_limit must not exceed N/2 - 1");
    desc_.band_limit = band_;

    const int n = dim();
    coords_.assign(n, std::vector<double>(npoints_));
    wavenum_.assign(n, std::vector<int>(npoints_));
    xi_.assign(n, std::vector<double>(npoints_));
    mask_.assign(npoints_, 0);
    full_mask_.assign(npoints_, 1);
    for (std::size_t p = 0; p < npoints_; ++p) {
      auto idx = multi_index(p);
      long k2 = 0;
      for (int a = 0; a < n; ++a) {
        int N = sizes_[a];
        int j = idx[a];
        coords_[a][p] = j * spacing(a);
        int k = j < N / 2 ? j : j - N;
        if (j == N / 2) {
          k = 0;
          full_mask_[p] = 0;
        }
        wavenum_[a][p] = k;
        xi_[a][p] = two_pi * k / lengths_[a];
        k2 += static_cast<long>(k) * k;
      }
      mask_[p] = (full_mask_[p] && k2 <= static_cast<long>(band_) * band_) ? 1 : 0;
    }
  }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  const std::pair<fftw_plan, fftw_plan>& plan(int batch) const {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = plans_.find(batch);
    if (it != plans_.end()) return it->second;
    const std::size_t len = npoints_ * static_cast<std::size_t>(batch);
    auto* a = fftw_alloc_complex(len);
    auto* b = fftw_alloc_complex(len);
    const int flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan f = fftw_plan_many_dft(dim(), sizes_.data(), batch, a, nullptr, batch, 1,
                                     b, nullptr, batch, 1, FFTW_FORWARD, flags);
    fftw_plan g = fftw_plan_many_dft(dim(), sizes_.data(), batch, a, nullptr, batch, 1,
                                     b, nullptr, batch, 1, FFTW_BACKWARD, flags);
    fftw_free(a);
    fftw_free(b);
    if (!f || !g) throw std::runtime_error("grid: FFTW planning failed");
    return plans_.emplace(batch, std::make_pair(f, g)).first->second;
  }

  GridDescriptor desc_;
  std::vector<int> sizes_;
  std::vector<double> lengths_;
  std::size_t npoints_ = 0;
  int band_ = 0;
  std::vector<std::vector<double>> coords_;
  std::vector<std::vector<int>> wavenum_;
  std::vector<std::vector<double>> xi_;
  std::vector<unsigned char> mask_;
  std::vector<unsigned char> full_mask_;
  mutable std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

// Real scalar field sampled on a torus grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr g, double value = 0.0)
      : grid_(std::move(g)), v_(grid_->points(), value) {}

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t p) { return v_[p]; }
  double operator[](std::size_t p) const { return v_[p]; }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  template <class F>
  static ScalarField from_function(GridPtr g, F&& f) {
    ScalarField s(g);
    std::vector<double> x(g->dim());
    for (std::size_t p = 0; p < g->points(); ++p) {
      for (int a = 0; a < g->dim(); ++a) x[a] = g->coord(p, a);
      s[p] = f(x);
    }
    return s;
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

enum class Spectrum { dealiased, full };

namespace detail {

inline void apply_derivative_symbol(const TorusGrid& g, cplx* spec, int batch, int axis,
                                    Spectrum band) {
  const auto& xi = g.angular_frequencies(axis);
  const auto& mask = band == Spectrum::dealiased ? g.band_mask() : g.full_mask();
  for (std::size_t p = 0; p < g.points(); ++p) {
    const double f = mask[p] ? xi[p] : 0.0;
    cplx* s = spec + p * batch;
    for (int j = 0; j < batch; ++j) s[j] = cplx(-f * s[j].imag(), f * s[j].real());
  }
}

inline void apply_mask(const TorusGrid& g, cplx* spec, int batch) {
  const auto& mask = g.band_mask();
  for (std::size_t p = 0; p < g.points(); ++p)
    if (!mask[p])
      for (int j = 0; j < batch; ++j) spec[p * batch + j] = 0.0;
}

inline void check_axis(const TorusGrid& g, int axis) {
  if (axis < 0 || axis >= g.dim()) throw std::out_of_range("axis out of range");
}

}  // namespace detail

inline ScalarField spectral_partial(const ScalarField& f, int axis,
                                    Spectrum band = Spectrum::dealiased) {
  const auto& g = *f.grid();
  detail::check_axis(g, axis);
  std::vector<cplx> buf(f.values().begin(), f.values().end());
  std::vector<cplx> spec(g.points());
  g.forward(buf.data(), spec.data(), 1);
  detail::apply_derivative_symbol(g, spec.data(), 1, axis, band);
  g.backward(spec.data(), buf.data(), 1);
  ScalarField out(f.grid());
  for (std::size_t p = 0; p < g.points(); ++p) out[p] = buf[p].real();
  return out;
}

// L² projection onto the retained spectral ball.
inline ScalarField dealias(const ScalarField& f) {
  const auto& g = *f.grid();
  std::vector<cplx> buf(f.values().begin(), f.values().end());
  std::vector<cplx> spec(g.points());
  g.forward(buf.data(), spec.data(), 1);
  detail::apply_mask(g, spec.data(), 1);
  g.backward(spec.data(), buf.data(), 1);
  ScalarField out(f.grid());
  for (std::size_t p = 0; p < g.points(); ++p) out[p] = buf[p].real();
  return out;
}

inline double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.values()) {
    if (!std::isfinite(x)) throw std::domain_error("integrate: non-finite sample");
    s += x;
  }
  return s * f.grid()->cell_volume();
}

inline ScalarField ball_mask(const GridPtr& g, const std::vector<double>& center, double radius) {
  if (static_cast<int>(center.size()) != g->dim())
    throw std::invalid_argument("ball_mask: center dimension mismatch");
  double lmin = g->length(0);
  for (int a = 1; a < g->dim(); ++a) lmin = std::min(lmin, g->length(a));
  if (!(radius > 0.0) || !(radius < 0.5 * lmin))
    throw std::out_of_range("ball_mask: radius must lie in (0, min(L)/2)");
  ScalarField m(g);
  const double r2 = radius * radius;
  for (std::size_t p = 0; p < g->points(); ++p) {
    double d2 = 0.0;
    for (int a = 0; a < g->dim(); ++a) {
      double d = g->displacement(p, a, center[a]);
      d2 += d * d;
    }
    m[p] = d2 <= r2 ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace ymk
