#pragma once

#include <algorithm>
#include <cmath>

#include "ymk/ymk.hpp"

namespace testing_util {

using namespace ymk;

inline double max_abs(const MatrixField& a) {
  double m = 0.0;
  for (const auto& z : a.raw()) m = std::max(m, std::abs(z));
  return m;
}

inline double max_abs(const FormField& a) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.components(); ++c) m = std::max(m, max_abs(a[c]));
  return m;
}

inline double max_diff(const FormField& a, const FormField& b) { return max_abs(a - b); }

inline double max_diff(const MatrixField& a, const MatrixField& b) { return max_abs(a - b); }

inline double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] - b[p]));
  return m;
}

inline GridPtr unit_square(int n = 32) { return TorusGrid::make({n, n}, {1.0, 1.0}); }

// Scalar 0-form (ω = value·X) from a real function and a fixed algebra element.
template <class F>
inline MatrixField scalar_times(const GridPtr& g, const std::vector<cplx>& X, F&& f) {
  int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(X.size()))));
  MatrixField out(g, m);
  std::vector<double> x(g->dim());
  for (std::size_t p = 0; p < g->points(); ++p) {
    for (int a = 0; a < g->dim(); ++a) x[a] = g->coord(p, a);
    double v = f(x);
    for (std::size_t j = 0; j < X.size(); ++j) out.at(p)[j] = v * X[j];
  }
  return out;
}

inline MatrixField constant_field(const GridPtr& g, const std::vector<cplx>& X) {
  return scalar_times(g, X, [](const std::vector<double>&) { return 1.0; });
}

}  // namespace testing_util
