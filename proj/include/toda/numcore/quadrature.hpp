#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "toda/error.hpp"

namespace toda {

/// Running integral F[j] = int_{y_0}^{y_j} f dy of uniformly spaced samples,
/// with F[0] = 0. Even j use composite Simpson; odd j >= 3 close with the
/// 3/8 rule on the last three intervals; j = 1 uses the three-point
/// quadratic-fit panel. All of these are exact on quadratics (Simpson and
/// 3/8 on cubics). Two samples fall back to the trapezoid.
inline std::vector<double> cumulative_integral_y(std::span<const double> f, double hy) {
  const std::size_t n = f.size();
  if (n < 2) throw Error(ErrorKind::TooFewSamples, "cumulative integral needs >= 2 samples");
  std::vector<double> out(n, 0.0);
  if (n == 2) {
    out[1] = 0.5 * hy * (f[0] + f[1]);
    return out;
  }
  // Simpson prefix sums over pairs of intervals.
  std::vector<double> simpson(n, 0.0);
  for (std::size_t j = 2; j < n; j += 2)
    simpson[j] = simpson[j - 2] + hy / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
  out[1] = hy / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
  for (std::size_t j = 2; j < n; ++j) {
    if (j % 2 == 0) {
      out[j] = simpson[j];
    } else {
      out[j] = simpson[j - 3] +
               3.0 * hy / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j]);
    }
  }
  return out;
}

/// int_a^b f by composite 20-point Gauss-Legendre on `panels` equal panels.
/// Nodes move smoothly with (a, b), so the result is smooth in the endpoints.
template <class F>
double gauss_integrate(const F& f, double a, double b, int panels = 2) {
  if (a == b) return 0.0;
  const double w = (b - a) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * w;
    s += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + w);
  }
  return s;
}

}  // namespace toda
