#pragma once

// Central finite differences on ScalarField3-like callables (Point3 -> double),
// with optional Richardson extrapolation over successively halved steps.

#include <array>
#include <cmath>
#include <concepts>
#include <vector>

#include "toda/error.hpp"
#include "toda/types.hpp"

namespace toda {

template <class F>
concept PointFunction = requires(const F& f, const Point3& p) {
  { f(p) } -> std::convertible_to<double>;
};

namespace detail {

template <PointFunction F>
double first_diff_base(const F& f, const Point3& p, Axis a, double h, int order) {
  // Antisymmetric pairs first, so a field constant along `a` gives exactly 0.
  if (order == 2) return (f(shifted(p, a, h)) - f(shifted(p, a, -h))) / (2.0 * h);
  const double d1 = f(shifted(p, a, h)) - f(shifted(p, a, -h));
  const double d2 = f(shifted(p, a, 2.0 * h)) - f(shifted(p, a, -2.0 * h));
  return (8.0 * d1 - d2) / (12.0 * h);
}

template <PointFunction F>
double second_diff_base(const F& f, const Point3& p, Axis a, double h, int order) {
  // Symmetric pairs first, so a field constant along `a` gives exactly 0.
  const double f0 = f(p);
  const double s1 = f(shifted(p, a, h)) + f(shifted(p, a, -h));
  if (order == 2) return (s1 - 2.0 * f0) / (h * h);
  const double s2 = f(shifted(p, a, 2.0 * h)) + f(shifted(p, a, -2.0 * h));
  return (16.0 * s1 - s2 - 30.0 * f0) / (12.0 * h * h);
}

template <PointFunction F>
double mixed_diff_base(const F& f, const Point3& p, Axis a, Axis b, double ha, double hb,
                       int order) {
  if (order == 2) {
    const double fpp = f(shifted(shifted(p, a, ha), b, hb));
    const double fpm = f(shifted(shifted(p, a, ha), b, -hb));
    const double fmp = f(shifted(shifted(p, a, -ha), b, hb));
    const double fmm = f(shifted(shifted(p, a, -ha), b, -hb));
    return (fpp - fpm - fmp + fmm) / (4.0 * ha * hb);
  }
  // Tensor product of the order-4 first-derivative stencils (16 points),
  // taken as an a-difference of b-differences.
  auto inner = [&](double da) {
    const Point3 q = shifted(p, a, da);
    const double d1 = f(shifted(q, b, hb)) - f(shifted(q, b, -hb));
    const double d2 = f(shifted(q, b, 2.0 * hb)) - f(shifted(q, b, -2.0 * hb));
    return 8.0 * d1 - d2;
  };
  const double e1 = inner(ha) - inner(-ha);
  const double e2 = inner(2.0 * ha) - inner(-2.0 * ha);
  return (8.0 * e1 - e2) / (144.0 * ha * hb);
}

// Richardson tableau over steps h, h/2, ..., h/2^levels; central stencils
// have error expansions in even powers starting at `order`.
template <class Base>
double richardson(Base&& base, int order, int levels) {
  std::vector<double> prev, cur;
  for (int i = 0; i <= levels; ++i) {
    cur.assign(static_cast<std::size_t>(i) + 1, 0.0);
    cur[0] = base(std::ldexp(1.0, -i));
    for (int j = 1; j <= i; ++j) {
      const double f = std::ldexp(1.0, order + 2 * (j - 1));
      cur[j] = (f * cur[j - 1] - prev[j - 1]) / (f - 1.0);
    }
    prev = cur;
  }
  return cur.back();
}

}  // namespace detail

/// d f / d axis at p.
template <PointFunction F>
double central_diff(const F& f, const Point3& p, Axis axis, const StencilConfig& cfg) {
  const double h = cfg.step(p, axis);
  return detail::richardson(
      [&](double scale) { return detail::first_diff_base(f, p, axis, h * scale, cfg.order); },
      cfg.order, cfg.richardson_levels);
}

/// d^2 f / d axis^2 at p (3- or 5-point stencil).
template <PointFunction F>
double second_diff(const F& f, const Point3& p, Axis axis, const StencilConfig& cfg) {
  const double h = cfg.step(p, axis);
  return detail::richardson(
      [&](double scale) { return detail::second_diff_base(f, p, axis, h * scale, cfg.order); },
      cfg.order, cfg.richardson_levels);
}

/// d^2 f / d a d b for two distinct axes.
template <PointFunction F>
double mixed_diff(const F& f, const Point3& p, Axis a, Axis b, const StencilConfig& cfg) {
  if (a == b) return second_diff(f, p, a, cfg);
  const double ha = cfg.step(p, a);
  const double hb = cfg.step(p, b);
  return detail::richardson(
      [&](double scale) {
        return detail::mixed_diff_base(f, p, a, b, ha * scale, hb * scale, cfg.order);
      },
      cfg.order, cfg.richardson_levels);
}

template <PointFunction F>
double mixed_diff_xy(const F& f, const Point3& p, const StencilConfig& cfg) {
  return mixed_diff(f, p, Axis::x, Axis::y, cfg);
}

}  // namespace toda
