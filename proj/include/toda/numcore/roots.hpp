#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <variant>

#include "toda/error.hpp"

namespace toda {

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct Guess {
  double x0 = 0.0;
};

using RootSeed = std::variant<Bracket, Guess>;

struct RootOptions {
  double tol = 1e-12;
  int max_iter = 200;
};

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

namespace detail {

inline double checked(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "root function returned non-finite");
  return v;
}

template <class G>
double fd_slope(const G& g, double x) {
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

}  // namespace detail

/// Root of g. With a Bracket seed this is a safeguarded Newton/bisection
/// hybrid that never leaves the bracket; with a Guess seed it is damped
/// Newton. `dg` may be empty, in which case slopes come from central
/// differences.
inline RootResult solve_scalar_root(const std::function<double(double)>& g,
                                    const std::function<double(double)>& dg, const RootSeed& seed,
                                    const RootOptions& opt = {}) {
  auto slope = [&](double x) { return dg ? dg(x) : detail::fd_slope(g, x); };

  if (const auto* b = std::get_if<Bracket>(&seed)) {
    double xl = std::min(b->lo, b->hi);
    double xh = std::max(b->lo, b->hi);
    double fl = detail::checked(g(xl));
    double fh = detail::checked(g(xh));
    if (fl * fh > 0.0) throw Error(ErrorKind::NoBracket, "no sign change on bracket");
    if (std::abs(fl) <= opt.tol) return {xl, 0};
    if (std::abs(fh) <= opt.tol) return {xh, 0};
    if (fl > 0.0) {
      std::swap(xl, xh);
      std::swap(fl, fh);
    }
    // Invariant: g(xl) < 0 < g(xh); xl and xh may be in either order.
    double x = 0.5 * (xl + xh);
    double dx_old = std::abs(xh - xl);
    for (int it = 1; it <= opt.max_iter; ++it) {
      const double fx = detail::checked(g(x));
      if (std::abs(fx) <= opt.tol) {
        // One polishing Newton step, kept only if it stays inside and helps.
        const double d = slope(x);
        if (d != 0.0 && std::isfinite(d)) {
          const double xn = x - fx / d;
          if (xn >= std::min(xl, xh) && xn <= std::max(xl, xh)) {
            const double fn = g(xn);
            if (std::isfinite(fn) && std::abs(fn) <= std::abs(fx)) return {xn, it};
          }
        }
        return {x, it};
      }
      if (fx < 0.0) xl = x; else xh = x;
      const double d = slope(x);
      const double lo = std::min(xl, xh), hi = std::max(xl, xh);
      double xn = (d != 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
      if (!(xn > lo && xn < hi) || std::abs(xn - x) > 0.5 * dx_old) {
        xn = 0.5 * (lo + hi);
      }
      dx_old = std::abs(xn - x);
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
        const double fn = detail::checked(g(xn));
        if (std::abs(fn) <= opt.tol) return {xn, it};
        throw Error(ErrorKind::NoConvergence, "bracket collapsed above tolerance");
      }
      x = xn;
    }
    throw Error(ErrorKind::NoConvergence, "bracketed solve hit the iteration cap");
  }

  double x = std::get<Guess>(seed).x0;
  double fx = detail::checked(g(x));
  for (int it = 1; it <= opt.max_iter; ++it) {
    const double d = slope(x);
    if (d == 0.0 || !std::isfinite(d)) {
      if (std::abs(fx) <= opt.tol) return {x, it - 1};
      throw Error(ErrorKind::NoConvergence, "zero slope in Newton iteration");
    }
    const double step = fx / d;
    if (std::abs(fx) <= opt.tol) {
      const double xn = x - step;
      const double fn = g(xn);
      if (std::isfinite(fn) && std::abs(fn) <= std::abs(fx)) return {xn, it};
      return {x, it - 1};
    }
    double t = 1.0;
    for (;;) {
      const double xn = x - t * step;
      const double fn = g(xn);
      if (std::isfinite(fn) && std::abs(fn) < std::abs(fx)) {
        x = xn;
        fx = fn;
        break;
      }
      t *= 0.5;
      if (t < 0x1p-20) throw Error(ErrorKind::NoConvergence, "damping floor reached");
    }
  }
  if (std::abs(fx) <= opt.tol) return {x, opt.max_iter};
  throw Error(ErrorKind::NoConvergence, "Newton hit the iteration cap");
}

inline RootResult solve_scalar_root(const std::function<double(double)>& g, const RootSeed& seed,
                                    const RootOptions& opt = {}) {
  return solve_scalar_root(g, {}, seed, opt);
}

}  // namespace toda
