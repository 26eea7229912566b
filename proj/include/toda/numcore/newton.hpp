#pragma once

// Damped Newton for small square systems (n = 2, 3) with backtracking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "toda/error.hpp"

namespace toda {

template <std::size_t N>
using VecN = std::array<double, N>;

template <std::size_t N>
using MatN = std::array<std::array<double, N>, N>;

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 60;
  double damping_floor = 0x1p-20;
  double singular_rel = 1e-14;
  /// Extra full steps taken after convergence, kept only when they do not
  /// increase the residual. Implicit fields want machine-precision roots.
  int polish_steps = 1;
};

template <std::size_t N>
struct NewtonResult {
  VecN<N> x{};
  int iterations = 0;
  double residual_norm = 0.0;
};

template <std::size_t N>
double inf_norm(const VecN<N>& v) noexcept {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

template <std::size_t N>
bool all_finite(const VecN<N>& v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

/// Determinant by elimination; used for the singularity test.
template <std::size_t N>
double determinant(MatN<N> a) noexcept {
  double det = 1.0;
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < N; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < N; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < N; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return det;
}

/// Product of row inf-norms: |det| can not exceed it, so the ratio is a
/// scale-free conditioning measure.
template <std::size_t N>
double row_scale(const MatN<N>& a) noexcept {
  double s = 1.0;
  for (const auto& row : a) {
    double m = 0.0;
    for (double e : row) m = std::max(m, std::abs(e));
    s *= m;
  }
  return s;
}

/// (max |a_ij|)^N, the other bound on |det| used for the singularity test.
template <std::size_t N>
double entry_scale(const MatN<N>& a) noexcept {
  double m = 0.0;
  for (const auto& row : a)
    for (double e : row) m = std::max(m, std::abs(e));
  return std::pow(m, static_cast<double>(N));
}

/// Solves a x = b with partial pivoting; throws SingularJacobian when |det a|
/// is below singular_rel times either row_scale(a) or entry_scale(a). The
/// second catches a row that collapses to zero on its own.
template <std::size_t N>
VecN<N> solve_linear(MatN<N> a, VecN<N> b, double singular_rel = 1e-14) {
  const double scale = row_scale(a);
  const double det = determinant(a);
  if (!std::isfinite(det) || std::abs(det) < singular_rel * scale ||
      std::abs(det) < singular_rel * entry_scale(a) || scale == 0.0)
    throw Error(ErrorKind::SingularJacobian, "Jacobian is singular at the iterate");
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < N; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < N; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < N; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  VecN<N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < N; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Central-difference Jacobian of g at x.
template <std::size_t N, class G>
MatN<N> fd_jacobian(const G& g, const VecN<N>& x) {
  MatN<N> jac{};
  for (std::size_t c = 0; c < N; ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
    VecN<N> xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const VecN<N> gp = g(xp), gm = g(xm);
    for (std::size_t r = 0; r < N; ++r) jac[r][c] = (gp[r] - gm[r]) / (2.0 * h);
  }
  return jac;
}

namespace detail {

// Residual at a trial point; pointwise failures (leaving a table range, a
// domain predicate) count as "no decrease" so backtracking can recover.
template <std::size_t N, class G>
std::optional<VecN<N>> try_eval(const G& g, const VecN<N>& x) {
  try {
    VecN<N> r = g(x);
    if (!all_finite(r)) return std::nullopt;
    return r;
  } catch (const Error& e) {
    if (is_pointwise_failure(e.kind()) || e.kind() == ErrorKind::NonFinite) return std::nullopt;
    throw;
  }
}

}  // namespace detail

/// Solves g(x) = 0 from `guess`. `jac(x)` returns the Jacobian; each step is
/// halved until the residual inf-norm strictly decreases (floor 2^-20).
template <std::size_t N, class G, class J>
NewtonResult<N> solve_newton_nd(const G& g, const J& jac, VecN<N> guess,
                                const NewtonOptions& opt = {}) {
  static_assert(N == 2 || N == 3, "solve_newton_nd is specialised for n in {2, 3}");
  if (!all_finite(guess)) throw Error(ErrorKind::NonFinite, "non-finite Newton guess");
  auto r0 = detail::try_eval<N>(g, guess);
  if (!r0) throw Error(ErrorKind::DomainViolation, "residual not evaluable at the guess");
  VecN<N> x = guess;
  VecN<N> r = *r0;
  double norm = inf_norm(r);
  for (int it = 0; it <= opt.max_iter; ++it) {
    if (norm <= opt.tol) {
      for (int k = 0; k < opt.polish_steps; ++k) {
        VecN<N> dx;
        try {
          dx = solve_linear<N>(jac(x), r, opt.singular_rel);
        } catch (const Error&) {
          break;
        }
        VecN<N> xn;
        for (std::size_t i = 0; i < N; ++i) xn[i] = x[i] - dx[i];
        auto rn = detail::try_eval<N>(g, xn);
        if (!rn || inf_norm(*rn) > norm) break;
        x = xn;
        r = *rn;
        norm = inf_norm(r);
      }
      return {x, it, norm};
    }
    if (it == opt.max_iter) break;
    const VecN<N> dx = solve_linear<N>(jac(x), r, opt.singular_rel);
    double t = 1.0;
    for (;;) {
      VecN<N> xn;
      for (std::size_t i = 0; i < N; ++i) xn[i] = x[i] - t * dx[i];
      auto rn = detail::try_eval<N>(g, xn);
      if (rn && inf_norm(*rn) < norm) {
        x = xn;
        r = *rn;
        norm = inf_norm(r);
        break;
      }
      t *= 0.5;
      if (t < opt.damping_floor)
        throw Error(ErrorKind::NoConvergence, "Newton damping floor reached");
    }
  }
  throw Error(ErrorKind::NoConvergence, "Newton hit the iteration cap");
}

/// As above with a finite-difference Jacobian.
template <std::size_t N, class G>
NewtonResult<N> solve_newton_nd(const G& g, VecN<N> guess, const NewtonOptions& opt = {}) {
  return solve_newton_nd<N>(g, [&g](const VecN<N>& x) { return fd_jacobian<N>(g, x); }, guess,
                            opt);
}

}  // namespace toda
