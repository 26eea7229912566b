#pragma once

// Pointwise residual operators for the continuous Toda chain
// (ln u)_xy = u_zz, its first-order forms, its symmetry equation, the
// theta-potential form and the discrete-chain limit, plus grid aggregation.
// Every residual is LHS - RHS of the equation as written.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/derivative_field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/parallel.hpp"
#include "toda/types.hpp"

namespace toda {

/// (ln u)_xy - u_zz.
inline double toda_residual(const ScalarField3& u, const Point3& p, const StencilConfig& cfg) {
  const ScalarField3 rho = log_field(u);
  return mixed_diff_xy(rho, p, cfg) - second_diff(positive_field(u), p, Axis::z, cfg);
}

/// ((ln u)_y - T_z, u_z - T_x).
inline std::pair<double, double> system2_residuals(const ScalarField3& u, const ScalarField3& T,
                                                   const Point3& p, const StencilConfig& cfg) {
  const ScalarField3 rho = log_field(u);
  return {central_diff(rho, p, Axis::y, cfg) - central_diff(T, p, Axis::z, cfg),
          central_diff(positive_field(u), p, Axis::z, cfg) - central_diff(T, p, Axis::x, cfg)};
}

/// ((ln u)_x - w_z, u_z - w_y): the x <-> y mirror of system2_residuals.
inline std::pair<double, double> system3_residuals(const ScalarField3& u, const ScalarField3& w,
                                                   const Point3& p, const StencilConfig& cfg) {
  const ScalarField3 rho = log_field(u);
  return {central_diff(rho, p, Axis::x, cfg) - central_diff(w, p, Axis::z, cfg),
          central_diff(positive_field(u), p, Axis::z, cfg) - central_diff(w, p, Axis::y, cfg)};
}

/// A solution u together with a candidate S for the linearized equation.
struct SymmetryPair {
  ScalarField3 u;
  ScalarField3 S;
};

/// (S/u)_xy - S_zz.
inline double symmetry_residual(const SymmetryPair& pair, const Point3& p,
                                const StencilConfig& cfg) {
  const ScalarField3& u = pair.u;
  const ScalarField3& S = pair.S;
  auto ratio = [&u, &S](const Point3& q) {
    const double uv = u(q);
    if (uv <= kPositivityFloor) throw Error(ErrorKind::NonPositiveField, "u <= 0 on stencil");
    return S(q) / uv;
  };
  return mixed_diff_xy(ratio, p, cfg) - second_diff(S, p, Axis::z, cfg);
}

/// Potential form of the symmetry equation. With `along = Axis::x` this is
/// (T_x/u)_y - T_zz; with `along = Axis::y` it is (w_y/u)_x - w_zz.
inline double symmetry_potential_residual(const ScalarField3& u, const ScalarField3& T,
                                          const Point3& p, const StencilConfig& cfg,
                                          Axis along = Axis::x) {
  const Axis outer = along == Axis::x ? Axis::y : Axis::x;
  auto inner = [&](const Point3& q) {
    const double uv = u(q);
    if (uv <= kPositivityFloor) throw Error(ErrorKind::NonPositiveField, "u <= 0 on stencil");
    return central_diff(T, q, along, cfg) / uv;
  };
  return central_diff(inner, p, outer, cfg) - second_diff(T, p, Axis::z, cfg);
}

/// theta_yx - theta_x * theta_zz.
inline double theta_residual(const ScalarField3& theta, const Point3& p,
                             const StencilConfig& cfg) {
  return mixed_diff_xy(theta, p, cfg) -
         central_diff(theta, p, Axis::x, cfg) * second_diff(theta, p, Axis::z, cfg);
}

/// rho_xy - eps^-2 [e^rho(z+eps) - 2 e^rho(z) + e^rho(z-eps)]: the lattice
/// chain with rho_n(x, y) = rho(x, y, eps n) - 2 ln eps, written back in
/// continuum units. O(eps^2) for exact continuum solutions.
inline double discrete_chain_residual(const ScalarField3& rho, const Point3& p, double eps,
                                      const StencilConfig& cfg) {
  if (!(eps > 0.0)) throw Error(ErrorKind::RangeError, "discrete-chain spacing must be > 0");
  const double up = std::exp(rho(shifted(p, Axis::z, eps)));
  const double mid = std::exp(rho(p));
  const double dn = std::exp(rho(shifted(p, Axis::z, -eps)));
  return mixed_diff_xy(rho, p, cfg) - (up - 2.0 * mid + dn) / (eps * eps);
}

struct ResidualReport {
  std::string family_name;
  std::string kind;
  Grid3 grid;
  StencilConfig stencil;
  double max_abs = 0.0;
  double rms = 0.0;
  std::size_t n_points = 0;
  std::size_t n_skipped = 0;
  Point3 worst_point{};
  long long wall_ms = 0;

  bool passes(double tolerance) const noexcept { return max_abs <= tolerance; }
};

using PointResidual = std::function<double(const Point3&)>;

/// Aggregates `residual` over every grid point. Points whose evaluation
/// raises a pointwise failure (domain violation, non-positive u) are skipped
/// and counted. Values are computed in parallel into an indexed buffer and
/// reduced in index order, so the report does not depend on `threads`.
inline ResidualReport residual_report(std::string family_name, std::string kind,
                                      const PointResidual& residual, const Grid3& grid,
                                      const StencilConfig& cfg, unsigned threads = 1) {
  grid.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = grid.total();
  std::vector<std::optional<double>> values(n);
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      values[i] = residual(grid.point(i));
    } catch (const Error& e) {
      if (!is_pointwise_failure(e.kind())) throw;
    }
  });

  ResidualReport rep;
  rep.family_name = std::move(family_name);
  rep.kind = std::move(kind);
  rep.grid = grid;
  rep.stencil = cfg;
  double sum_sq = 0.0;
  bool have_worst = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!values[i]) {
      ++rep.n_skipped;
      continue;
    }
    const double a = std::abs(*values[i]);
    if (!std::isfinite(a)) throw Error(ErrorKind::NonFinite, "non-finite residual");
    ++rep.n_points;
    sum_sq += a * a;
    if (!have_worst || a > rep.max_abs) {
      rep.max_abs = a;
      rep.worst_point = grid.point(i);
      have_worst = true;
    }
  }
  if (rep.n_points == 0)
    throw Error(ErrorKind::AllPointsSkipped, "no grid point inside the field's domain");
  rep.rms = std::sqrt(sum_sq / static_cast<double>(rep.n_points));
  rep.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

/// The reports a family's verify operation produces, in a fixed order.
struct ReportBundle {
  std::string family;
  std::vector<ResidualReport> reports;

  bool all_pass(double tolerance) const noexcept {
    for (const auto& r : reports)
      if (!r.passes(tolerance)) return false;
    return !reports.empty();
  }

  const ResidualReport& at(const std::string& kind) const {
    for (const auto& r : reports)
      if (r.kind == kind) return r;
    throw Error(ErrorKind::RangeError, "no report of kind " + kind);
  }
};

enum class ResidualKind { Toda, Theta };

inline ResidualReport residual_report(const ScalarField3& u, const Grid3& grid,
                                      const StencilConfig& cfg, ResidualKind kind,
                                      unsigned threads = 1, std::string family_name = "field") {
  switch (kind) {
    case ResidualKind::Toda:
      return residual_report(std::move(family_name), "toda",
                             [&](const Point3& p) { return toda_residual(u, p, cfg); }, grid, cfg,
                             threads);
    case ResidualKind::Theta:
      return residual_report(std::move(family_name), "theta",
                             [&](const Point3& p) { return theta_residual(u, p, cfg); }, grid,
                             cfg, threads);
  }
  throw Error(ErrorKind::RangeError, "unknown residual kind");
}

/// Symmetry residual of S = du/dd for d = x, y, z ("linearization_x" ...).
/// S is itself a finite-difference field built with `cfg`.
inline ReportBundle linearization_reports(const ScalarField3& u, const Grid3& grid,
                                          const StencilConfig& cfg, unsigned threads = 1,
                                          std::string family_name = "field") {
  ReportBundle out{family_name, {}};
  for (Axis a : {Axis::x, Axis::y, Axis::z}) {
    const SymmetryPair pair{u, derivative_field(u, a, cfg)};
    out.reports.push_back(residual_report(
        family_name, std::string("linearization_") + to_string(a),
        [&](const Point3& p) { return symmetry_residual(pair, p, cfg); }, grid, cfg, threads));
  }
  return out;
}

/// Observed order from values at h, h/2, h/4: log2(|v0 - v1| / |v1 - v2|).
/// Works both for residuals tending to zero and for approximations tending
/// to an unknown limit. Differences at or below `noise_floor` mean the
/// values are exact to round-off: ZeroResidual.
inline double convergence_order(const std::function<double(double)>& value_at_h,
                                std::array<double, 3> h, double noise_floor = 1e-10) {
  for (int i = 0; i < 2; ++i) {
    if (!(h[i + 1] < h[i]) || std::abs(h[i] / h[i + 1] - 2.0) > 1e-9)
      throw Error(ErrorKind::RangeError, "h sequence must be strictly decreasing with ratio 2");
  }
  const double v0 = value_at_h(h[0]), v1 = value_at_h(h[1]), v2 = value_at_h(h[2]);
  if (!std::isfinite(v0) || !std::isfinite(v1) || !std::isfinite(v2))
    throw Error(ErrorKind::NonFinite, "non-finite value in convergence study");
  const double d0 = std::abs(v0 - v1), d1 = std::abs(v1 - v2);
  if (d0 <= noise_floor && d1 <= noise_floor)
    throw Error(ErrorKind::ZeroResidual, "values agree to the noise floor (exact)");
  if (d1 == 0.0) throw Error(ErrorKind::NonFinite, "finest difference vanished");
  return std::log2(d0 / d1);
}

/// Order from two magnitudes at h and h/2 (e.g. max-abs residuals).
inline double observed_order(double coarse, double fine) {
  return std::log2(coarse / fine);
}

/// Default pass bar for a residual whose finite-difference error is
/// estimated as `fd_error_estimate`: max(1e-7, 10 * estimate).
inline double default_pass_threshold(double fd_error_estimate) noexcept {
  return std::max(1e-7, 10.0 * std::abs(fd_error_estimate));
}

/// FD error estimate of a pointwise residual by comparing steps h and 2h.
inline double estimate_fd_error(const std::function<double(const StencilConfig&)>& residual,
                                const StencilConfig& cfg) {
  return std::abs(residual(cfg) - residual(cfg.with_h(2.0 * cfg.h)));
}

}  // namespace toda
