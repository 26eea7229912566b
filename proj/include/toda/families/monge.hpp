#pragma once

// Zero-order family: implicit solutions x + z + u y = F(u) (variant A) and
// y + z + u x = F(u) (variant B). Variant A satisfies u_y = u u_z and
// u_z = u_x, hence system (2) with T = u; variant B is the x <-> y mirror and
// satisfies system (3) with w = u.

#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/derivative_field.hpp"
#include "toda/numcore/roots.hpp"
#include "toda/residuals.hpp"

namespace toda::monge {

struct MongeProfile {
  std::function<double(double)> F;
  std::function<double(double)> dF;
  std::string description;
};

inline MongeProfile linear_profile(double c0, double c1) {
  return {[c0, c1](double u) { return c0 + c1 * u; }, [c1](double) { return c1; },
          "F(u) = c0 + c1 u"};
}

inline MongeProfile square_profile() {
  return {[](double u) { return u * u; }, [](double u) { return 2.0 * u; }, "F(u) = u^2"};
}

inline MongeProfile exp_profile() {
  return {[](double u) { return std::exp(u); }, [](double u) { return std::exp(u); },
          "F(u) = e^u"};
}

/// Spot test that dF is consistent with F: |dF - FD(F)| < 1e-6 at 10 points of [lo, hi].
inline void check_profile(const MongeProfile& profile, double lo, double hi) {
  for (int i = 0; i < 10; ++i) {
    const double u = lo + (hi - lo) * (i + 0.5) / 10.0;
    const double h = 1e-4 * std::max(1.0, std::abs(u));
    const double fd = (profile.F(u + h) - profile.F(u - h)) / (2.0 * h);
    const double d = profile.dF(u);
    if (!std::isfinite(fd) || !std::isfinite(d) || std::abs(fd - d) >= 1e-6 * std::max(1.0, std::abs(d)))
      throw Error(ErrorKind::RangeError, "profile derivative inconsistent with F near u = " + std::to_string(u));
  }
}

enum class MongeVariant { A, B };

/// Left-hand side of the implicit equation, linear in u.
inline double implicit_lhs(MongeVariant v, const Point3& p, double u) noexcept {
  return v == MongeVariant::A ? p.x + p.z + u * p.y : p.y + p.z + u * p.x;
}

/// d(lhs)/du.
inline double implicit_slope(MongeVariant v, const Point3& p) noexcept {
  return v == MongeVariant::A ? p.y : p.x;
}

inline constexpr double kCausticThreshold = 1e-10;

struct MongeRoot {
  double u = 0.0;
  int iterations = 0;
  double dg = 0.0;  // dg/du at the root
};

/// Solves lhs(p, u) - F(u) = 0 for the branch selected by `seed`.
inline MongeRoot monge_solve_detailed(const MongeProfile& profile, MongeVariant variant,
                                      const Point3& p, const RootSeed& seed,
                                      const RootOptions& opt = {}) {
  auto g = [&](double u) { return implicit_lhs(variant, p, u) - profile.F(u); };
  auto dg = [&](double u) { return implicit_slope(variant, p) - profile.dF(u); };
  RootResult r;
  try {
    r = solve_scalar_root(g, dg, seed, opt);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoBracket && e.kind() != ErrorKind::NoConvergence) throw;
    const double at = std::holds_alternative<Guess>(seed)
                          ? std::get<Guess>(seed).x0
                          : 0.5 * (std::get<Bracket>(seed).lo + std::get<Bracket>(seed).hi);
    if (std::abs(dg(at)) < kCausticThreshold)
      throw Error(ErrorKind::CausticSingular, "implicit function theorem fails at the seed");
    throw;
  }
  const double slope = dg(r.root);
  if (std::abs(slope) < kCausticThreshold)
    throw Error(ErrorKind::CausticSingular, "|dg/du| below 1e-10 at the root");
  return {r.root, r.iterations, slope};
}

inline double monge_solve(const MongeProfile& profile, MongeVariant variant, const Point3& p,
                          const RootSeed& seed, const RootOptions& opt = {}) {
  return monge_solve_detailed(profile, variant, p, seed, opt).u;
}

/// Solver statistics accumulated by a field across (possibly concurrent) evaluations.
struct SolveStats {
  std::atomic<long long> solves{0};
  std::atomic<long long> iterations{0};

  double mean_iterations() const noexcept {
    const long long n = solves.load();
    return n == 0 ? 0.0 : static_cast<double>(iterations.load()) / static_cast<double>(n);
  }
};

/// Constant branch seed for every point; `caustic_margin` is the smallest
/// |dg/du| accepted by the field's domain predicate.
struct BranchPolicy {
  RootSeed seed = Bracket{1e-6, 100.0};
  double caustic_margin = 1e-6;
  RootOptions root{1e-13, 200};
};

/// u(x, y, z) solved pointwise. Solver failures and caustic neighbourhoods
/// surface as DomainViolation.
inline ScalarField3 monge_field(const MongeProfile& profile, MongeVariant variant,
                                const BranchPolicy& policy = {},
                                ScalarField3::Domain box = {},
                                std::shared_ptr<SolveStats> stats = nullptr) {
  return ScalarField3(
      [profile, variant, policy, stats](const Point3& p) {
        MongeRoot r;
        try {
          r = monge_solve_detailed(profile, variant, p, policy.seed, policy.root);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::NonFinite) throw;
          throw Error(ErrorKind::DomainViolation, e.what());
        }
        if (stats) {
          stats->solves.fetch_add(1, std::memory_order_relaxed);
          stats->iterations.fetch_add(r.iterations, std::memory_order_relaxed);
        }
        if (std::abs(r.dg) < policy.caustic_margin)
          throw Error(ErrorKind::DomainViolation, "inside caustic neighbourhood");
        return r.u;
      },
      std::move(box));
}

/// Continuation along an ordered line of points: each solve starts from the
/// previous root. Single-threaded by contract. Failed points yield nullopt
/// and the next point restarts from the last successful root.
inline std::vector<std::optional<double>> monge_line_sweep(const MongeProfile& profile,
                                                           MongeVariant variant,
                                                           std::span<const Point3> line,
                                                           const RootSeed& first,
                                                           const RootOptions& opt = {1e-13, 200}) {
  std::vector<std::optional<double>> out(line.size());
  RootSeed seed = first;
  for (std::size_t i = 0; i < line.size(); ++i) {
    try {
      const double u = monge_solve(profile, variant, line[i], seed, opt);
      out[i] = u;
      seed = Guess{u};
    } catch (const Error&) {
    }
  }
  return out;
}

/// Toda, transport pair and first-order system with T = u (variant A) or
/// w = u (variant B).
inline ReportBundle monge_verify(const MongeProfile& profile, MongeVariant variant,
                                 const Grid3& grid, const StencilConfig& cfg,
                                 const BranchPolicy& policy = {}, ScalarField3::Domain box = {},
                                 unsigned threads = 1) {
  const ScalarField3 u = monge_field(profile, variant, policy, std::move(box));
  const std::string name = variant == MongeVariant::A ? "monge-A" : "monge-B";
  // Direction paired with z in each transport system.
  const Axis lead = variant == MongeVariant::A ? Axis::y : Axis::x;
  const Axis other = variant == MongeVariant::A ? Axis::x : Axis::y;

  ReportBundle b{name, {}};
  b.reports.push_back(residual_report(name, "toda",
                                      [&](const Point3& p) { return toda_residual(u, p, cfg); },
                                      grid, cfg, threads));
  b.reports.push_back(residual_report(
      name, "transport_1",
      [&](const Point3& p) {
        return central_diff(u, p, lead, cfg) - u(p) * central_diff(u, p, Axis::z, cfg);
      },
      grid, cfg, threads));
  b.reports.push_back(residual_report(
      name, "transport_2",
      [&](const Point3& p) {
        return central_diff(u, p, Axis::z, cfg) - central_diff(u, p, other, cfg);
      },
      grid, cfg, threads));
  const std::string sys = variant == MongeVariant::A ? "system2" : "system3";
  auto pair_at = [&](const Point3& p) {
    return variant == MongeVariant::A ? system2_residuals(u, u, p, cfg)
                                      : system3_residuals(u, u, p, cfg);
  };
  b.reports.push_back(residual_report(
      name, sys + "_1", [&](const Point3& p) { return pair_at(p).first; }, grid, cfg, threads));
  b.reports.push_back(residual_report(
      name, sys + "_2", [&](const Point3& p) { return pair_at(p).second; }, grid, cfg, threads));
  return b;
}

}  // namespace toda::monge
