#pragma once

// Hodograph family under the symmetry constraint u_z = A u_x + B u_y.
// The planar solution is given parametrically by x = theta(u, w), y = sigma(u, w);
// theta solves u theta_uu + (1/A) theta_uw + (B/A) theta_ww = 0 and sigma follows
// from the first-order system sigma_w = (theta_u + B theta_w) / A,
// sigma_u = (B theta_u - sigma_w / u) / A. The 3D field is the shift
// u(x, y, z) = v(x + A z, y + B z).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/newton.hpp"
#include "toda/numcore/quadrature.hpp"
#include "toda/residuals.hpp"

namespace toda::ward {

inline constexpr double kUFloor = 1e-3;

/// theta mode amplitude * e^{lambda w} * g(u) with g(u0) = g0, g'(u0) = dg0.
struct WardMode {
  double lambda = 0.0;
  double amplitude = 1.0;
  double g0 = 0.0;
  double dg0 = 1.0;
};

struct WardParams {
  double A = 1.0;
  double B = 0.0;
  double u0 = 1.0;
  double w0 = 0.0;
  std::vector<WardMode> modes;
  double u_min = 0.5;
  double u_max = 2.0;

  void validate() const {
    if (A == 0.0 || !std::isfinite(A) || !std::isfinite(B))
      throw Error(ErrorKind::RangeError, "A must be finite and nonzero");
    if (!(u0 > 0.0)) throw Error(ErrorKind::RangeError, "anchor u0 must be positive");
    if (modes.empty()) throw Error(ErrorKind::RangeError, "at least one mode is required");
    if (!(u_min < u_max) || u0 < u_min || u0 > u_max)
      throw Error(ErrorKind::RangeError, "u range must be ordered and contain u0");
    if (u_min < kUFloor)
      throw Error(ErrorKind::SingularPoint, "u range reaches the singular point u = 0");
  }
};

struct OdeOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  double max_step = 0.01;
};

namespace detail {

// Quintic Hermite on one interval of width h, t in [0, 1]; returns the value
// and the first derivative with respect to the unscaled variable.
inline std::pair<double, double> hermite5(double h, double t, double f0, double d0, double s0,
                                          double f1, double d1, double s1) noexcept {
  const double c0 = f0, c1 = h * d0, c2 = 0.5 * h * h * s0;
  const double P = f1 - (c0 + c1 + c2);
  const double Q = h * d1 - (c1 + 2.0 * c2);
  const double R = h * h * s1 - 2.0 * c2;
  const double c3 = 10.0 * P - 4.0 * Q + 0.5 * R;
  const double c4 = -15.0 * P + 7.0 * Q - R;
  const double c5 = 6.0 * P - 3.0 * Q + 0.5 * R;
  return {c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5)))),
          (c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)))) / h};
}

}  // namespace detail

/// Solution of u g'' + a g' + b g = 0 (a = lambda/A, b = B lambda^2/A).
/// Integrated in s = ln u, where the equation reads
/// g_ss + (a - 1) g_s + b e^s g = 0 and a fixed step cap in s keeps the
/// relative resolution uniform near the singular point. Between the
/// integrator's accepted steps g is the quintic Hermite interpolant of
/// (g, g_s, g_ss) in s and g_s that of (g_s, g_ss, g_sss); g_ss is the
/// derivative of the latter, which keeps roundoff at O(eps / h).
class ModeTable {
 public:
  struct Jet {
    double g, dg, d2g;
  };

  ModeTable(double A, double B, const WardMode& mode, double u0, double u_min, double u_max,
            const OdeOptions& opt = {})
      : a_(mode.lambda / A), b_(B * mode.lambda * mode.lambda / A), lambda_(mode.lambda) {
    if (u_min < kUFloor)
      throw Error(ErrorKind::SingularPoint, "u range reaches the singular point u = 0");
    if (!(u_min <= u0 && u0 <= u_max)) throw Error(ErrorKind::RangeError, "u0 outside u range");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    const double a = a_, b = b_;
    const double s0 = std::log(u0);
    std::vector<std::array<double, 3>> fwd, bwd;
    // Both sweeps run forward in t = d s (d = +1 or -1); the state keeps g_s.
    auto sweep = [&](double to, std::vector<std::array<double, 3>>& out) {
      if (to == u0) return;
      const double d = to > u0 ? 1.0 : -1.0;
      auto rhs = [a, b, d](const State& st, State& ds, double t) {
        ds[0] = d * st[1];
        ds[1] = -d * ((a - 1.0) * st[1] + b * std::exp(d * t) * st[0]);
      };
      State st{mode.g0, u0 * mode.dg0};
      auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, opt.max_step,
                                          ode::runge_kutta_dopri5<State>());
      try {
        ode::integrate_adaptive(stepper, rhs, st, d * s0, d * std::log(to),
                                std::min(opt.max_step, 1e-3), [&](const State& x, double t) {
                                  out.push_back({d * t, x[0], x[1]});
                                });
      } catch (const std::exception& e) {
        throw Error(ErrorKind::StepFailure, e.what());
      }
    };
    sweep(u_max, fwd);
    sweep(u_min, bwd);
    std::vector<std::array<double, 3>> rows(bwd.rbegin(), bwd.rend());
    if (!rows.empty() && !fwd.empty()) rows.pop_back();  // s0 appears in both sweeps
    rows.insert(rows.end(), fwd.begin(), fwd.end());
    if (rows.empty()) rows.push_back({s0, mode.g0, u0 * mode.dg0});
    for (const auto& r : rows) {
      if (!std::isfinite(r[1]) || !std::isfinite(r[2]))
        throw Error(ErrorKind::StepFailure, "non-finite mode solution");
      s_.push_back(r[0]);
      g_.push_back(r[1]);
      gs_.push_back(r[2]);
      const double e = b_ * std::exp(r[0]);
      gss_.push_back(-((a_ - 1.0) * r[2] + e * r[1]));
      gsss_.push_back(-((a_ - 1.0) * gss_.back() + e * (r[2] + r[1])));
      u_.push_back(std::exp(r[0]));
      dg_.push_back(r[2] / u_.back());
    }
    u_.front() = std::min(u_.front(), u_min);
    u_.back() = std::max(u_.back(), u_max);
  }

  /// g and its first two u-derivatives.
  Jet jet(double u) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(u));
    if (!std::isfinite(u) || u < u_.front() - slack || u > u_.back() + slack)
      throw Error(ErrorKind::DomainViolation,
                  "u = " + std::to_string(u) + " outside the mode table range");
    const double s = std::log(u);
    double v, d, dd;
    if (s_.size() == 1) {
      v = g_[0];
      d = gs_[0];
      dd = gss_[0];
    } else {
      std::size_t i = std::upper_bound(s_.begin(), s_.end(), s) - s_.begin();
      i = std::clamp<std::size_t>(i, 1, s_.size() - 1) - 1;
      const double h = s_[i + 1] - s_[i];
      const double t = (s - s_[i]) / h;
      v = detail::hermite5(h, t, g_[i], gs_[i], gss_[i], g_[i + 1], gs_[i + 1], gss_[i + 1]).first;
      std::tie(d, dd) =
          detail::hermite5(h, t, gs_[i], gss_[i], gsss_[i], gs_[i + 1], gss_[i + 1], gsss_[i + 1]);
    }
    return {v, d / u, (dd - d) / (u * u)};
  }

  double g(double u) const { return jet(u).g; }
  double dg(double u) const { return jet(u).dg; }
  double d2g(double u) const { return jet(u).d2g; }

  /// u g'' + a g' + b g on the interpolant.
  double ode_residual(double u) const {
    const Jet j = jet(u);
    return u * j.d2g + a_ * j.dg + b_ * j.g;
  }

  double lambda() const noexcept { return lambda_; }
  double lo() const noexcept { return u_.front(); }
  double hi() const noexcept { return u_.back(); }
  /// Integrator nodes in u with g and g' there (for export).
  const std::vector<double>& nodes() const noexcept { return u_; }
  const std::vector<double>& values() const noexcept { return g_; }
  const std::vector<double>& slopes() const noexcept { return dg_; }

 private:
  double a_, b_, lambda_;
  std::vector<double> s_, g_, gs_, gss_, gsss_, u_, dg_;
};

inline ModeTable ward_ode_g(const WardParams& params, const WardMode& mode,
                            const OdeOptions& opt = {}) {
  if (params.A == 0.0) throw Error(ErrorKind::RangeError, "A must be nonzero");
  return ModeTable(params.A, params.B, mode, params.u0, params.u_min, params.u_max, opt);
}

struct ThetaJet {
  double v = 0, u = 0, w = 0, uu = 0, uw = 0, ww = 0;
};

using ThetaFunction = std::function<ThetaJet(double, double)>;

inline double theta_pde_residual(const ThetaJet& t, double A, double B, double u) noexcept {
  return u * t.uu + t.uw / A + B * t.ww / A;
}

/// theta = sum amplitude e^{lambda w} g_lambda(u).
class WardTheta {
 public:
  explicit WardTheta(const WardParams& params, const OdeOptions& opt = {})
      : A_(params.A), B_(params.B) {
    params.validate();
    for (const auto& m : params.modes) {
      tables_.push_back(ward_ode_g(params, m, opt));
      amps_.push_back(m.amplitude);
    }
  }

  ThetaJet operator()(double u, double w) const {
    ThetaJet t;
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      const double lam = tables_[i].lambda();
      const double e = amps_[i] * std::exp(lam * w);
      const auto j = tables_[i].jet(u);
      t.v += e * j.g;
      t.u += e * j.dg;
      t.w += e * lam * j.g;
      t.uu += e * j.d2g;
      t.uw += e * lam * j.dg;
      t.ww += e * lam * lam * j.g;
    }
    return t;
  }

  double pde_residual(double u, double w) const {
    return theta_pde_residual((*this)(u, w), A_, B_, u);
  }

  const std::vector<ModeTable>& tables() const noexcept { return tables_; }

 private:
  double A_, B_;
  std::vector<ModeTable> tables_;
  std::vector<double> amps_;
};

inline WardTheta ward_theta(const WardParams& params, const OdeOptions& opt = {}) {
  return WardTheta(params, opt);
}

struct Rect {
  double u_lo, u_hi, w_lo, w_hi;
};

/// sigma with sigma(u0, w0) = 0, by path integration first along u at w0,
/// then along w.
class WardSigma {
 public:
  WardSigma(ThetaFunction theta, double A, double B, double u0, double w0)
      : theta_(std::move(theta)), A_(A), B_(B), u0_(u0), w0_(w0) {
    if (A == 0.0) throw Error(ErrorKind::RangeError, "A must be nonzero");
  }

  /// (sigma_u, sigma_w) from the pointwise linear system.
  std::pair<double, double> grad(double u, double w) const {
    if (!(u > 0.0)) throw Error(ErrorKind::DomainViolation, "sigma needs u > 0");
    const ThetaJet t = theta_(u, w);
    const double sw = (t.u + B_ * t.w) / A_;
    const double su = (B_ * t.u - sw / u) / A_;
    return {su, sw};
  }

  double value(double u, double w) const {
    return integrate_u(u0_, u, w0_) + integrate_w(w0_, w, u);
  }

  /// Counter-clockwise integral of sigma_u du + sigma_w dw around r.
  double loop_integral(const Rect& r) const {
    return integrate_u(r.u_lo, r.u_hi, r.w_lo) + integrate_w(r.w_lo, r.w_hi, r.u_hi) -
           integrate_u(r.u_lo, r.u_hi, r.w_hi) - integrate_w(r.w_lo, r.w_hi, r.u_lo);
  }

  const ThetaFunction& theta() const noexcept { return theta_; }
  double u0() const noexcept { return u0_; }
  double w0() const noexcept { return w0_; }

 private:
  static int panels(double a, double b) {
    return std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / 0.25)));
  }
  double integrate_u(double a, double b, double w) const {
    return gauss_integrate([&](double s) { return grad(s, w).first; }, a, b, panels(a, b));
  }
  double integrate_w(double a, double b, double u) const {
    return gauss_integrate([&](double t) { return grad(u, t).second; }, a, b, panels(a, b));
  }

  ThetaFunction theta_;
  double A_, B_, u0_, w0_;
};

inline constexpr double kLoopTolerance = 1e-7;

/// Builds sigma and checks closedness of its differential on `check`.
inline WardSigma ward_sigma(ThetaFunction theta, double A, double B, double u0, double w0,
                            const std::optional<Rect>& check = std::nullopt) {
  WardSigma s(std::move(theta), A, B, u0, w0);
  if (check) {
    const double loop = s.loop_integral(*check);
    if (!(std::abs(loop) <= kLoopTolerance))
      throw Error(ErrorKind::CompatibilityViolation,
                  "closed-loop integral of d(sigma) is " + std::to_string(loop));
  }
  return s;
}

/// Value and first partials (f, f_u, f_w).
using Jet2 = std::array<double, 3>;

struct HodographMap2 {
  std::function<Jet2(double, double)> theta;
  std::function<Jet2(double, double)> sigma;
  double u0 = 1.0;
  double w0 = 0.0;

  std::pair<double, double> forward(double u, double w) const {
    return {theta(u, w)[0], sigma(u, w)[0]};
  }

  /// D = theta_u sigma_w - theta_w sigma_u.
  double jacobian(double u, double w) const {
    const Jet2 t = theta(u, w), s = sigma(u, w);
    return t[1] * s[2] - t[2] * s[1];
  }
};

inline HodographMap2 make_hodograph(const WardTheta& theta, const WardSigma& sigma) {
  HodographMap2 m;
  m.theta = [theta](double u, double w) {
    const ThetaJet t = theta(u, w);
    return Jet2{t.v, t.u, t.w};
  };
  m.sigma = [sigma](double u, double w) {
    const auto [su, sw] = sigma.grad(u, w);
    return Jet2{sigma.value(u, w), su, sw};
  };
  m.u0 = sigma.u0();
  m.w0 = sigma.w0();
  return m;
}

/// Solves (theta, sigma)(u, w) = (x, y) by damped Newton from `guess`.
inline std::pair<double, double> ward_invert(const HodographMap2& map, double x, double y,
                                             std::pair<double, double> guess,
                                             const NewtonOptions& opt = {}) {
  auto g = [&](const VecN<2>& s) {
    return VecN<2>{map.theta(s[0], s[1])[0] - x, map.sigma(s[0], s[1])[0] - y};
  };
  auto jac = [&](const VecN<2>& s) {
    const Jet2 t = map.theta(s[0], s[1]), sg = map.sigma(s[0], s[1]);
    return MatN<2>{{{t[1], t[2]}, {sg[1], sg[2]}}};
  };
  const auto r = solve_newton_nd<2>(g, jac, VecN<2>{guess.first, guess.second}, opt);
  return {r.x[0], r.x[1]};
}

struct WardFields {
  ScalarField3 u;
  ScalarField3 w;
};

/// u and w on R^3 through the shift (x, y, z) -> (x + A z, y + B z). Points
/// where the inversion fails are outside the fields' domain.
inline WardFields ward_fields(const HodographMap2& map, double A, double B,
                              std::pair<double, double> guess, const NewtonOptions& opt = {}) {
  auto solve = [map, A, B, guess, opt](const Point3& p) {
    try {
      return ward_invert(map, p.x + A * p.z, p.y + B * p.z, guess, opt);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite) throw;
      throw Error(ErrorKind::DomainViolation, e.what());
    }
  };
  return {ScalarField3([solve](const Point3& p) { return solve(p).first; }),
          ScalarField3([solve](const Point3& p) { return solve(p).second; })};
}

/// Everything needed to evaluate one configured instance.
struct WardFamily {
  WardParams params;
  WardTheta theta;
  WardSigma sigma;
  HodographMap2 map;

  /// Image point (x, y) of the hodograph state (u, w), i.e. the z = 0 location.
  std::pair<double, double> image(double u, double w) const { return map.forward(u, w); }
};

inline WardFamily build_ward_family(const WardParams& params,
                                    const std::optional<Rect>& check = std::nullopt,
                                    const OdeOptions& opt = {}) {
  WardTheta theta = ward_theta(params, opt);
  WardSigma sigma = ward_sigma(theta, params.A, params.B, params.u0, params.w0, check);
  HodographMap2 map = make_hodograph(theta, sigma);
  return {params, std::move(theta), std::move(sigma), std::move(map)};
}

/// Toda, constraint, system (3) with the w field, and the potential form of
/// the symmetry equation for w.
inline ReportBundle ward_verify(const WardFamily& fam, std::pair<double, double> guess,
                                const Grid3& grid, const StencilConfig& cfg,
                                unsigned threads = 1) {
  const auto f = ward_fields(fam.map, fam.params.A, fam.params.B, guess);
  const double A = fam.params.A, B = fam.params.B;
  const std::string name = "ward";
  ReportBundle b{name, {}};
  b.reports.push_back(residual_report(
      name, "toda", [&](const Point3& p) { return toda_residual(f.u, p, cfg); }, grid, cfg,
      threads));
  b.reports.push_back(residual_report(
      name, "constraint",
      [&](const Point3& p) {
        return central_diff(f.u, p, Axis::z, cfg) - A * central_diff(f.u, p, Axis::x, cfg) -
               B * central_diff(f.u, p, Axis::y, cfg);
      },
      grid, cfg, threads));
  b.reports.push_back(residual_report(
      name, "system3_1",
      [&](const Point3& p) { return system3_residuals(f.u, f.w, p, cfg).first; }, grid, cfg,
      threads));
  b.reports.push_back(residual_report(
      name, "system3_2",
      [&](const Point3& p) { return system3_residuals(f.u, f.w, p, cfg).second; }, grid, cfg,
      threads));
  b.reports.push_back(residual_report(
      name, "symmetry_w",
      [&](const Point3& p) { return symmetry_potential_residual(f.u, f.w, p, cfg, Axis::y); },
      grid, cfg, threads));
  return b;
}

}  // namespace toda::ward
