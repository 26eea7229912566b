#pragma once

// Family with the constraint ln U_y = U_z^2/2 + U_x. With beta = U_x,
// gamma = U_z the generating function W(beta, gamma; y) = s y e^{gamma^2/2 + beta}
// + W_L(beta, gamma) gives the solution implicitly through x = W_beta,
// z = W_gamma, and u = U_y = e^{gamma^2/2 + beta}. W_L solves a linear
// second-order equation whose coefficients are configurable.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/newton.hpp"
#include "toda/residuals.hpp"

namespace toda::firstterm {

/// c_bg W_bg + c_gg W_gg + c_bb W_bb = 0, with c_bg multiplied by gamma when
/// gamma_weighted_cross is set.
struct PdeCoefficients {
  double c_bg = -2.0;
  double c_gg = 1.0;
  double c_bb = -1.0;
  bool gamma_weighted_cross = false;

  /// Constant coefficients (-2, 1, -1).
  static PdeCoefficients paper() { return {}; }
  /// -gamma W_bg + W_gg - W_bb = 0, the equation that makes
  /// s y e^{gamma^2/2 + beta} + W_L a solution for s = -1.
  static PdeCoefficients rederived() { return {-1.0, 1.0, -1.0, true}; }

  void validate() const {
    if (c_bg == 0.0 && c_gg == 0.0 && c_bb == 0.0)
      throw Error(ErrorKind::RangeError, "linear equation coefficients are all zero");
  }
};

struct WLJet {
  double v = 0, b = 0, g = 0, bb = 0, bg = 0, gg = 0;

  WLJet& operator+=(const WLJet& o) {
    v += o.v;
    b += o.b;
    g += o.g;
    bb += o.bb;
    bg += o.bg;
    gg += o.gg;
    return *this;
  }
};

/// amplitude e^{k beta + r gamma}
struct ExpTerm {
  double amplitude = 1.0;
  double k = 0.0;
  double r = 0.0;
};

/// e^{k beta} sum_j coeffs[j] gamma^j
struct PolyExpTerm {
  double k = 0.0;
  std::vector<double> coeffs;
};

inline WLJet term_jet(const ExpTerm& t, double beta, double gamma) {
  const double e = t.amplitude * std::exp(t.k * beta + t.r * gamma);
  return {e, t.k * e, t.r * e, t.k * t.k * e, t.k * t.r * e, t.r * t.r * e};
}

inline WLJet term_jet(const PolyExpTerm& t, double beta, double gamma) {
  double p = 0, dp = 0, ddp = 0;
  for (std::size_t j = t.coeffs.size(); j-- > 0;) {
    ddp = ddp * gamma + 2.0 * dp;
    dp = dp * gamma + p;
    p = p * gamma + t.coeffs[j];
  }
  const double e = std::exp(t.k * beta);
  return {e * p, t.k * e * p, e * dp, t.k * t.k * e * p, t.k * e * dp, e * ddp};
}

struct GeneratingFunction {
  double s = -1.0;
  PdeCoefficients coeffs = PdeCoefficients::paper();
  std::vector<ExpTerm> exp_terms;
  std::vector<PolyExpTerm> poly_terms;
  /// Optional user closed form, added to the library terms.
  std::function<WLJet(double, double)> custom;

  WLJet wl(double beta, double gamma) const {
    WLJet j;
    for (const auto& t : exp_terms) j += term_jet(t, beta, gamma);
    for (const auto& t : poly_terms) j += term_jet(t, beta, gamma);
    if (custom) j += custom(beta, gamma);
    return j;
  }

  /// Superposition: W_L + scale * other.W_L (s and coefficients kept).
  GeneratingFunction plus(const GeneratingFunction& other, double scale = 1.0) const {
    GeneratingFunction out = *this;
    for (auto t : other.exp_terms) {
      t.amplitude *= scale;
      out.exp_terms.push_back(t);
    }
    for (auto t : other.poly_terms) {
      for (auto& c : t.coeffs) c *= scale;
      out.poly_terms.push_back(t);
    }
    if (other.custom) {
      auto mine = custom;
      auto theirs = other.custom;
      out.custom = [mine, theirs, scale](double b, double g) {
        WLJet j = mine ? mine(b, g) : WLJet{};
        WLJet o = theirs(b, g);
        j.v += scale * o.v;
        j.b += scale * o.b;
        j.g += scale * o.g;
        j.bb += scale * o.bb;
        j.bg += scale * o.bg;
        j.gg += scale * o.gg;
        return j;
      };
    }
    return out;
  }

  /// W_L = 2 e^{-beta}, s = -1, constant coefficients.
  static GeneratingFunction paper_example() {
    GeneratingFunction gf;
    gf.exp_terms.push_back({2.0, -1.0, 0.0});
    return gf;
  }

  /// W_L = eps gamma e^{-beta}, s = -1, gamma-weighted coefficients.
  static GeneratingFunction rederived_example(double eps) {
    GeneratingFunction gf;
    gf.coeffs = PdeCoefficients::rederived();
    gf.poly_terms.push_back({-1.0, {0.0, eps}});
    return gf;
  }
};

inline double linear_pde_residual(const PdeCoefficients& c, const WLJet& j, double gamma) {
  const double cross = c.gamma_weighted_cross ? c.c_bg * gamma : c.c_bg;
  return cross * j.bg + c.c_gg * j.gg + c.c_bb * j.bb;
}

inline double linear_pde_residual(const GeneratingFunction& gf, double beta, double gamma) {
  const WLJet j = gf.wl(beta, gamma);
  const double r = linear_pde_residual(gf.coeffs, j, gamma);
  if (!std::isfinite(r)) throw Error(ErrorKind::NonFinite, "non-finite W_L derivatives");
  return r;
}

enum class RootChoice { plus, minus };

/// e^{k beta + r gamma} with r solving c_gg r^2 + c_bg k r + c_bb k^2 = 0;
/// `plus` takes r = k (-c_bg + sqrt(disc)) / (2 c_gg). For k = 0 the result is
/// amplitude (1 + gamma). Needs constant coefficients.
inline GeneratingFunction separable_WL(double k, RootChoice root,
                                       PdeCoefficients coeffs = PdeCoefficients::paper(),
                                       double amplitude = 1.0) {
  coeffs.validate();
  if (!std::isfinite(k)) throw Error(ErrorKind::NonFinite, "non-finite k");
  if (coeffs.gamma_weighted_cross)
    throw Error(ErrorKind::RangeError,
                "gamma-weighted equation has no e^{k beta + r gamma} modes; use polynomial_WL");
  GeneratingFunction gf;
  gf.coeffs = coeffs;
  if (k == 0.0) {
    if (coeffs.c_gg == 0.0) throw Error(ErrorKind::RangeError, "c_gg = 0 leaves V undetermined");
    gf.poly_terms.push_back({0.0, {amplitude, amplitude}});
    return gf;
  }
  double r;
  if (coeffs.c_gg == 0.0) {
    if (coeffs.c_bg == 0.0) throw Error(ErrorKind::RangeError, "no separable mode for c_bb-only equation");
    r = -coeffs.c_bb * k / coeffs.c_bg;
  } else {
    const double disc = coeffs.c_bg * coeffs.c_bg - 4.0 * coeffs.c_gg * coeffs.c_bb;
    if (disc < 0.0) throw Error(ErrorKind::RangeError, "complex separable modes are not supported");
    const double sq = root == RootChoice::plus ? std::sqrt(disc) : -std::sqrt(disc);
    r = k * (-coeffs.c_bg + sq) / (2.0 * coeffs.c_gg);
  }
  gf.exp_terms.push_back({amplitude, k, r});
  return gf;
}

/// e^{-n beta} P_n(gamma) for the gamma-weighted equation
/// -gamma W_bg + W_gg - W_bb = 0: P'' + n gamma P' - n^2 P = 0 has a
/// polynomial solution of degree n with leading coefficient 1.
inline GeneratingFunction polynomial_WL(int n, double amplitude = 1.0) {
  if (n < 0) throw Error(ErrorKind::RangeError, "polynomial mode needs n >= 0");
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[n] = amplitude;
  for (int j = n - 2; j >= 0; j -= 2)
    c[j] = (j + 2.0) * (j + 1.0) * c[j + 2] / (static_cast<double>(n) * (n - j));
  GeneratingFunction gf;
  gf.coeffs = PdeCoefficients::rederived();
  gf.poly_terms.push_back({-static_cast<double>(n), std::move(c)});
  return gf;
}

struct FirstTermState {
  double beta = 0.0;
  double gamma = 0.0;
  int iterations = 0;

  double u() const { return std::exp(0.5 * gamma * gamma + beta); }
};

/// (W_beta, W_gamma) at (beta, gamma; y), i.e. the (x, z) this state maps to.
inline std::pair<double, double> firstterm_forward(const GeneratingFunction& gf, double beta,
                                                   double gamma, double y) {
  const double A = gf.s * y * std::exp(0.5 * gamma * gamma + beta);
  const WLJet j = gf.wl(beta, gamma);
  return {A + j.b, A * gamma + j.g};
}

/// Closed-form state of the W_L = 0 family, used as the default seed.
inline std::pair<double, double> default_guess(double s, const Point3& p) {
  const double e = (s * p.y != 0.0) ? p.x / (s * p.y) : 0.0;
  if (e > 0.0 && p.x != 0.0 && std::isfinite(e)) {
    const double g = p.z / p.x;
    return {std::log(e) - 0.5 * g * g, g};
  }
  return {0.0, 0.0};
}

inline FirstTermState firstterm_solve(const GeneratingFunction& gf, const Point3& p,
                                      std::pair<double, double> guess,
                                      const NewtonOptions& opt = {}) {
  auto g = [&](const VecN<2>& s) {
    const auto [x, z] = firstterm_forward(gf, s[0], s[1], p.y);
    return VecN<2>{x - p.x, z - p.z};
  };
  auto jac = [&](const VecN<2>& s) {
    const double gam = s[1];
    const double A = gf.s * p.y * std::exp(0.5 * gam * gam + s[0]);
    const WLJet j = gf.wl(s[0], gam);
    return MatN<2>{{{A + j.bb, A * gam + j.bg}, {A * gam + j.bg, A * (1.0 + gam * gam) + j.gg}}};
  };
  const auto r = solve_newton_nd<2>(g, jac, VecN<2>{guess.first, guess.second}, opt);
  return {r.x[0], r.x[1], r.iterations};
}

using GuessFn = std::function<std::pair<double, double>(const Point3&)>;

struct FirstTermFields {
  ScalarField3 u, beta, gamma, T;
};

/// Pointwise fields; every evaluation solves from guess(p) (default: the
/// W_L = 0 closed form). Solver failures are domain violations.
inline FirstTermFields firstterm_fields(const GeneratingFunction& gf, GuessFn guess = {},
                                        const NewtonOptions& opt = {}) {
  if (!guess) guess = [s = gf.s](const Point3& p) { return default_guess(s, p); };
  auto solve = [gf, guess, opt](const Point3& p) {
    try {
      return firstterm_solve(gf, p, guess(p), opt);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite) throw;
      throw Error(ErrorKind::DomainViolation, e.what());
    }
  };
  return {ScalarField3([solve](const Point3& p) { return solve(p).u(); }),
          ScalarField3([solve](const Point3& p) { return solve(p).beta; }),
          ScalarField3([solve](const Point3& p) { return solve(p).gamma; }),
          ScalarField3([solve](const Point3& p) {
            const auto st = solve(p);
            return st.u() * st.gamma;
          })};
}

/// Continuation along an ordered line: each point starts from the previous
/// solution. Single-threaded; failed points yield nullopt.
inline std::vector<std::optional<FirstTermState>> firstterm_line_sweep(
    const GeneratingFunction& gf, std::span<const Point3> line, std::pair<double, double> first,
    const NewtonOptions& opt = {}) {
  std::vector<std::optional<FirstTermState>> out(line.size());
  auto guess = first;
  for (std::size_t i = 0; i < line.size(); ++i) {
    try {
      out[i] = firstterm_solve(gf, line[i], guess, opt);
      guess = {out[i]->beta, out[i]->gamma};
    } catch (const Error&) {
    }
  }
  return out;
}

/// gamma^2 + (z / (y u)) gamma + x / (y u) + 1, the elimination quadratic
/// with its free symbol read as x. It vanishes identically on the W_L = 0
/// family (s = -1) and is only a cross-check there.
inline double elimination_quadratic(const FirstTermState& st, const Point3& p) {
  const double yu = p.y * st.u();
  return st.gamma * st.gamma + (p.z / yu) * st.gamma + p.x / yu + 1.0;
}

/// ln u - (gamma^2/2 + beta) over a grid for arbitrary fields.
inline ResidualReport constraint_report(const std::string& family, const ScalarField3& u,
                                        const ScalarField3& beta, const ScalarField3& gamma,
                                        const Grid3& grid, const StencilConfig& cfg,
                                        unsigned threads = 1) {
  return residual_report(
      family, "constraint",
      [&](const Point3& p) {
        const double uv = u(p);
        if (uv <= kPositivityFloor) throw Error(ErrorKind::NonPositiveField, "u <= 0");
        const double g = gamma(p);
        return std::log(uv) - (0.5 * g * g + beta(p));
      },
      grid, cfg, threads);
}

/// Toda, system (2) with T = u gamma, the constraint, the potential
/// relations beta_y = u_x, gamma_y = u_z, beta_z = gamma_x, and the potential
/// form of the symmetry equation for T.
inline ReportBundle firstterm_verify(const GeneratingFunction& gf, const Grid3& grid,
                                     const StencilConfig& cfg, unsigned threads = 1,
                                     GuessFn guess = {}) {
  const auto f = firstterm_fields(gf, std::move(guess));
  const std::string name = "firstterm";
  ReportBundle b{name, {}};
  auto add = [&](const std::string& kind, auto fn) {
    b.reports.push_back(residual_report(name, kind, fn, grid, cfg, threads));
  };
  add("toda", [&](const Point3& p) { return toda_residual(f.u, p, cfg); });
  add("system2_1", [&](const Point3& p) { return system2_residuals(f.u, f.T, p, cfg).first; });
  add("system2_2", [&](const Point3& p) { return system2_residuals(f.u, f.T, p, cfg).second; });
  b.reports.push_back(constraint_report(name, f.u, f.beta, f.gamma, grid, cfg, threads));
  add("potential_x", [&](const Point3& p) {
    return central_diff(f.beta, p, Axis::y, cfg) - central_diff(f.u, p, Axis::x, cfg);
  });
  add("potential_z", [&](const Point3& p) {
    return central_diff(f.gamma, p, Axis::y, cfg) - central_diff(f.u, p, Axis::z, cfg);
  });
  add("cross", [&](const Point3& p) {
    return central_diff(f.beta, p, Axis::z, cfg) - central_diff(f.gamma, p, Axis::x, cfg);
  });
  add("symmetry_T",
      [&](const Point3& p) { return symmetry_potential_residual(f.u, f.T, p, cfg, Axis::x); });
  return b;
}

}  // namespace toda::firstterm
