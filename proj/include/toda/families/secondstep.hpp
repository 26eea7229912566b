#pragma once

// Family parametrised by a = U_x, b = U_z, c = ln U_y with
// alpha = (b^2 + a)/2. The hodograph maps come from a potential Q(alpha, b, c):
// x = X = R_a, e^c y = R_c, z = R_b + f(b) with R = Q_alpha. Q is a finite sum
// of kernels exp(k alpha + p b + (k^2/2p) c) weighted by F(k, p)/k^3, where F
// solves 2p F_p + k F_k = (2p^2/k - k^2/(2p)) F.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/newton.hpp"
#include "toda/residuals.hpp"

namespace toda::secondstep {

struct StateABC {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double alpha() const noexcept { return 0.5 * (b * b + a); }
  double u() const { return std::exp(c); }
  bool finite() const noexcept { return std::isfinite(a) && std::isfinite(b) && std::isfinite(c); }
};

using Mat3 = MatN<3>;

inline Mat3 build_L(const StateABC& s) {
  return Mat3{{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.5, s.b, s.alpha()}}};
}

inline Mat3 matmul(const Mat3& x, const Mat3& y) noexcept {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += x[i][k] * y[k][j];
  return r;
}

inline double trace(const Mat3& m) noexcept { return m[0][0] + m[1][1] + m[2][2]; }

inline double det3(const Mat3& m) noexcept {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 inverse3(const Mat3& m) {
  const double d = det3(m);
  if (!(std::abs(d) > 1e-12)) throw Error(ErrorKind::SingularMatrix, "|det V| <= 1e-12");
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / d;
    }
  return r;
}

/// max over n = 1..n_max of |Tr((V L V^-1)^n) - Tr(L^n)|.
inline double trace_identity_check(const Mat3& V, const Mat3& L, int n_max) {
  const Mat3 C = matmul(matmul(V, L), inverse3(V));
  Mat3 pc = C, pl = L;
  double worst = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) {
      pc = matmul(pc, C);
      pl = matmul(pl, L);
    }
    worst = std::max(worst, std::abs(trace(pc) - trace(pl)));
  }
  return worst;
}

inline double kernel(double k, double p, double alpha, double b, double c) {
  if (p == 0.0) throw Error(ErrorKind::DivisionByZero, "kernel needs p != 0");
  return std::exp(k * alpha + p * b + k * k / (2.0 * p) * c);
}

using FForm = std::function<double(double k, double p)>;
using Envelope = std::function<double(double m)>;

/// exp((2/3) p^2/k - (k^2/(2p)) ln|k|) phi(k^2/p), the characteristic solution.
inline FForm rederived_F(Envelope phi) {
  return [phi = std::move(phi)](double k, double p) {
    if (k == 0.0 || p == 0.0) throw Error(ErrorKind::DivisionByZero, "F needs k, p != 0");
    return std::exp(2.0 / 3.0 * p * p / k - k * k / (2.0 * p) * std::log(std::abs(k))) *
           phi(k * k / p);
  };
}

/// exp(p^2/(3k) + (1/2) ln|k| k^2/p) phi(k^2/p), the alternative printed form.
inline FForm paper_F(Envelope phi) {
  return [phi = std::move(phi)](double k, double p) {
    if (k == 0.0 || p == 0.0) throw Error(ErrorKind::DivisionByZero, "F needs k, p != 0");
    return std::exp(p * p / (3.0 * k) + 0.5 * std::log(std::abs(k)) * k * k / p) * phi(k * k / p);
  };
}

/// (2p F_p + k F_k - (2p^2/k - k^2/(2p)) F) / |F|, with F_p and F_k from
/// fourth-order central differences plus one Richardson level. Each step is
/// shrunk below 0.05 / |d ln F| so steep envelopes stay resolved.
inline double F_pde_residual(const FForm& F, double k, double p) {
  if (k == 0.0 || p == 0.0) throw Error(ErrorKind::DivisionByZero, "F residual needs k, p != 0");
  const double v = F(k, p);
  auto step = [&](double x, auto&& eval) {
    double h = 1e-3 * std::max(1.0, std::abs(x));
    if (v != 0.0) {
      const double fp = eval(x + h), fm = eval(x - h);
      if (fp != 0.0 && fm != 0.0 && (fp > 0) == (v > 0) && (fm > 0) == (v > 0)) {
        const double slope = std::abs(std::log(std::abs(fp / fm))) / (2.0 * h);
        if (slope > 0.0) h = std::min(h, 0.05 / slope);
      }
    }
    return h;
  };
  const double hk = step(k, [&](double t) { return F(t, p); });
  const double hp = step(p, [&](double t) { return F(k, t); });
  auto fk = [&](const Point3& q) { return F(q.x, p); };
  auto fp = [&](const Point3& q) { return F(k, q.x); };
  StencilConfig ck, cp;
  ck.order = cp.order = 4;
  ck.richardson_levels = cp.richardson_levels = 1;
  ck.relative = cp.relative = false;
  ck.h = hk;
  cp.h = hp;
  const double dk = central_diff(fk, Point3{k, 0.0, 0.0}, Axis::x, ck);
  const double dp = central_diff(fp, Point3{p, 0.0, 0.0}, Axis::x, cp);
  const double r = 2.0 * p * dp + k * dk - (2.0 * p * p / k - k * k / (2.0 * p)) * v;
  if (v == 0.0) return r;
  return r / std::abs(v);
}

struct CharacteristicResult {
  double k = 0.0;
  double p = 0.0;
  double F = 0.0;
  double invariant_drift = 0.0;  // |k^2/p - k0^2/p0|
};

/// Integrates dk/ds = k, dp/ds = 2p, d(ln F)/ds = 2p^2/k - k^2/(2p) from
/// (k0, p0, F0) to s_end. The state carries ln|k| and ln|p|.
inline CharacteristicResult F_characteristic_solve_from(double F0, double k0, double p0,
                                                       double s_end) {
  if (k0 == 0.0 || p0 == 0.0) throw Error(ErrorKind::DivisionByZero, "k0, p0 must be nonzero");
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 3>;
  const double sk = k0 < 0 ? -1.0 : 1.0, sp = p0 < 0 ? -1.0 : 1.0;
  State x{std::log(std::abs(k0)), std::log(std::abs(p0)), 0.0};
  auto rhs = [sk, sp](const State& st, State& d, double) {
    const double k = sk * std::exp(st[0]), p = sp * std::exp(st[1]);
    d[0] = 1.0;
    d[1] = 2.0;
    d[2] = 2.0 * p * p / k - k * k / (2.0 * p);
  };
  if (s_end != 0.0) {
    const double dir = s_end > 0 ? 1.0 : -1.0;
    // Run forward in t = dir s.
    auto rhs_t = [&](const State& st, State& d, double t) {
      rhs(st, d, dir * t);
      for (double& e : d) e *= dir;
    };
    try {
      ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-13, ode::runge_kutta_dopri5<State>()),
                              rhs_t, x, 0.0, std::abs(s_end), 1e-3);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::StepFailure, e.what());
    }
  }
  CharacteristicResult r;
  r.k = sk * std::exp(x[0]);
  r.p = sp * std::exp(x[1]);
  r.F = F0 * std::exp(x[2]);
  if (!std::isfinite(r.F)) throw Error(ErrorKind::StepFailure, "non-finite F along characteristic");
  r.invariant_drift = std::abs(r.k * r.k / r.p - k0 * k0 / p0);
  return r;
}

inline CharacteristicResult F_characteristic_solve(const Envelope& phi, double k0, double p0,
                                                   double s_end) {
  if (p0 == 0.0) throw Error(ErrorKind::DivisionByZero, "p0 must be nonzero");
  return F_characteristic_solve_from(phi(k0 * k0 / p0), k0, p0, s_end);
}

struct SpectralNode {
  double k = 0.0;
  double p = 0.0;
  double weight = 0.0;
};

struct SpectralMeasure {
  std::vector<SpectralNode> nodes;

  void validate() const {
    for (const auto& n : nodes) {
      if (n.k == 0.0 || n.p == 0.0) throw Error(ErrorKind::DivisionByZero, "node with k = 0 or p = 0");
      if (!std::isfinite(n.k) || !std::isfinite(n.p) || !std::isfinite(n.weight))
        throw Error(ErrorKind::NonFinite, "non-finite spectral node");
    }
  }

  /// Trapezoid nodes along characteristics m = k^2/p (m < 0): k = -e^s,
  /// p = e^{2s}/m, s in [s_min, s_max] with step ds, node weight
  /// ds e^{3s}/m^2 times the characteristic's own weight.
  static SpectralMeasure characteristic_quadrature(
      const std::vector<std::pair<double, double>>& characteristics, double s_min, double s_max,
      double ds) {
    if (!(ds > 0.0) || !(s_max > s_min)) throw Error(ErrorKind::RangeError, "bad s range");
    SpectralMeasure m;
    const int n = static_cast<int>(std::floor((s_max - s_min) / ds + 1e-9));
    for (const auto& [mm, w] : characteristics) {
      if (!(mm < 0.0)) throw Error(ErrorKind::RangeError, "characteristic needs m = k^2/p < 0");
      for (int i = 0; i <= n; ++i) {
        const double s = s_min + i * ds;
        const double end = (i == 0 || i == n) ? 0.5 : 1.0;
        m.nodes.push_back({-std::exp(s), std::exp(2.0 * s) / mm, w * end * ds * std::exp(3.0 * s) / (mm * mm)});
      }
    }
    return m;
  }
};

/// Q(alpha, b, c) = sum coef_i exp(k_i alpha + p_i b + n_i c), n_i = k_i^2/(2 p_i).
class PotentialQ {
 public:
  /// d^i/dalpha^i d^j/db^j d^l/dc^l Q for i, j, l in 0..3.
  struct Jet {
    std::array<std::array<std::array<double, 4>, 4>, 4> d{};
    double operator()(int i, int j, int l) const { return d[i][j][l]; }
  };

  PotentialQ() = default;

  PotentialQ(const SpectralMeasure& measure, const FForm& F) {
    measure.validate();
    for (const auto& nd : measure.nodes) {
      const double coef = nd.weight * F(nd.k, nd.p) / (nd.k * nd.k * nd.k);
      if (!std::isfinite(coef)) throw Error(ErrorKind::NonFinite, "non-finite node coefficient");
      if (coef == 0.0) continue;
      terms_.push_back({nd.k, nd.p, nd.k * nd.k / (2.0 * nd.p), coef});
    }
  }

  Jet jet(double alpha, double b, double c) const {
    Jet j;
    for (const auto& t : terms_) {
      const double K = t.coef * std::exp(t.k * alpha + t.p * b + t.n * c);
      if (K == 0.0) continue;
      const std::array<double, 4> kp{1.0, t.k, t.k * t.k, t.k * t.k * t.k};
      const std::array<double, 4> pp{1.0, t.p, t.p * t.p, t.p * t.p * t.p};
      const std::array<double, 4> np{1.0, t.n, t.n * t.n, t.n * t.n * t.n};
      for (int i = 0; i < 4; ++i)
        for (int jj = 0; jj < 4; ++jj) {
          const double kpj = K * kp[i] * pp[jj];
          for (int l = 0; l < 4; ++l) j.d[i][jj][l] += kpj * np[l];
        }
    }
    for (const auto& a : j.d)
      for (const auto& b2 : a)
        for (double v : b2)
          if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "potential overflow");
    return j;
  }

  /// Single partial derivative of arbitrary order.
  double deriv(int i, int j, int l, double alpha, double b, double c) const {
    double s = 0.0;
    for (const auto& t : terms_)
      s += t.coef * std::pow(t.k, i) * std::pow(t.p, j) * std::pow(t.n, l) *
           std::exp(t.k * alpha + t.p * b + t.n * c);
    return s;
  }

  double operator()(double alpha, double b, double c) const { return deriv(0, 0, 0, alpha, b, c); }

  std::size_t size() const noexcept { return terms_.size(); }

 private:
  struct Term {
    double k, p, n, coef;
  };
  std::vector<Term> terms_;
};

inline PotentialQ build_Q(const SpectralMeasure& measure, const FForm& F) {
  return PotentialQ(measure, F);
}

/// Q_aa - 2 Q_bc (alpha, b, c partials).
inline double q_equation1_residual(const PotentialQ& Q, double alpha, double b, double c) {
  const auto j = Q.jet(alpha, b, c);
  return j(2, 0, 0) - 2.0 * j(0, 1, 1);
}

/// Q_ab + b Q_aa + alpha Q_ac - Q_cc.
inline double q_equation2_residual(const PotentialQ& Q, double alpha, double b, double c) {
  const auto j = Q.jet(alpha, b, c);
  return j(1, 1, 0) + b * j(2, 0, 0) + alpha * j(1, 0, 1) - j(0, 0, 2);
}

/// f(b) = sum coeffs[i] b^i.
struct Polynomial {
  std::vector<double> coeffs;

  double operator()(double x) const noexcept {
    double s = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) s = s * x + coeffs[i];
    return s;
  }
  double derivative(double x) const noexcept {
    double s = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 1;) s = s * x + static_cast<double>(i) * coeffs[i];
    return s;
  }
};

/// Image point of a state and the Jacobian d(x, y, z)/d(a, b, c).
struct MapJet {
  double x = 0, y = 0, z = 0;
  double ytilde = 0;  // e^c y
  Mat3 jac{};         // rows x, y, z; columns a, b, c
};

class HodographMaps3 {
 public:
  HodographMaps3(PotentialQ Q, Polynomial f = {}) : Q_(std::move(Q)), f_(std::move(f)) {}

  MapJet operator()(const StateABC& s) const {
    const double b = s.b;
    const auto q = Q_.jet(s.alpha(), b, s.c);
    MapJet m;
    m.x = 0.5 * q(2, 0, 0);
    m.ytilde = q(1, 0, 1);
    m.z = q(1, 1, 0) + b * q(2, 0, 0) + f_(b);
    const double ec = std::exp(-s.c);
    m.y = ec * m.ytilde;
    // d/da = (1/2) d/dalpha, d/db|_a = d/db + b d/dalpha.
    const double x_a = 0.25 * q(3, 0, 0);
    const double x_b = 0.5 * (q(2, 1, 0) + b * q(3, 0, 0));
    const double x_c = 0.5 * q(2, 0, 1);
    const double yt_a = 0.5 * q(2, 0, 1);
    const double yt_b = q(1, 1, 1) + b * q(2, 0, 1);
    const double yt_c = q(1, 0, 2);
    const double z_a = 0.5 * (q(2, 1, 0) + b * q(3, 0, 0));
    const double z_b = q(1, 2, 0) + b * q(2, 1, 0) + q(2, 0, 0) + b * (q(2, 1, 0) + b * q(3, 0, 0)) +
                       f_.derivative(b);
    const double z_c = q(1, 1, 1) + b * q(2, 0, 1);
    m.jac = Mat3{{{x_a, x_b, x_c}, {ec * yt_a, ec * yt_b, ec * (yt_c - m.ytilde)}, {z_a, z_b, z_c}}};
    return m;
  }

  const PotentialQ& Q() const noexcept { return Q_; }
  const Polynomial& f() const noexcept { return f_; }

 private:
  PotentialQ Q_;
  Polynomial f_;
};

inline HodographMaps3 secondstep_XYZ(PotentialQ Q, Polynomial f = {}) {
  return HodographMaps3(std::move(Q), std::move(f));
}

struct InvertResult {
  StateABC state;
  int iterations = 0;
};

/// Solves (X, e^{-c} Ytilde, Z)(a, b, c) = (x, y, z) by damped Newton.
inline InvertResult secondstep_invert(const HodographMaps3& maps, const Point3& p,
                                      const StateABC& guess, const NewtonOptions& opt = {}) {
  if (!guess.finite()) throw Error(ErrorKind::NonFinite, "non-finite guess");
  auto g = [&](const VecN<3>& v) {
    const MapJet m = maps({v[0], v[1], v[2]});
    return VecN<3>{m.x - p.x, m.y - p.y, m.z - p.z};
  };
  auto jac = [&](const VecN<3>& v) { return maps({v[0], v[1], v[2]}).jac; };
  const auto r = solve_newton_nd<3>(g, jac, VecN<3>{guess.a, guess.b, guess.c}, opt);
  return {{r.x[0], r.x[1], r.x[2]}, r.iterations};
}

/// Fraction of guesses from which the inversion converges to `target`
/// within 1e-8 (diagnostic).
inline double convergence_basin(const HodographMaps3& maps, const StateABC& target,
                                const std::vector<StateABC>& guesses) {
  const MapJet m = maps(target);
  const Point3 p{m.x, m.y, m.z};
  int hit = 0;
  for (const auto& g : guesses) {
    try {
      const auto r = secondstep_invert(maps, p, g).state;
      if (std::abs(r.a - target.a) < 1e-8 && std::abs(r.b - target.b) < 1e-8 &&
          std::abs(r.c - target.c) < 1e-8)
        ++hit;
    } catch (const Error&) {
    }
  }
  return guesses.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(guesses.size());
}

using StateGuessFn = std::function<StateABC(const Point3&)>;

struct SecondStepFields {
  ScalarField3 u, T, a, b, c;
};

inline SecondStepFields secondstep_fields(const HodographMaps3& maps, StateGuessFn guess,
                                          const NewtonOptions& opt = {}) {
  auto solve = [maps, guess, opt](const Point3& p) {
    try {
      return secondstep_invert(maps, p, guess(p), opt).state;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite) throw Error(ErrorKind::DomainViolation, e.what());
      throw Error(ErrorKind::DomainViolation, e.what());
    }
  };
  return {ScalarField3([solve](const Point3& p) { return solve(p).u(); }),
          ScalarField3([solve](const Point3& p) {
            const auto s = solve(p);
            return s.u() * s.alpha();
          }),
          ScalarField3([solve](const Point3& p) { return solve(p).a; }),
          ScalarField3([solve](const Point3& p) { return solve(p).b; }),
          ScalarField3([solve](const Point3& p) { return solve(p).c; })};
}

/// Toda, system (2) with T = e^c alpha, the potential relations a_y = u_x,
/// b_y = u_z, the once-integrated equation c_x = b_z, and the potential form
/// of the symmetry equation for T.
inline ReportBundle secondstep_verify(const HodographMaps3& maps, StateGuessFn guess,
                                      const Grid3& grid, const StencilConfig& cfg,
                                      unsigned threads = 1) {
  const auto f = secondstep_fields(maps, std::move(guess));
  const std::string name = "secondstep";
  ReportBundle bundle{name, {}};
  auto add = [&](const std::string& kind, auto fn) {
    bundle.reports.push_back(residual_report(name, kind, fn, grid, cfg, threads));
  };
  add("toda", [&](const Point3& p) { return toda_residual(f.u, p, cfg); });
  add("system2_1", [&](const Point3& p) { return system2_residuals(f.u, f.T, p, cfg).first; });
  add("system2_2", [&](const Point3& p) { return system2_residuals(f.u, f.T, p, cfg).second; });
  add("potential_x", [&](const Point3& p) {
    return central_diff(f.a, p, Axis::y, cfg) - central_diff(f.u, p, Axis::x, cfg);
  });
  add("potential_z", [&](const Point3& p) {
    return central_diff(f.b, p, Axis::y, cfg) - central_diff(f.u, p, Axis::z, cfg);
  });
  add("integrated", [&](const Point3& p) {
    return central_diff(f.c, p, Axis::x, cfg) - central_diff(f.b, p, Axis::z, cfg);
  });
  add("symmetry_T",
      [&](const Point3& p) { return symmetry_potential_residual(f.u, f.T, p, cfg, Axis::x); });
  return bundle;
}

/// The working instance: one characteristic m, trapezoid in s = ln|k|.
struct SecondStepInstance {
  double m = -6.0;
  double s_min = -12.0;
  double s_max = 3.0;
  double ds = 0.08;
  StateABC center{0.2, 0.1, 0.0};
};

inline HodographMaps3 build_instance(const SecondStepInstance& inst, const FForm& F,
                                     Polynomial f = {}) {
  const auto measure =
      SpectralMeasure::characteristic_quadrature({{inst.m, 1.0}}, inst.s_min, inst.s_max - inst.ds, inst.ds);
  return secondstep_XYZ(build_Q(measure, F), std::move(f));
}

}  // namespace toda::secondstep
