#pragma once

// Config section -> concrete family field and its verify bundle.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "toda/cli/config.hpp"
#include "toda/families/firstterm.hpp"
#include "toda/families/monge.hpp"
#include "toda/families/secondstep.hpp"
#include "toda/families/ward.hpp"
#include "toda/residuals.hpp"

namespace toda::cli {

using VerifyFn = std::function<ReportBundle(const Grid3&, const StencilConfig&, unsigned)>;

struct FamilyHandle {
  std::string name;
  ScalarField3 u;
  ScalarField3 gamma;  // first-term only (recurrence base data)
  VerifyFn verify;
  std::optional<Grid3> auto_grid;
};

inline Grid3 cube_around(double x, double y, double z, double half, std::size_t n) {
  return Grid3::span({x - half, y - half, z - half}, {x + half, y + half, z + half}, {n, n, n});
}

inline monge::MongeProfile monge_profile(const MongeSection& m) {
  if (m.profile == "square") return monge::square_profile();
  if (m.profile == "exp") return monge::exp_profile();
  return monge::linear_profile(m.c0, m.c1);
}

inline ScalarField3 custom_field(const CustomSection& c) {
  if (c.field == "linear_fraction") {
    const double a0 = c.a0, a1 = c.a1, a3 = c.a3, a4 = c.a4, a5 = c.a5;
    return ScalarField3([=](const Point3& p) { return (a1 * p.x + a3 * p.z + a0) / (a4 * p.y + a5); },
                        [=](const Point3& p) {
                          const double d = a4 * p.y + a5;
                          return std::abs(d) > 1e-2 && (a1 * p.x + a3 * p.z + a0) / d > 0.0;
                        });
  }
  if (c.field == "z_linear") {
    const double c0 = c.c0, c1 = c.c1;
    return ScalarField3([=](const Point3& p) { return c0 + c1 * p.z; },
                        [=](const Point3& p) { return c0 + c1 * p.z > 0.0; });
  }
  if (c.field == "exp_sum") return ScalarField3([](const Point3& p) { return std::exp(p.x + p.y + p.z); });
  if (c.field == "smooth_sin")
    return ScalarField3([](const Point3& p) { return std::sin(p.x) * std::cos(p.y) * std::exp(0.5 * p.z); });
  if (c.field == "smooth_log")
    return ScalarField3([](const Point3& p) { return std::log(2.0 + p.x * p.y + p.z * p.z); });
  return ScalarField3([](const Point3& p) { return std::exp(p.x - 0.3 * p.y) / (1.5 + std::cos(p.z)); });
}

inline firstterm::GeneratingFunction firstterm_gf(const FirstTermSection& f) {
  using namespace toda::firstterm;
  auto coeffs = [&](PdeCoefficients fallback) {
    if (f.coefficients == "paper") return PdeCoefficients::paper();
    if (f.coefficients == "rederived") return PdeCoefficients::rederived();
    return fallback;
  };
  GeneratingFunction gf;
  if (f.wl == "paper") {
    gf = GeneratingFunction::paper_example();
    gf.coeffs = coeffs(PdeCoefficients::paper());
  } else if (f.wl == "rederived") {
    gf = GeneratingFunction::rederived_example(f.eps);
    gf.coeffs = coeffs(PdeCoefficients::rederived());
  } else if (f.wl == "polynomial") {
    gf = polynomial_WL(f.n, f.amplitude);
    gf.coeffs = coeffs(gf.coeffs);
  } else if (f.wl == "separable") {
    gf = separable_WL(f.k, f.root == "plus" ? RootChoice::plus : RootChoice::minus,
                      coeffs(PdeCoefficients::paper()), f.amplitude);
  } else {
    gf.coeffs = coeffs(PdeCoefficients::paper());
  }
  gf.s = f.s;
  return gf;
}

inline ward::WardParams ward_params(const WardSection& w) {
  ward::WardParams p;
  p.A = w.A;
  p.B = w.B;
  p.u0 = w.u0;
  p.w0 = w.w0;
  p.u_min = w.u_min;
  p.u_max = w.u_max;
  for (const auto& m : w.modes) p.modes.push_back({m.lambda, m.amplitude, m.g0, m.dg0});
  return p;
}

inline secondstep::HodographMaps3 secondstep_maps(const SecondStepSection& q) {
  using namespace toda::secondstep;
  Envelope phi = [](double) { return 1.0; };
  if (q.envelope == "gaussian") {
    const double w = q.envelope_width;
    phi = [w](double m) { return std::exp(-m * m / (2.0 * w * w)); };
  }
  const FForm F = q.form == "paper" ? paper_F(phi) : rederived_F(phi);
  SecondStepInstance inst;
  inst.m = q.m;
  inst.s_min = q.s_min;
  inst.s_max = q.s_max;
  inst.ds = q.ds;
  inst.center = {q.center[0], q.center[1], q.center[2]};
  return build_instance(inst, F, Polynomial{q.f});
}

/// Builds the field of `which` (recurrence is not a field family).
inline FamilyHandle build_family(const RunConfig& cfg, Family which) {
  FamilyHandle h;
  switch (which) {
    case Family::monge: {
      const auto prof = monge_profile(cfg.monge);
      const auto var = cfg.monge.variant == "B" ? monge::MongeVariant::B : monge::MongeVariant::A;
      monge::BranchPolicy pol;
      pol.seed = Bracket{cfg.monge.bracket_lo, cfg.monge.bracket_hi};
      h.name = var == monge::MongeVariant::A ? "monge-A" : "monge-B";
      h.u = monge::monge_field(prof, var, pol);
      h.verify = [prof, var, pol](const Grid3& g, const StencilConfig& s, unsigned t) {
        return monge::monge_verify(prof, var, g, s, pol, {}, t);
      };
      break;
    }
    case Family::ward: {
      const auto fam = ward::build_ward_family(ward_params(cfg.ward));
      const std::pair<double, double> guess{cfg.ward.guess_u, cfg.ward.guess_w};
      h.name = "ward";
      h.u = ward::ward_fields(fam.map, fam.params.A, fam.params.B, guess).u;
      h.verify = [fam, guess](const Grid3& g, const StencilConfig& s, unsigned t) {
        return ward::ward_verify(fam, guess, g, s, t);
      };
      const auto [x, y] = fam.image(guess.first, guess.second);
      h.auto_grid = cube_around(x, y, 0.0, cfg.ward.auto_half, cfg.ward.auto_n);
      break;
    }
    case Family::firstterm: {
      const auto gf = firstterm_gf(cfg.firstterm);
      const auto f = firstterm::firstterm_fields(gf);
      h.name = "firstterm";
      h.u = f.u;
      h.gamma = f.gamma;
      h.verify = [gf](const Grid3& g, const StencilConfig& s, unsigned t) {
        return firstterm::firstterm_verify(gf, g, s, t);
      };
      break;
    }
    case Family::secondstep: {
      const auto maps = secondstep_maps(cfg.secondstep);
      const secondstep::StateABC c{cfg.secondstep.center[0], cfg.secondstep.center[1], cfg.secondstep.center[2]};
      const secondstep::StateGuessFn guess = [c](const Point3&) { return c; };
      h.name = "secondstep";
      h.u = secondstep::secondstep_fields(maps, guess).u;
      h.verify = [maps, guess](const Grid3& g, const StencilConfig& s, unsigned t) {
        return secondstep::secondstep_verify(maps, guess, g, s, t);
      };
      const auto m = maps(c);
      h.auto_grid = cube_around(m.x, m.y, m.z, cfg.secondstep.auto_half, cfg.secondstep.auto_n);
      break;
    }
    case Family::custom: {
      h.name = "custom-" + cfg.custom.field;
      h.u = custom_field(cfg.custom);
      const ScalarField3 u = h.u;
      const std::string name = h.name;
      h.verify = [u, name](const Grid3& g, const StencilConfig& s, unsigned t) {
        return ReportBundle{name, {residual_report(u, g, s, ResidualKind::Toda, t, name)}};
      };
      break;
    }
    case Family::recurrence:
      throw Error(ErrorKind::RangeError, "recurrence is not a field family");
  }
  return h;
}

/// Grid precedence: --grid, then the config grid, then the family's auto grid.
inline Grid3 resolve_grid(const RunConfig& cfg, const FamilyHandle& h,
                          const std::optional<Grid3>& override_grid) {
  if (override_grid) return *override_grid;
  if (cfg.grid) return *cfg.grid;
  if (h.auto_grid) return *h.auto_grid;
  throw Error(ErrorKind::RangeError, "no grid given and family '" + h.name + "' has no automatic grid");
}

}  // namespace toda::cli
