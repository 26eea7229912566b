#pragma once

// Chain alpha_n, ..., alpha_0 built from a sampled u by
// alpha_{m-1} = int dy (u^{m+1} alpha_m)_z / ((m+1) u^m), with alpha_{n_top} = 1,
// plus the consistency, consolidated-PDE and theta relations that go with it.

#include <cmath>
#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "toda/error.hpp"
#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/parallel.hpp"
#include "toda/numcore/quadrature.hpp"
#include "toda/residuals.hpp"
#include "toda/types.hpp"

namespace toda::recurrence {

/// Values of a field on the nodes of a Grid3 (same flat order).
struct GridField {
  Grid3 grid;
  std::vector<double> values;

  GridField() = default;
  GridField(Grid3 g, double fill) : grid(std::move(g)), values(grid.total(), fill) {}

  double& at(std::size_t i, std::size_t j, std::size_t k) { return values[grid.flat(i, j, k)]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[grid.flat(i, j, k)]; }

  static GridField sample(const ScalarField3& f, const Grid3& g, unsigned threads = 1) {
    g.validate();
    GridField out(g, 0.0);
    parallel_for(g.total(), threads, [&](std::size_t n) { out.values[n] = f(g.point(n)); });
    return out;
  }

  /// Node lookup: the indices of p if it lies on a node (to 1e-9 spacing).
  std::array<std::size_t, 3> node_of(const Point3& p) const {
    std::array<std::size_t, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      const double o = grid.origin[static_cast<Axis>(a)];
      const double t = (p[static_cast<Axis>(a)] - o) / grid.spacing[a];
      const double r = std::round(t);
      if (std::abs(t - r) > 1e-9 || r < 0 || r >= static_cast<double>(grid.counts[a]))
        throw Error(ErrorKind::DomainViolation, "point is not a grid node");
      idx[a] = static_cast<std::size_t>(r);
    }
    return idx;
  }

  /// A field defined on the grid nodes only.
  ScalarField3 as_field() const {
    auto self = std::make_shared<GridField>(*this);
    return ScalarField3([self](const Point3& p) {
      const auto n = self->node_of(p);
      return self->at(n[0], n[1], n[2]);
    });
  }
};

namespace detail {

inline std::size_t& idx_of(std::array<std::size_t, 3>& ijk, Axis a) {
  return ijk[static_cast<int>(a)];
}

}  // namespace detail

/// d f / d axis on every node: fourth-order central differences inside,
/// fourth-order one-sided formulas on the two outer layers.
inline GridField grid_derivative(const GridField& f, Axis axis) {
  const Grid3& g = f.grid;
  const int a = static_cast<int>(axis);
  const std::size_t n = g.counts[a];
  if (n < 5) throw Error(ErrorKind::TooFewSamples, "grid derivative needs >= 5 points on the axis");
  const double h = g.spacing[a];
  GridField out(g, 0.0);
  for (std::size_t flat = 0; flat < g.total(); ++flat) {
    std::array<std::size_t, 3> ijk{flat / (g.counts[2] * g.counts[1]), (flat / g.counts[2]) % g.counts[1],
                                   flat % g.counts[2]};
    const std::size_t m = ijk[a];
    auto v = [&](std::ptrdiff_t off) {
      auto q = ijk;
      detail::idx_of(q, axis) = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(m) + off);
      return f.at(q[0], q[1], q[2]);
    };
    double d;
    if (m >= 2 && m + 2 < n) {
      d = (8.0 * (v(1) - v(-1)) - (v(2) - v(-2))) / (12.0 * h);
    } else if (m == 0) {
      d = (-25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4)) / (12.0 * h);
    } else if (m == 1) {
      d = (-3.0 * v(-1) - 10.0 * v(0) + 18.0 * v(1) - 6.0 * v(2) + v(3)) / (12.0 * h);
    } else if (m + 1 == n) {
      d = (25.0 * v(0) - 48.0 * v(-1) + 36.0 * v(-2) - 16.0 * v(-3) + 3.0 * v(-4)) / (12.0 * h);
    } else {
      d = (3.0 * v(1) + 10.0 * v(0) - 18.0 * v(-1) + 6.0 * v(-2) - v(-3)) / (12.0 * h);
    }
    out.values[flat] = d;
  }
  return out;
}

template <class Op>
GridField combine(const GridField& a, const GridField& b, Op op) {
  GridField out(a.grid, 0.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = op(a.values[i], b.values[i]);
  return out;
}

/// Integral along y of each (x, z) column with value base(i, k) at plane j0.
inline GridField integrate_y(const GridField& f, std::size_t j0,
                             const std::function<double(std::size_t, std::size_t)>& base,
                             unsigned threads = 1) {
  const Grid3& g = f.grid;
  const std::size_t ny = g.counts[1];
  if (ny < 2) throw Error(ErrorKind::TooFewSamples, "y integration needs >= 2 samples");
  GridField out(g, 0.0);
  const double hy = g.spacing[1];
  parallel_for(g.counts[0] * g.counts[2], threads, [&](std::size_t col) {
    const std::size_t i = col / g.counts[2], k = col % g.counts[2];
    const double c0 = base ? base(i, k) : 0.0;
    out.at(i, j0, k) = c0;
    if (j0 + 1 < ny) {
      std::vector<double> fwd;
      for (std::size_t j = j0; j < ny; ++j) fwd.push_back(f.at(i, j, k));
      const auto F = cumulative_integral_y(fwd, hy);
      for (std::size_t j = 1; j < F.size(); ++j) out.at(i, j0 + j, k) = c0 + F[j];
    }
    if (j0 > 0) {
      std::vector<double> bwd;
      for (std::size_t j = j0 + 1; j-- > 0;) bwd.push_back(f.at(i, j, k));
      const auto F = cumulative_integral_y(bwd, hy);
      for (std::size_t j = 1; j < F.size(); ++j) out.at(i, j0 - j, k) = c0 - F[j];
    }
  });
  return out;
}

struct AlphaChain {
  int n_top = 0;
  double y0 = 0.0;
  std::vector<GridField> levels;  // levels[m] holds alpha_m

  const GridField& alpha(int m) const {
    if (m < 0 || m > n_top) throw Error(ErrorKind::RangeError, "chain level out of range");
    return levels[static_cast<std::size_t>(m)];
  }
};

/// Integration constants at the base plane per level (default 0).
using BaseData = std::function<double(int level, const Point3& p)>;

inline std::size_t base_plane_index(const Grid3& g, double y0) {
  const double t = (y0 - g.origin.y) / g.spacing[1];
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9 || r < 0 || r >= static_cast<double>(g.counts[1]))
    throw Error(ErrorKind::RangeError, "base plane y0 is not a grid plane");
  return static_cast<std::size_t>(r);
}

inline AlphaChain alpha_chain(const GridField& u, int n_top, double y0, const BaseData& base = {},
                              unsigned threads = 1) {
  if (n_top < 0) throw Error(ErrorKind::RangeError, "n_top must be >= 0");
  for (double v : u.values)
    if (!(v > kPositivityFloor)) throw Error(ErrorKind::NonPositiveField, "u <= 0 on the grid");
  const std::size_t j0 = base_plane_index(u.grid, y0);
  AlphaChain chain;
  chain.n_top = n_top;
  chain.y0 = y0;
  chain.levels.assign(static_cast<std::size_t>(n_top) + 1, GridField(u.grid, 0.0));
  chain.levels[n_top] = GridField(u.grid, 1.0);
  if (n_top > 0 && u.grid.counts[2] < 5)
    throw Error(ErrorKind::TooFewSamples, "chain needs n_z >= 5");
  for (int m = n_top; m >= 1; --m) {
    const GridField& am = chain.levels[m];
    GridField prod(u.grid, 0.0);
    for (std::size_t n = 0; n < prod.values.size(); ++n)
      prod.values[n] = std::pow(u.values[n], m + 1) * am.values[n];
    const GridField dz = grid_derivative(prod, Axis::z);
    GridField integrand(u.grid, 0.0);
    for (std::size_t n = 0; n < prod.values.size(); ++n)
      integrand.values[n] = dz.values[n] / ((m + 1) * std::pow(u.values[n], m));
    std::function<double(std::size_t, std::size_t)> b;
    if (base) b = [&, m](std::size_t i, std::size_t k) { return base(m - 1, u.grid.point(i, j0, k)); };
    chain.levels[m - 1] = integrate_y(integrand, j0, b, threads);
  }
  return chain;
}

/// Grid version of the consistency residual
/// (u^{m+1} alpha_m)_x / u^{m+1} - (m+1) (alpha_{m-1})_z.
inline GridField alpha_consistency_grid(const GridField& u, const AlphaChain& chain, int m) {
  if (m < 1 || m > chain.n_top) throw Error(ErrorKind::RangeError, "consistency level out of range");
  const GridField& am = chain.alpha(m);
  GridField prod(u.grid, 0.0);
  for (std::size_t n = 0; n < prod.values.size(); ++n)
    prod.values[n] = std::pow(u.values[n], m + 1) * am.values[n];
  const GridField px = grid_derivative(prod, Axis::x);
  const GridField dz = grid_derivative(chain.alpha(m - 1), Axis::z);
  GridField out(u.grid, 0.0);
  for (std::size_t n = 0; n < out.values.size(); ++n)
    out.values[n] = px.values[n] / std::pow(u.values[n], m + 1) - (m + 1) * dz.values[n];
  return out;
}

/// Residual report over the interior (margin 2 on every axis with at least
/// five points); margin nodes are counted as skipped.
inline ResidualReport grid_report(const std::string& family, const std::string& kind,
                                  const GridField& r, std::size_t margin = 2) {
  const Grid3& g = r.grid;
  auto interior = [&](const std::array<std::size_t, 3>& ijk) {
    for (int a = 0; a < 3; ++a) {
      if (g.counts[a] < 2 * margin + 1) continue;
      if (ijk[a] < margin || ijk[a] + margin >= g.counts[a]) return false;
    }
    return true;
  };
  StencilConfig cfg;
  cfg.h = g.spacing[0];
  cfg.order = 4;
  cfg.relative = false;
  return residual_report(
      family, kind,
      [&](const Point3& p) {
        const auto ijk = r.node_of(p);
        if (!interior(ijk)) throw Error(ErrorKind::DomainViolation, "boundary margin");
        return r.at(ijk[0], ijk[1], ijk[2]);
      },
      g, cfg, 1);
}

/// Pointwise consistency residual on continuous fields.
inline double alpha_consistency(const ScalarField3& u, const ScalarField3& alpha_m,
                                const ScalarField3& alpha_m1, int m, const Point3& p,
                                const StencilConfig& cfg) {
  auto prod = [&](const Point3& q) { return std::pow(u(q), m + 1) * alpha_m(q); };
  const double up = u(p);
  if (!(up > kPositivityFloor)) throw Error(ErrorKind::NonPositiveField, "u <= 0");
  return central_diff(prod, p, Axis::x, cfg) / std::pow(up, m + 1) -
         (m + 1) * central_diff(alpha_m1, p, Axis::z, cfg);
}

/// (u^{n+2} alpha_z)_z - (u^{n+1} alpha_y)_x.
inline double alpha_pde_residual(const ScalarField3& u, const ScalarField3& alpha, int n,
                                 const Point3& p, const StencilConfig& cfg) {
  auto lhs = [&](const Point3& q) { return std::pow(u(q), n + 2) * central_diff(alpha, q, Axis::z, cfg); };
  auto rhs = [&](const Point3& q) { return std::pow(u(q), n + 1) * central_diff(alpha, q, Axis::y, cfg); };
  return central_diff(lhs, p, Axis::z, cfg) - central_diff(rhs, p, Axis::x, cfg);
}

/// theta_y - theta_z^2 / 2 - u^2 alpha_1 / 2.
inline double theta_relation_residual(const ScalarField3& theta, const ScalarField3& u,
                                      const ScalarField3& alpha1, const Point3& p,
                                      const StencilConfig& cfg) {
  const double tz = central_diff(theta, p, Axis::z, cfg);
  const double up = u(p);
  return central_diff(theta, p, Axis::y, cfg) - 0.5 * tz * tz - 0.5 * up * up * alpha1(p);
}

struct TFromChain {
  GridField T;
  ResidualReport symmetry;
};

/// T = u alpha_0 and the potential form (T_x/u)_y - T_zz of the symmetry
/// equation on the grid interior.
inline TFromChain T_from_chain(const GridField& u, const AlphaChain& chain) {
  GridField T = combine(u, chain.alpha(0), [](double a, double b) { return a * b; });
  const GridField Tx = grid_derivative(T, Axis::x);
  const GridField q = combine(Tx, u, [](double a, double b) { return a / b; });
  const GridField qy = grid_derivative(q, Axis::y);
  const GridField Tzz = grid_derivative(grid_derivative(T, Axis::z), Axis::z);
  const GridField r = combine(qy, Tzz, [](double a, double b) { return a - b; });
  return {T, grid_report("recurrence", "symmetry_T", r)};
}

struct Coherence {
  double residual = 0.0;  // max |consistency| on the fine grid at shared nodes
  double budget = 0.0;    // max |fine - coarse| there, plus 1e-10
  bool coherent = false;
};

/// Compares the consistency residuals (all levels) on `fine` and on the grid
/// with doubled spacing. A residual that is pure discretization error shrinks
/// under refinement and stays within the fine/coarse difference.
inline Coherence truncation_coherence(const ScalarField3& u, const Grid3& fine, int n_top,
                                      double y0, const BaseData& base = {}, unsigned threads = 1) {
  if (n_top < 1) throw Error(ErrorKind::RangeError, "coherence needs n_top >= 1");
  Grid3 coarse = fine;
  for (int a = 0; a < 3; ++a) {
    if (fine.counts[a] % 2 == 0) throw Error(ErrorKind::RangeError, "fine grid counts must be odd");
    if (fine.counts[a] < 9)
      throw Error(ErrorKind::TooFewSamples, "coherence needs >= 9 points per axis (coarse grid >= 5)");
    coarse.spacing[a] = 2.0 * fine.spacing[a];
    coarse.counts[a] = (fine.counts[a] + 1) / 2;
  }
  auto residuals = [&](const Grid3& g) {
    const GridField us = GridField::sample(u, g, threads);
    const AlphaChain chain = alpha_chain(us, n_top, y0, base, threads);
    GridField worst(g, 0.0);
    for (int m = 1; m <= n_top; ++m) {
      const GridField r = alpha_consistency_grid(us, chain, m);
      for (std::size_t n = 0; n < r.values.size(); ++n)
        if (std::abs(r.values[n]) > std::abs(worst.values[n])) worst.values[n] = r.values[n];
    }
    return worst;
  };
  const GridField rf = residuals(fine), rc = residuals(coarse);
  Coherence out;
  for (std::size_t i = 2; i + 2 < coarse.counts[0]; ++i)
    for (std::size_t j = 0; j < coarse.counts[1]; ++j)
      for (std::size_t k = 2; k + 2 < coarse.counts[2]; ++k) {
        const double f = rf.at(2 * i, 2 * j, 2 * k), c = rc.at(i, j, k);
        out.residual = std::max(out.residual, std::abs(f));
        out.budget = std::max(out.budget, std::abs(f - c));
      }
  out.budget += 1e-10;
  out.coherent = out.residual <= out.budget;
  return out;
}

}  // namespace toda::recurrence
