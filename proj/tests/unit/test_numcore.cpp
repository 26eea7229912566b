#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"
#include "toda/numcore/newton.hpp"
#include "toda/numcore/quadrature.hpp"
#include "toda/numcore/roots.hpp"
#include "toda/residuals.hpp"

using namespace toda;

namespace {

StencilConfig absolute(double h, int order, int levels = 0) {
  StencilConfig c;
  c.h = h;
  c.order = order;
  c.richardson_levels = levels;
  c.relative = false;
  return c;
}

ScalarField3 field(std::function<double(const Point3&)> f) { return ScalarField3(std::move(f)); }

// Plain bisection, kept independent of solve_scalar_root.
double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double flo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = g(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(CentralDiff, ConstantFieldIsExactlyZero) {
  auto f = field([](const Point3&) { return 7.0; });
  for (int order : {2, 4})
    EXPECT_EQ(central_diff(f, {0.3, -1.0, 2.0}, Axis::x, absolute(0.1, order)), 0.0);
}

TEST(CentralDiff, QuadraticIsExact) {
  auto f = field([](const Point3& p) { return p.x * p.x; });
  EXPECT_NEAR(central_diff(f, {3, 0, 0}, Axis::x, absolute(0.1, 2)), 6.0, 1e-12);
  // Default relative stepping (h scaled by |x| = 3) stays exact on quadratics.
  StencilConfig rel;
  rel.h = 0.1;
  EXPECT_NEAR(central_diff(f, {3, 0, 0}, Axis::x, rel), 6.0, 1e-12);
}

TEST(CentralDiff, SineAtOriginAgainstCosine) {
  auto f = field([](const Point3& p) { return std::sin(p.x); });
  EXPECT_NEAR(central_diff(f, {0, 0, 0}, Axis::x, absolute(1e-3, 2)), std::cos(0.0), 2e-7);
}

TEST(CentralDiff, OutsideDomainIsDomainViolation) {
  ScalarField3 f([](const Point3& p) { return p.x; }, [](const Point3& p) { return p.x < 1.0; });
  try {
    central_diff(f, {0.99, 0, 0}, Axis::x, absolute(0.1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainViolation);
  }
}

TEST(CentralDiff, NonFiniteValueIsReported) {
  auto f = field([](const Point3& p) { return 1.0 / p.x; });
  try {
    central_diff(f, {0.1, 0, 0}, Axis::x, absolute(0.1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(MixedDiff, BilinearAndYIndependent) {
  auto xy = field([](const Point3& p) { return p.x * p.y; });
  auto fx = field([](const Point3& p) { return std::sin(p.x) * std::exp(p.z); });
  for (int order : {2, 4}) {
    EXPECT_NEAR(mixed_diff_xy(xy, {0.4, -2.0, 1.0}, absolute(0.1, order)), 1.0, 1e-12);
    EXPECT_EQ(mixed_diff_xy(fx, {0.4, -2.0, 1.0}, absolute(0.1, order)), 0.0);
  }
}

TEST(MixedDiff, X2Y2AgainstSymbolic) {
  auto f = field([](const Point3& p) { return p.x * p.x * p.y * p.y; });
  // d^2/dxdy (x^2 y^2) = 4xy.
  EXPECT_NEAR(mixed_diff_xy(f, {1, 1, 0}, absolute(1e-3, 2)), 4.0, 1e-6);
}

TEST(SecondDiff, PolynomialsAndExponential) {
  auto z2 = field([](const Point3& p) { return p.z * p.z; });
  auto lin = field([](const Point3& p) { return 3.0 * p.z - 1.0 + p.x; });
  auto ez = field([](const Point3& p) { return std::exp(p.z); });
  for (int order : {2, 4}) {
    EXPECT_NEAR(second_diff(z2, {1, 2, -0.5}, Axis::z, absolute(0.1, order)), 2.0, 1e-11);
    EXPECT_NEAR(second_diff(lin, {1, 2, -0.5}, Axis::z, absolute(0.1, order)), 0.0, 1e-11);
  }
  EXPECT_NEAR(second_diff(ez, {0, 0, 0}, Axis::z, absolute(1e-3, 2)), 1.0, 1e-6);
}

// Smooth non-polynomial suite with analytic derivatives.
struct SmoothCase {
  ScalarField3 f;
  double dx, dzz, dxy;
};

std::vector<SmoothCase> smooth_suite(const Point3& p) {
  std::vector<SmoothCase> s;
  s.push_back({field([](const Point3& q) { return std::sin(q.x) * std::cos(q.y) * std::exp(0.5 * q.z); }),
               std::cos(p.x) * std::cos(p.y) * std::exp(0.5 * p.z),
               0.25 * std::sin(p.x) * std::cos(p.y) * std::exp(0.5 * p.z),
               -std::cos(p.x) * std::sin(p.y) * std::exp(0.5 * p.z)});
  s.push_back({field([](const Point3& q) { return std::log(2.0 + q.x * q.y + q.z * q.z); }), 0, 0, 0});
  const double a = 2.0 + p.x * p.y + p.z * p.z;
  s.back().dx = p.y / a;
  s.back().dzz = 2.0 / a - 4.0 * p.z * p.z / (a * a);
  s.back().dxy = 1.0 / a - p.x * p.y / (a * a);
  s.push_back({field([](const Point3& q) { return std::exp(q.x - 0.3 * q.y) / (1.5 + std::cos(q.z)); }), 0, 0, 0});
  {
    const double e = std::exp(p.x - 0.3 * p.y), c = 1.5 + std::cos(p.z), sn = std::sin(p.z);
    s.back().dx = e / c;
    // d2/dz2 of 1/c: (c*cos z + 2 sin^2 z)/c^3.
    s.back().dzz = e * (c * std::cos(p.z) + 2.0 * sn * sn) / (c * c * c);
    s.back().dxy = -0.3 * e / c;
  }
  return s;
}

TEST(FiniteDifferences, ObservedOrderMatchesStencilOrder) {
  const Point3 p{0.7, 0.4, -0.3};
  for (int order : {2, 4}) {
    const double band = order == 2 ? 0.1 : 0.2;
    const double h0 = order == 2 ? 0.02 : 0.08;
    for (const auto& c : smooth_suite(p)) {
      const double o1 = convergence_order(
          [&](double h) { return central_diff(c.f, p, Axis::x, absolute(h, order)); },
          {h0, h0 / 2, h0 / 4});
      const double o2 = convergence_order(
          [&](double h) { return second_diff(c.f, p, Axis::z, absolute(h, order)); },
          {h0, h0 / 2, h0 / 4});
      const double o3 = convergence_order(
          [&](double h) { return mixed_diff_xy(c.f, p, absolute(h, order)); },
          {h0, h0 / 2, h0 / 4});
      EXPECT_NEAR(o1, order, band);
      EXPECT_NEAR(o2, order, band);
      EXPECT_NEAR(o3, order, band);
    }
  }
}

TEST(FiniteDifferences, RichardsonNeverIncreasesError) {
  const Point3 p{0.7, 0.4, -0.3};
  for (int order : {2, 4}) {
    for (const auto& c : smooth_suite(p)) {
      for (int levels : {1, 2}) {
        const auto base = absolute(0.05, order, 0);
        const auto ext = absolute(0.05, order, levels);
        EXPECT_LE(std::abs(central_diff(c.f, p, Axis::x, ext) - c.dx),
                  std::abs(central_diff(c.f, p, Axis::x, base) - c.dx));
        EXPECT_LE(std::abs(second_diff(c.f, p, Axis::z, ext) - c.dzz),
                  std::abs(second_diff(c.f, p, Axis::z, base) - c.dzz));
        EXPECT_LE(std::abs(mixed_diff_xy(c.f, p, ext) - c.dxy),
                  std::abs(mixed_diff_xy(c.f, p, base) - c.dxy));
      }
    }
  }
}

TEST(ScalarRoot, Examples) {
  EXPECT_NEAR(solve_scalar_root([](double u) { return u - 1.0; }, Guess{0.0}).root, 1.0, 1e-12);
  EXPECT_NEAR(solve_scalar_root([](double u) { return u * u - 4.0; }, Bracket{0.0, 5.0}).root, 2.0,
              1e-12);
  try {
    solve_scalar_root([](double u) { return u * u + 1.0; }, Bracket{0.0, 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoBracket);
  }
}

TEST(ScalarRoot, NonFiniteAndNoConvergence) {
  try {
    solve_scalar_root([](double) { return std::nan(""); }, Guess{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
  RootOptions opt;
  opt.max_iter = 3;
  try {
    solve_scalar_root([](double u) { return std::atan(u - 50.0); }, Guess{0.0}, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
  }
}

TEST(ScalarRoot, BracketModeStaysInsideBracket) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    const double r = d(rng), c = 0.1 + std::abs(d(rng));
    auto g = [&](double u) { return std::tanh(c * (u - r)) + 0.01 * (u - r) * (u - r) * (u - r); };
    const double lo = r - 0.5 - std::abs(d(rng)), hi = r + 0.2 + std::abs(d(rng));
    const auto res = solve_scalar_root(g, Bracket{lo, hi});
    EXPECT_GE(res.root, lo);
    EXPECT_LE(res.root, hi);
    EXPECT_LE(std::abs(g(res.root)), 1e-12);
  }
}

TEST(NewtonNd, Examples) {
  auto g1 = [](const VecN<2>& v) { return VecN<2>{v[0] - 1.0, v[1] - 2.0}; };
  const auto r1 = solve_newton_nd<2>(g1, VecN<2>{0, 0});
  EXPECT_NEAR(r1.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r1.x[1], 2.0, 1e-12);

  auto g2 = [](const VecN<2>& v) { return VecN<2>{v[0] * v[0] - v[1] - 1.0, v[1] - 3.0}; };
  NewtonOptions opt;
  opt.tol = 1e-12;
  const auto r2 = solve_newton_nd<2>(g2, VecN<2>{1.5, 3.0}, opt);
  // Oracle: w from the second equation, then bisection on u^2 - w - 1 = 0.
  const double w = 3.0;
  const double u = bisect([&](double uu) { return uu * uu - w - 1.0; }, 0.0, 10.0);
  EXPECT_NEAR(r2.x[0], u, 1e-10);
  EXPECT_NEAR(r2.x[1], w, 1e-10);
}

TEST(NewtonNd, ZeroJacobianRowIsSingular) {
  auto g = [](const VecN<3>& v) { return VecN<3>{v[0] - 1.0, v[1], 5.0}; };
  try {
    solve_newton_nd<3>(g, VecN<3>{0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularJacobian);
  }
}

TEST(NewtonNd, RoundTripThroughConstructionMaps) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  auto M = [](const VecN<3>& v) {
    return VecN<3>{v[0] + 0.3 * std::sin(v[1]), std::exp(0.2 * v[2]) + v[1],
                   v[2] + 0.1 * v[0] * v[1]};
  };
  NewtonOptions opt;
  opt.tol = 1e-12;
  for (int t = 0; t < 100; ++t) {
    const VecN<3> s{d(rng), d(rng), d(rng)};
    const VecN<3> target = M(s);
    const VecN<3> guess{s[0] + 0.05 * d(rng), s[1] + 0.05 * d(rng), s[2] + 0.05 * d(rng)};
    const auto r = solve_newton_nd<3>(
        [&](const VecN<3>& v) {
          auto m = M(v);
          for (int i = 0; i < 3; ++i) m[i] -= target[i];
          return m;
        },
        guess, opt);
    const auto m = M(r.x);
    for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(m[i] - target[i]), opt.tol);
  }
}

TEST(CumulativeIntegral, Examples) {
  const double hy = 0.1;
  std::vector<double> ones(11, 1.0);
  const auto F1 = cumulative_integral_y(ones, hy);
  for (std::size_t j = 0; j < F1.size(); ++j) EXPECT_NEAR(F1[j], j * hy, 1e-14);

  std::vector<double> lin(11);
  for (std::size_t j = 0; j < lin.size(); ++j) lin[j] = 2.0 * j * hy;
  const auto F2 = cumulative_integral_y(lin, hy);
  for (std::size_t j = 0; j < F2.size(); ++j) EXPECT_NEAR(F2[j], (j * hy) * (j * hy), 1e-14);

  // Cubic integrand: every panel type used here is exact on cubics except
  // the first-interval quadratic fit, so only even/odd >= 2 are checked.
  std::vector<double> cub(9);
  for (std::size_t j = 0; j < cub.size(); ++j) cub[j] = std::pow(j * hy, 3);
  const auto F3 = cumulative_integral_y(cub, hy);
  for (std::size_t j = 2; j < F3.size(); ++j) EXPECT_NEAR(F3[j], std::pow(j * hy, 4) / 4.0, 1e-14);
}

TEST(CumulativeIntegral, ExponentialFourthOrder) {
  auto max_err = [](double hy) {
    const std::size_t n = static_cast<std::size_t>(std::lround(1.0 / hy)) + 1;
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::exp(j * hy);
    const auto F = cumulative_integral_y(f, hy);
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) e = std::max(e, std::abs(F[j] - (std::exp(j * hy) - 1.0)));
    return e;
  };
  const double e1 = max_err(0.1), e2 = max_err(0.05);
  EXPECT_LT(e1, 1e-4 * 0.1);  // O(hy^4) with a modest constant
  EXPECT_GT(std::log2(e1 / e2), 3.5);
}

TEST(CumulativeIntegral, TooFewSamples) {
  std::vector<double> one{1.0};
  try {
    cumulative_integral_y(one, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
  }
  std::vector<double> two{1.0, 3.0};
  EXPECT_NEAR(cumulative_integral_y(two, 0.5)[1], 1.0, 1e-15);
}
