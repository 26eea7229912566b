#include <gtest/gtest.h>

#include <cmath>

#include "toda/field.hpp"
#include "toda/numcore/derivative_field.hpp"
#include "toda/residuals.hpp"

using namespace toda;

namespace {

StencilConfig cfg4(double h = 1e-3) {
  StencilConfig c;
  c.h = h;
  c.order = 4;
  c.relative = false;
  return c;
}

// u = (x+z)/(1-y): the closed form of the linear Monge profile.
ScalarField3 linear_fraction() {
  return ScalarField3([](const Point3& p) { return (p.x + p.z) / (1.0 - p.y); },
                      [](const Point3& p) { return p.x + p.z > 0.0 && p.y < 1.0 - 1e-2; });
}

ScalarField3 z_linear() {
  return ScalarField3([](const Point3& p) { return 2.0 + 3.0 * p.z; },
                      [](const Point3& p) { return p.z > -2.0 / 3.0; });
}

// Closed form of x + z + u y = u^2 (positive branch).
ScalarField3 monge_square_closed() {
  return ScalarField3(
      [](const Point3& p) { return 0.5 * (p.y + std::sqrt(p.y * p.y + 4.0 * (p.x + p.z))); },
      [](const Point3& p) { return p.y * p.y + 4.0 * (p.x + p.z) > 0.1; });
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;  // sentinel: nothing thrown
}

}  // namespace

TEST(TodaResidual, Examples) {
  EXPECT_NEAR(toda_residual(z_linear(), {0.3, 0.2, 0.5}, cfg4()), 0.0, 1e-10);
  // (ln u)_xy = 0 and u_zz = 0 symbolically.
  for (Point3 p : {Point3{1.0, 0.2, 0.5}, Point3{0.4, -0.6, 1.3}})
    EXPECT_NEAR(toda_residual(linear_fraction(), p, cfg4()), 0.0, 1e-8);
  // Hand computation: (ln u)_xy = 0, u_zz = e^0 = 1.
  ScalarField3 e([](const Point3& p) { return std::exp(p.x + p.y + p.z); });
  EXPECT_NEAR(toda_residual(e, {0, 0, 0}, cfg4()), -1.0, 1e-6);
}

TEST(TodaResidual, NonPositiveFieldIsReported) {
  ScalarField3 neg([](const Point3& p) { return p.z; });
  EXPECT_EQ(kind_of([&] { toda_residual(neg, {0, 0, 0.001}, cfg4()); }),
            ErrorKind::NonPositiveField);
}

TEST(System2, Examples) {
  auto [a, b] = system2_residuals(constant_field(1.0), constant_field(4.0), {0.1, 0.2, 0.3}, cfg4());
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
  // Both sides of each equation equal 1/(1-y) for T = u.
  auto [c, d] = system2_residuals(linear_fraction(), linear_fraction(), {1.0, 0.3, 0.2}, cfg4());
  EXPECT_NEAR(c, 0.0, 1e-8);
  EXPECT_NEAR(d, 0.0, 1e-8);
  // Orientation is LHS - RHS: r2 = u_z - T_x = 3 - 0.
  auto [e, f] = system2_residuals(z_linear(), constant_field(0.0), {0.0, 0.0, 0.5}, cfg4());
  EXPECT_NEAR(e, 0.0, 1e-9);
  EXPECT_NEAR(f, 3.0, 1e-9);
}

TEST(System3, Examples) {
  ScalarField3 mirror([](const Point3& p) { return (p.y + p.z) / (1.0 - p.x); });
  auto [a, b] = system3_residuals(constant_field(1.0), constant_field(-2.0), {0.1, 0.2, 0.3}, cfg4());
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
  auto [c, d] = system3_residuals(mirror, mirror, {0.3, 1.0, 0.2}, cfg4());
  EXPECT_NEAR(c, 0.0, 1e-8);
  EXPECT_NEAR(d, 0.0, 1e-8);
  auto [e, f] = system3_residuals(z_linear(), constant_field(0.0), {0.0, 0.0, 0.5}, cfg4());
  EXPECT_NEAR(e, 0.0, 1e-9);
  EXPECT_NEAR(f, 3.0, 1e-9);
}

TEST(Symmetry, Examples) {
  const auto u = linear_fraction();
  EXPECT_EQ(symmetry_residual({u, constant_field(0.0)}, {1.0, 0.3, 0.2}, cfg4()), 0.0);
  ScalarField3 uz([](const Point3& p) { return 1.0 / (1.0 - p.y); });
  EXPECT_NEAR(symmetry_residual({u, uz}, {1.0, 0.3, 0.2}, cfg4()), 0.0, 1e-8);
  const auto ux = derivative_field(u, Axis::x, cfg4(1e-2));
  EXPECT_NEAR(symmetry_residual({u, ux}, {1.0, 0.3, 0.2}, cfg4(1e-2)), 0.0, 1e-8);
}

TEST(Symmetry, PotentialFormForT) {
  // T = u for the linear Monge profile: (u_x/u)_y - u_zz = (1/(x+z))_y - 0.
  const auto u = linear_fraction();
  EXPECT_NEAR(symmetry_potential_residual(u, u, {1.0, 0.3, 0.2}, cfg4(1e-2)), 0.0, 1e-9);
  EXPECT_NEAR(symmetry_potential_residual(u, u, {1.0, 0.3, 0.2}, cfg4(1e-2), Axis::y),
              // (u_y/u)_x - u_zz = (1/(1-y))_x = 0
              0.0, 1e-9);
}

TEST(Theta, Examples) {
  ScalarField3 x([](const Point3& p) { return p.x; });
  ScalarField3 xz([](const Point3& p) { return p.x * p.z; });
  EXPECT_NEAR(theta_residual(x, {0.2, 0.1, 0.3}, cfg4()), 0.0, 1e-12);
  EXPECT_NEAR(theta_residual(xz, {0.2, 0.1, 0.3}, cfg4()), 0.0, 1e-12);
  // theta_yx = (x+z)/(1-y)^2 = 2 at (1,0,1); theta_zz = 0.
  ScalarField3 th([](const Point3& p) { return (0.5 * p.x * p.x + p.z * p.x) / (1.0 - p.y); });
  EXPECT_NEAR(theta_residual(th, {1, 0, 1}, cfg4()), 2.0, 1e-6);
}

TEST(DiscreteChain, ZLinearFamiliesAreExact) {
  ScalarField3 rho1([](const Point3& p) { return std::log(2.0 + 3.0 * p.z); });
  ScalarField3 rho2([](const Point3& p) { return std::log((p.x + p.z) / (1.0 - p.y)); });
  for (double eps : {0.1, 0.05, 0.025}) {
    EXPECT_NEAR(discrete_chain_residual(rho1, {0.1, 0.2, 0.4}, eps, cfg4()), 0.0, 1e-9);
    EXPECT_NEAR(discrete_chain_residual(rho2, {1.0, 0.2, 0.4}, eps, cfg4()), 0.0, 1e-9);
  }
  EXPECT_EQ(kind_of([&] { discrete_chain_residual(rho1, {0, 0, 0}, 0.0, cfg4()); }),
            ErrorKind::RangeError);
}

TEST(DiscreteChain, CurvedFamilyConvergesAtSecondOrder) {
  const auto rho = log_field(monge_square_closed());
  const Point3 p{1.0, 0.3, 0.4};
  auto r = [&](double eps) { return std::abs(discrete_chain_residual(rho, p, eps, cfg4())); };
  const double o1 = observed_order(r(0.1), r(0.05));
  const double o2 = observed_order(r(0.05), r(0.025));
  EXPECT_NEAR(o1, 2.0, 0.2);
  EXPECT_NEAR(o2, 2.0, 0.2);
  // Leading term from Taylor expansion: -eps^2 u_zzzz / 12 (u = e^rho).
  const auto u = monge_square_closed();
  StencilConfig c = cfg4(2e-2);
  const double u4 = second_diff(second_derivative_field(u, Axis::z, c), p, Axis::z, c);
  EXPECT_NEAR(discrete_chain_residual(rho, p, 0.025, cfg4()) / (0.025 * 0.025), -u4 / 12.0,
              2e-2 * std::abs(u4));
}

TEST(ResidualReport, Examples) {
  const auto g5 = Grid3::span({0, 0, 0}, {1, 1, 1}, {5, 5, 5});
  const auto rep = residual_report(z_linear(), g5, cfg4(), ResidualKind::Toda);
  EXPECT_LT(rep.max_abs, 1e-9);
  EXPECT_EQ(rep.n_skipped, 0u);
  EXPECT_EQ(rep.n_points, 125u);
  EXPECT_LE(rep.rms, rep.max_abs);

  // Straddles y = 1; the predicate removes the singular band.
  const auto g = Grid3::span({0.5, 0.5, 0.0}, {1.5, 1.5, 1.0}, {5, 9, 5});
  const auto rep2 = residual_report(linear_fraction(), g, cfg4(), ResidualKind::Toda);
  EXPECT_GT(rep2.n_skipped, 0u);
  EXPECT_EQ(rep2.n_points + rep2.n_skipped, g.total());
  EXPECT_TRUE(std::isfinite(rep2.max_abs));

  ScalarField3 nowhere([](const Point3&) { return 1.0; }, [](const Point3&) { return false; });
  EXPECT_EQ(kind_of([&] { residual_report(nowhere, g5, cfg4(), ResidualKind::Toda); }),
            ErrorKind::AllPointsSkipped);
}

TEST(ResidualReport, DeterministicAcrossThreadCounts) {
  const auto g = Grid3::span({0.5, -0.4, 0.0}, {1.5, 0.4, 1.0}, {7, 7, 7});
  const auto u = monge_square_closed();
  const auto a = residual_report(u, g, cfg4(), ResidualKind::Toda, 1);
  const auto b = residual_report(u, g, cfg4(), ResidualKind::Toda, 4);
  EXPECT_EQ(a.max_abs, b.max_abs);
  EXPECT_EQ(a.rms, b.rms);
  EXPECT_EQ(a.worst_point, b.worst_point);
}

TEST(ConvergenceOrder, Examples) {
  ScalarField3 s([](const Point3& p) { return std::sin(p.x) * std::cos(p.y); });
  const Point3 p{0.3, 0.2, 0.0};
  StencilConfig c2 = cfg4();
  c2.order = 2;
  EXPECT_NEAR(convergence_order([&](double h) { return mixed_diff_xy(s, p, c2.with_h(h)); },
                                {0.04, 0.02, 0.01}),
              2.0, 0.1);
  EXPECT_NEAR(convergence_order([&](double h) { return mixed_diff_xy(s, p, cfg4(h)); },
                                {0.08, 0.04, 0.02}),
              4.0, 0.2);
  // Exact polynomial case: the values do not move with h.
  EXPECT_EQ(kind_of([&] {
              convergence_order(
                  [&](double h) { return toda_residual(z_linear(), {0, 0, 0.3}, cfg4(h)); },
                  {0.1, 0.05, 0.025});
            }),
            ErrorKind::ZeroResidual);
  EXPECT_EQ(kind_of([&] { convergence_order([](double h) { return h; }, {0.1, 0.06, 0.03}); }),
            ErrorKind::RangeError);
}

TEST(Properties, ScalingCovariance) {
  // If u solves the equation then v(x,y,z) = u(lx, y, lz)/l does too, and for
  // any field the residuals relate by r_v(p) = l * r_u(lx, y, lz).
  const double l = 2.0;
  auto rescale = [l](const ScalarField3& u) {
    return ScalarField3([u, l](const Point3& p) { return u({l * p.x, p.y, l * p.z}) / l; });
  };
  ScalarField3 generic([](const Point3& p) { return 2.0 + std::sin(p.x) * std::exp(0.3 * p.y) + 0.2 * p.z * p.z; });
  const Point3 p{0.2, 0.1, 0.3};
  const Point3 q{l * p.x, p.y, l * p.z};
  EXPECT_NEAR(toda_residual(rescale(generic), p, cfg4()), l * toda_residual(generic, q, cfg4()), 1e-7);
  EXPECT_NEAR(toda_residual(rescale(monge_square_closed()), {0.5, 0.3, 0.2}, cfg4()), 0.0, 1e-8);
  EXPECT_NEAR(toda_residual(rescale(linear_fraction()), {0.5, 0.3, 0.2}, cfg4()), 0.0, 1e-8);
}

TEST(Properties, SystemResidualsBoundToda) {
  // Toda = d_x r1 - d_z r2, so perturbing a solution moves both together.
  const auto g = Grid3::span({0.8, -0.3, 0.1}, {1.6, 0.3, 0.7}, {5, 5, 5});
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto base = monge_square_closed();
    ScalarField3 u([base, eps](const Point3& p) { return base(p) + eps * std::sin(p.x + 2.0 * p.z) * std::cos(p.y); });
    double toda_max = 0.0, sys_max = 0.0;
    for (std::size_t i = 0; i < g.total(); ++i) {
      const Point3 p = g.point(i);
      toda_max = std::max(toda_max, std::abs(toda_residual(u, p, cfg4())));
      auto [r1, r2] = system2_residuals(u, u, p, cfg4());
      sys_max = std::max({sys_max, std::abs(r1), std::abs(r2)});
    }
    EXPECT_LE(toda_max, 20.0 * (sys_max + 1e-9));
    EXPECT_GT(sys_max, 0.1 * eps);
  }
}
