// Monge fields against their closed forms, plus Toda residuals on a small grid.
//   F(u) = u   : u = (x + z)/(1 - y)
//   F(u) = u^2 : u = (y + sqrt(y^2 + 4(x + z)))/2

#include <cmath>
#include <cstdio>

#include "toda/families/monge.hpp"
#include "toda/residuals.hpp"

using namespace toda;

int main() {
  const auto lin = monge::monge_field(monge::linear_profile(0.0, 1.0), monge::MongeVariant::A);
  const auto sq = monge::monge_field(monge::square_profile(), monge::MongeVariant::A);

  std::printf("%6s %6s %6s | %12s %12s | %12s %12s\n", "x", "y", "z", "u (F=u)", "closed", "u (F=u^2)", "closed");
  for (double x : {1.0, 1.5, 2.0})
    for (double y : {0.2, 0.5})
      for (double z : {0.5, 1.0}) {
        const Point3 p{x, y, z};
        std::printf("%6.2f %6.2f %6.2f | %12.9f %12.9f | %12.9f %12.9f\n", x, y, z, lin(p),
                    (x + z) / (1.0 - y), sq(p), 0.5 * (y + std::sqrt(y * y + 4.0 * (x + z))));
      }

  StencilConfig cfg;
  cfg.h = 1e-3;
  cfg.order = 4;
  const Grid3 g = Grid3::span({1.0, 0.2, 0.5}, {2.0, 0.5, 1.0}, {11, 11, 11});
  for (auto [name, u] : {std::pair{"F=u", lin}, std::pair{"F=u^2", sq}}) {
    const auto r = residual_report(u, g, cfg, ResidualKind::Toda, 4, name);
    std::printf("%-6s toda max_abs %.3e rms %.3e (%zu points)\n", name, r.max_abs, r.rms, r.n_points);
  }
  return 0;
}
