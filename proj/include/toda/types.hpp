#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "toda/error.hpp"

namespace toda {

enum class Axis { x = 0, y = 1, z = 2 };

inline const char* to_string(Axis a) noexcept {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](Axis a) const noexcept {
    return a == Axis::x ? x : (a == Axis::y ? y : z);
  }
  double& operator[](Axis a) noexcept {
    return a == Axis::x ? x : (a == Axis::y ? y : z);
  }
  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  friend bool operator==(const Point3&, const Point3&) = default;
};

inline Point3 shifted(Point3 p, Axis a, double d) noexcept {
  p[a] += d;
  return p;
}

/// Regular lattice origin + (i*hx, j*hy, k*hz); x varies slowest in flat indexing.
struct Grid3 {
  Point3 origin{};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> counts{1, 1, 1};

  std::size_t total() const noexcept { return counts[0] * counts[1] * counts[2]; }

  Point3 point(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return {origin.x + static_cast<double>(i) * spacing[0],
            origin.y + static_cast<double>(j) * spacing[1],
            origin.z + static_cast<double>(k) * spacing[2]};
  }

  std::size_t flat(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return (i * counts[1] + j) * counts[2] + k;
  }

  Point3 point(std::size_t flat_index) const noexcept {
    const std::size_t k = flat_index % counts[2];
    const std::size_t j = (flat_index / counts[2]) % counts[1];
    const std::size_t i = flat_index / (counts[2] * counts[1]);
    return point(i, j, k);
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw Error(ErrorKind::RangeError, "grid spacing must be positive and finite");
      if (counts[a] < 1) throw Error(ErrorKind::RangeError, "grid counts must be >= 1");
    }
    if (!origin.finite()) throw Error(ErrorKind::RangeError, "grid origin must be finite");
  }

  /// Builds the grid spanning [lo, hi] per axis with n points; n == 1 pins the axis at lo.
  static Grid3 span(std::array<double, 3> lo, std::array<double, 3> hi,
                    std::array<std::size_t, 3> n) {
    Grid3 g;
    g.origin = {lo[0], lo[1], lo[2]};
    g.counts = n;
    for (int a = 0; a < 3; ++a) {
      if (n[a] < 1) throw Error(ErrorKind::RangeError, "grid counts must be >= 1");
      g.spacing[a] = n[a] > 1 ? (hi[a] - lo[a]) / static_cast<double>(n[a] - 1) : 1.0;
    }
    g.validate();
    return g;
  }
};

/// Finite-difference settings. With `relative` set, the step on an axis is
/// h * max(1, |coordinate|).
struct StencilConfig {
  double h = 1e-4;
  int order = 2;
  int richardson_levels = 0;
  bool relative = true;

  double step(const Point3& p, Axis a) const noexcept {
    return relative ? h * std::max(1.0, std::abs(p[a])) : h;
  }

  StencilConfig with_h(double new_h) const noexcept {
    StencilConfig c = *this;
    c.h = new_h;
    return c;
  }

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::RangeError, "stencil h must be > 0");
    if (order != 2 && order != 4) throw Error(ErrorKind::RangeError, "stencil order must be 2 or 4");
    if (richardson_levels < 0) throw Error(ErrorKind::RangeError, "richardson_levels must be >= 0");
  }
};

}  // namespace toda
