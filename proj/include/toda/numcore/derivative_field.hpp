#pragma once

#include "toda/field.hpp"
#include "toda/numcore/diff.hpp"

namespace toda {

/// The field p -> d f/d axis (p), evaluated by finite differences with its own
/// stencil. Stencil points outside f's domain surface as DomainViolation.
inline ScalarField3 derivative_field(const ScalarField3& f, Axis axis, const StencilConfig& cfg) {
  return ScalarField3([f, axis, cfg](const Point3& p) { return central_diff(f, p, axis, cfg); },
                      f.domain());
}

inline ScalarField3 second_derivative_field(const ScalarField3& f, Axis axis,
                                            const StencilConfig& cfg) {
  return ScalarField3([f, axis, cfg](const Point3& p) { return second_diff(f, p, axis, cfg); },
                      f.domain());
}

}  // namespace toda
