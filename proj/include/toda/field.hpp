#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "toda/error.hpp"
#include "toda/types.hpp"

namespace toda {

/// A real-valued function of (x, y, z) with an optional domain predicate.
/// Evaluation outside the domain throws DomainViolation; a non-finite value
/// throws NonFinite. Copies share the underlying callables, which must be
/// safe to call concurrently.
class ScalarField3 {
 public:
  using Eval = std::function<double(const Point3&)>;
  using Domain = std::function<bool(const Point3&)>;

  ScalarField3() = default;
  explicit ScalarField3(Eval eval, Domain domain = {})
      : eval_(std::make_shared<Eval>(std::move(eval))),
        domain_(domain ? std::make_shared<Domain>(std::move(domain)) : nullptr) {}

  bool valid() const noexcept { return static_cast<bool>(eval_); }

  bool in_domain(const Point3& p) const { return !domain_ || (*domain_)(p); }

  double operator()(const Point3& p) const {
    if (!eval_) throw Error(ErrorKind::DomainViolation, "empty field");
    if (!in_domain(p)) throw Error(ErrorKind::DomainViolation, "point outside field domain");
    const double v = (*eval_)(p);
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "field returned a non-finite value");
    return v;
  }

  /// The domain predicate alone (always-true when none was given).
  Domain domain() const {
    if (!domain_) return [](const Point3&) { return true; };
    auto d = domain_;
    return [d](const Point3& p) { return (*d)(p); };
  }

 private:
  std::shared_ptr<const Eval> eval_;
  std::shared_ptr<const Domain> domain_;
};

/// Smallest value of u accepted as positive before taking ln u.
inline constexpr double kPositivityFloor = 1e-300;

inline ScalarField3 constant_field(double c) {
  return ScalarField3([c](const Point3&) { return c; });
}

/// ln u, raising NonPositiveField where u <= 1e-300.
inline ScalarField3 log_field(const ScalarField3& u) {
  return ScalarField3(
      [u](const Point3& p) {
        const double v = u(p);
        if (v <= kPositivityFloor) throw Error(ErrorKind::NonPositiveField, "u <= 0 on stencil");
        return std::log(v);
      },
      u.domain());
}

/// u itself, raising NonPositiveField where u <= 1e-300.
inline ScalarField3 positive_field(const ScalarField3& u) {
  return ScalarField3(
      [u](const Point3& p) {
        const double v = u(p);
        if (v <= kPositivityFloor) throw Error(ErrorKind::NonPositiveField, "u <= 0 on stencil");
        return v;
      },
      u.domain());
}

/// exp(rho), the u of a log-field rho.
inline ScalarField3 exp_field(const ScalarField3& rho) {
  return ScalarField3([rho](const Point3& p) { return std::exp(rho(p)); }, rho.domain());
}

/// Pointwise binary combination; the domain is the intersection.
template <class Op>
ScalarField3 combine(const ScalarField3& a, const ScalarField3& b, Op op) {
  auto da = a.domain();
  auto db = b.domain();
  return ScalarField3([a, b, op](const Point3& p) { return op(a(p), b(p)); },
                      [da, db](const Point3& p) { return da(p) && db(p); });
}

inline ScalarField3 operator*(const ScalarField3& a, const ScalarField3& b) {
  return combine(a, b, std::multiplies<>{});
}
inline ScalarField3 operator/(const ScalarField3& a, const ScalarField3& b) {
  return combine(a, b, std::divides<>{});
}
inline ScalarField3 operator+(const ScalarField3& a, const ScalarField3& b) {
  return combine(a, b, std::plus<>{});
}

inline ScalarField3 scaled(const ScalarField3& a, double s) {
  return ScalarField3([a, s](const Point3& p) { return s * a(p); }, a.domain());
}

}  // namespace toda
