#pragma once

#include <stdexcept>
#include <string>

namespace toda {

enum class ErrorKind {
  DomainViolation,
  NonFinite,
  NonPositiveField,
  NoBracket,
  NoConvergence,
  SingularJacobian,
  SingularMatrix,
  CausticSingular,
  SingularPoint,
  StepFailure,
  CompatibilityViolation,
  DivisionByZero,
  TooFewSamples,
  AllPointsSkipped,
  ZeroResidual,
  ParseError,
  UnknownKey,
  RangeError,
  IoError,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonPositiveField: return "NonPositiveField";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::CausticSingular: return "CausticSingular";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::CompatibilityViolation: return "CompatibilityViolation";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::AllPointsSkipped: return "AllPointsSkipped";
    case ErrorKind::ZeroResidual: return "ZeroResidual";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for failures that mean "this point is not usable", as opposed to a broken run.
inline bool is_pointwise_failure(ErrorKind kind) noexcept {
  return kind == ErrorKind::DomainViolation || kind == ErrorKind::NonPositiveField;
}

}  // namespace toda
