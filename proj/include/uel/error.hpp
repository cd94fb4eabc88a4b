#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uel {

enum class ErrorKind {
  invalid_argument,
  constraint_infeasible,
  non_convergence,
  singular_hessian,
  infeasible_lambda,
  zero_variance,
  degenerate_variance,
  dimension_mismatch,
  missing_censor_flags,
  singular_h,
  all_zero_weights,
  invalid_covariance,
  parse_error,
  schema_error,
  empty_group,
  usage_error,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::constraint_infeasible: return "ConstraintInfeasible";
    case ErrorKind::non_convergence: return "NonConvergence";
    case ErrorKind::singular_hessian: return "SingularHessian";
    case ErrorKind::infeasible_lambda: return "InfeasibleLambda";
    case ErrorKind::zero_variance: return "ZeroVariance";
    case ErrorKind::degenerate_variance: return "DegenerateVariance";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::missing_censor_flags: return "MissingCensorFlags";
    case ErrorKind::singular_h: return "SingularH";
    case ErrorKind::all_zero_weights: return "AllZeroWeights";
    case ErrorKind::invalid_covariance: return "InvalidCovariance";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::schema_error: return "SchemaError";
    case ErrorKind::empty_group: return "EmptyGroup";
    case ErrorKind::usage_error: return "UsageError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// callers (the CLI, the simulation harness) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace uel
