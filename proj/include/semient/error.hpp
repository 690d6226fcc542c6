#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semient {

/// One iteration of an outer solver.
struct TraceRecord {
  int k = 0;
  double gamma = 0.0;
  double h_g = 0.0;
  double h_p = 0.0;
};

/// Ordered iteration records; AEM seeds two points so indices start at -1.
using ConvergenceTrace = std::vector<TraceRecord>;

enum class ErrorKind {
  Domain,
  NoSignChange,
  MaxIterations,
  SingularJacobian,
  InfeasibleIterate,
  InfeasibleConstraints,
  DegenerateStep,
  OscillationDetected,
  AllZeros,
  NonNegativityViolation,
  ZeroTruth,
  Io,
  Parse,
  NegativeValue,
};

inline constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "Domain";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::InfeasibleIterate: return "InfeasibleIterate";
    case ErrorKind::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorKind::DegenerateStep: return "DegenerateStep";
    case ErrorKind::OscillationDetected: return "OscillationDetected";
    case ErrorKind::AllZeros: return "AllZeros";
    case ErrorKind::NonNegativityViolation: return "NonNegativityViolation";
    case ErrorKind::ZeroTruth: return "ZeroTruth";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::NegativeValue: return "NegativeValue";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this type. Iterative
/// solvers attach the partial trace so callers can inspect non-convergence.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  Error(ErrorKind kind, const std::string& what, ConvergenceTrace trace)
      : Error(kind, what) {
    trace_ = std::move(trace);
  }

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::optional<ConvergenceTrace>& trace() const noexcept { return trace_; }

 private:
  ErrorKind kind_;
  std::optional<ConvergenceTrace> trace_;
};

}  // namespace semient
