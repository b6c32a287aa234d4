#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace physarum {

enum class ErrorCode {
  // instance
  RankDeficient,
  NonPositiveCost,
  DimensionMismatch,
  EmptyEdgeSet,
  DisconnectedGraph,
  GenerationFailed,
  InvalidInstanceFile,
  // minenergy
  SingularSystem,
  NonFiniteInput,
  // dynamics
  ReactivityBoundViolated,
  NonPositiveReactivity,
  InvalidSpec,
  // integrate
  StepSizeUnderflow,
  InvalidConfig,
  // lyapunov
  NonPositiveBound,
  // oracle
  TooLarge,
  Infeasible,
  NotCertified,
  // experiments
  UnknownPreset,
  // generic
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Domain error carrying one of the named error codes. what() is prefixed
/// with the code name so CLI messages surface it directly.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace physarum
