#pragma once

#include <stdexcept>
#include <string>

namespace giem {

enum class ErrorKind {
  DomainViolation,
  DegenerateInterval,
  InvalidArgument,
  TilingGap,
  NonMonotoneBranch,
  ReduciblePerm,
  IncompatibleLengths,
  NotInvertible,
  NoSignChange,
  ConnectionSuspected,
  PrecisionExhausted,
  OrbitLeftDomain,
  BudgetExceeded,
  MaxIterations,
  BoundaryPoint,
  InadmissibleWord,
  NoValidPairs,
  WindowTooShort,
  TooManyDiscontinuities,
  CorrespondenceMismatch,
  LemmaCounterexample,
  ConfigParse,
};

const char* kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Hard failures point at a bug or a violated hypothesis rather than at
  // bad input or exhausted precision.
  bool is_hard() const noexcept {
    return kind_ == ErrorKind::OrbitLeftDomain ||
           kind_ == ErrorKind::CorrespondenceMismatch ||
           kind_ == ErrorKind::LemmaCounterexample;
  }

 private:
  ErrorKind kind_;
};

}  // namespace giem
