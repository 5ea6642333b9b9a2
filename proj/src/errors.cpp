#include "giem/errors.hpp"

namespace giem {

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainViolation: return "domain-violation";
    case ErrorKind::DegenerateInterval: return "degenerate-interval";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::TilingGap: return "tiling-gap";
    case ErrorKind::NonMonotoneBranch: return "non-monotone-branch";
    case ErrorKind::ReduciblePerm: return "reducible-perm";
    case ErrorKind::IncompatibleLengths: return "incompatible-lengths";
    case ErrorKind::NotInvertible: return "not-invertible";
    case ErrorKind::NoSignChange: return "no-sign-change";
    case ErrorKind::ConnectionSuspected: return "connection-suspected";
    case ErrorKind::PrecisionExhausted: return "precision-exhausted";
    case ErrorKind::OrbitLeftDomain: return "orbit-left-domain";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::MaxIterations: return "max-iterations";
    case ErrorKind::BoundaryPoint: return "boundary-point";
    case ErrorKind::InadmissibleWord: return "inadmissible-word";
    case ErrorKind::NoValidPairs: return "no-valid-pairs";
    case ErrorKind::WindowTooShort: return "window-too-short";
    case ErrorKind::TooManyDiscontinuities: return "too-many-discontinuities";
    case ErrorKind::CorrespondenceMismatch: return "correspondence-mismatch";
    case ErrorKind::LemmaCounterexample: return "lemma-counterexample";
    case ErrorKind::ConfigParse: return "config-parse";
  }
  return "unknown";
}

}  // namespace giem
