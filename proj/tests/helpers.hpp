#pragma once

#include <cmath>
#include <functional>

#include "doctest.h"
#include "giem/errors.hpp"

// True when fn throws giem::Error of the given kind.
inline bool throws_kind(const std::function<void()>& fn, giem::ErrorKind kind) {
  try {
    fn();
  } catch (const giem::Error& e) {
    return e.kind() == kind;
  }
  return false;
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}
