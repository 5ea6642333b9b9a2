#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace giem {

// Runtime-precision MPFR float. Expression templates are off so that
// `auto` and std::min/std::max behave as with built-in floats.
using Extended = boost::multiprecision::number<
    boost::multiprecision::mpfr_float_backend<0>,
    boost::multiprecision::et_off>;

// Sets the working precision of Extended values created afterwards. The
// precision is kept in decimal digits, rounded up, so extended_bits() may
// report a few bits more than requested; feeding it back is stable.
void set_extended_bits(int bits);
int extended_bits();

template <class Real>
inline Real epsilon() {
  return std::numeric_limits<Real>::epsilon();
}

template <class Real>
inline Real pi() {
  return boost::math::constants::pi<Real>();
}
// MPFR recomputes pi on every request; keep one copy per precision.
template <>
inline Extended pi<Extended>() {
  thread_local unsigned digits = 0;
  thread_local Extended value;
  if (digits != Extended::default_precision()) {
    digits = Extended::default_precision();
    value = boost::math::constants::pi<Extended>();
  }
  return value;
}

template <class Real>
inline Real golden() {
  using std::sqrt;
  return (sqrt(Real(5)) - 1) / 2;
}

template <class Real>
inline Real expm1(const Real& x) {
  return boost::math::expm1(x);
}
template <>
inline double expm1(const double& x) {
  return std::expm1(x);
}

template <class Real>
inline Real log1p(const Real& x) {
  return boost::math::log1p(x);
}
template <>
inline double log1p(const double& x) {
  return std::log1p(x);
}

template <class Real>
inline double to_double(const Real& x) {
  return static_cast<double>(x);
}

// Parses a decimal literal at the working precision of Real. The tokens
// "golden" and "1-golden" give (sqrt5-1)/2 and its complement exactly.
template <class Real>
Real parse_real(const std::string& text);

// Ratio of the working epsilon to the binary64 epsilon, used to scale
// tolerances that were calibrated in double precision.
template <class Real>
inline double precision_scale() {
  return to_double(epsilon<Real>()) / std::numeric_limits<double>::epsilon();
}

}  // namespace giem
