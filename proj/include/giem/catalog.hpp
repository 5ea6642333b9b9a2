#pragma once

#include "giem/giem.hpp"

// Named maps used by the tests, the acceptance run and the command line.
namespace giem::catalog {

// Standard two-interval exchange with lengths (1 - rho, rho).
template <class Real>
Giem<Real> golden_rotation();

// Lengths (c, 1 - rho - c, rho), monodromy (2 3 1): the golden rotation
// with an extra continuous cut at c.
template <class Real>
Giem<Real> three_interval_rotation(const Real& c);

// h R_rho h^{-1} with h the sine bump of the given amplitude.
template <class Real>
Giem<Real> bump_golden(const Real& amplitude);

// Piecewise-Moebius two-interval map with mean nonlinearities (n_a, n_b),
// followed by the circle rotation that brings its rotation number to rho.
template <class Real>
Giem<Real> moebius_golden(const Real& n_a, const Real& n_b);

// Zero total nonlinearity: the first parameter of the piecewise-Moebius
// family (t, -n_b) is calibrated, then the rotation number is tuned to rho.
template <class Real>
Giem<Real> zero_mean_golden(const Real& n_b);

}  // namespace giem::catalog
