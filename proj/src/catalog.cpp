#include "giem/catalog.hpp"

#include <functional>

namespace giem::catalog {

namespace {
template <class Real>
PermPair rotation_perm() {
  return PermPair({1, 2}, {2, 1});
}

// The rotation that brings g's rotation number to rho. The search runs in
// binary64 whatever the working type: the orbit-average estimate of the
// rotation number is far coarser than binary64 rounding, and the search
// costs a million map evaluations per bisection step.
double golden_shift(const Giem<double>& g) {
  const std::function<Giem<double>(const double&)> family = [&](const double& s) { return rotate_after(g, s); };
  return to_double(tune_rotation(family, golden<double>(), -0.25, 0.25, 1000000).parameter);
}

template <class Real>
Giem<Real> moebius_pair(const Real& n_a, const Real& n_b) {
  const Real rho = golden<Real>();
  return piecewise_moebius<Real>({1 - rho, rho}, {1 - rho, rho}, rotation_perm<Real>(), {n_a, n_b});
}

template <class Real>
Giem<Real> tuned(const Real& n_a, const Real& n_b) {
  const double s = golden_shift(moebius_pair<double>(to_double(n_a), to_double(n_b)));
  return rotate_after(moebius_pair<Real>(n_a, n_b), Real(s));
}
}  // namespace

template <class Real>
Giem<Real> golden_rotation() {
  const Real rho = golden<Real>();
  return standard_iem<Real>({1 - rho, rho}, rotation_perm<Real>());
}

template <class Real>
Giem<Real> three_interval_rotation(const Real& c) {
  const Real rho = golden<Real>();
  return standard_iem<Real>({c, 1 - rho - c, rho}, PermPair::from_monodromy({2, 3, 1}));
}

template <class Real>
Giem<Real> bump_golden(const Real& amplitude) {
  return conjugated_rotation(SmoothMap<Real>::bump(amplitude), golden<Real>());
}

template <class Real>
Giem<Real> moebius_golden(const Real& n_a, const Real& n_b) {
  return tuned(n_a, n_b);
}

template <class Real>
Giem<Real> zero_mean_golden(const Real& n_b) {
  const std::function<Giem<Real>(const Real&)> family = [&](const Real& t) { return moebius_pair<Real>(t, -n_b); };
  return tuned(calibrate_zero_mean(family, Real(-1), Real(1)).parameter, Real(-n_b));
}

#define GIEM_CATALOG_INSTANTIATE(R)                         \
  template Giem<R> golden_rotation<R>();                    \
  template Giem<R> three_interval_rotation<R>(const R&);    \
  template Giem<R> bump_golden<R>(const R&);                \
  template Giem<R> moebius_golden<R>(const R&, const R&);   \
  template Giem<R> zero_mean_golden<R>(const R&);

GIEM_CATALOG_INSTANTIATE(double)
GIEM_CATALOG_INSTANTIATE(Extended)

}  // namespace giem::catalog
