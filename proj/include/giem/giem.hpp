#pragma once

#include <functional>
#include <vector>

#include "giem/combinatorics.hpp"
#include "giem/smoothmap.hpp"

namespace giem {

// A generalized interval exchange map: the domain [left, left + length)
// is cut into d half-open intervals, each carried by its own branch onto
// a half-open image interval; the images tile the domain in pi1 order.
template <class Real>
class Giem {
 public:
  Giem(Alphabet alphabet, PermPair perm, Real left, std::vector<Real> lengths, std::vector<Real> image_lengths,
       std::vector<SmoothMap<Real>> branches);

  int size() const { return perm_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  const PermPair& perm() const { return perm_; }
  const Real& left() const { return left_; }
  Real length() const;
  Real right() const { return left_ + length(); }

  const std::vector<Real>& lengths() const { return lengths_; }
  const std::vector<Real>& image_lengths() const { return image_lengths_; }
  // Cut points u_0 < ... < u_d of the domain, in pi0 order.
  std::vector<Real> cuts() const;
  // Cut points of the image tiling, in pi1 order.
  std::vector<Real> image_cuts() const;
  Interval<Real> interval(int letter) const;
  Interval<Real> image_interval(int letter) const;

  const SmoothMap<Real>& branch(int letter) const { return branches_[letter]; }
  const std::vector<SmoothMap<Real>>& branches() const { return branches_; }

  // Branch lookup uses u_{i-1} <= x < u_i.
  int letter_at(const Real& x) const;
  // Letter whose interval has x in (u_{i-1}, u_i].
  int letter_at_left_limit(const Real& x) const;
  int image_letter_at(const Real& y) const;

  Real apply(const Real& x) const;
  Jet2<Real> apply_jet(const Real& x) const;
  Real apply_left_limit(const Real& x) const;
  Real apply_inverse(const Real& y) const;

 private:
  Alphabet alphabet_;
  PermPair perm_;
  Real left_;
  std::vector<Real> lengths_;
  std::vector<Real> image_lengths_;
  std::vector<SmoothMap<Real>> branches_;
  // Cached prefix sums; lengths stay the primary data.
  std::vector<Real> cuts_, image_cuts_;
};

struct SmoothnessReport {
  double variation = 0;  // Var(log Df), by quadrature of |n_f|
  double mean_nonlinearity = 0;
  std::vector<double> c0, c1;  // per letter
  double nu = 1;
};

// Checks Definition-style validity and measures regularity. Throws
// TilingGap, NonMonotoneBranch or ReduciblePerm.
template <class Real>
SmoothnessReport validate(const Giem<Real>& g, const Real& tol, int grid = 257);

// Integral of D^2f/Df over the domain, summed branchwise from ln Df at the
// interval ends.
template <class Real>
Real mean_nonlinearity(const Giem<Real>& g);

// Interior cut points where the left limit of f differs from f.
template <class Real>
int genus_one_discontinuities(const Giem<Real>& g);

template <class Real>
Giem<Real> standard_iem(const std::vector<Real>& lengths, const PermPair& perm, const Real& left = Real(0));

// Branch alpha maps I_alpha onto its image with zoom equal to moebius(N_alpha).
template <class Real>
Giem<Real> piecewise_moebius(const std::vector<Real>& lengths, const std::vector<Real>& image_lengths,
                             const PermPair& perm, const std::vector<Real>& n);

// h ∘ g ∘ h^{-1} for a homeomorphism h of the domain fixing both ends.
// Branches are cut wherever h or a branch of g has a break point.
template <class Real>
Giem<Real> conjugate(const Giem<Real>& g, const SmoothMap<Real>& h);

// h ∘ R_rho ∘ h^{-1} on [0,1).
template <class Real>
Giem<Real> conjugated_rotation(const SmoothMap<Real>& h, const Real& rho);

// Splits the interval containing `cut` in two; the right part becomes a new
// letter placed right after the old one on both sides.
template <class Real>
Giem<Real> refine(const Giem<Real>& g, const Real& cut);

// T_s ∘ g, where T_s is the rotation by s of the domain seen as a circle.
template <class Real>
Giem<Real> rotate_after(const Giem<Real>& g, const Real& s);

// Fraction of iterates landing right of the discontinuity: the rotation
// number of a genus-one map with one discontinuity.
template <class Real>
double rotation_number(const Giem<Real>& g, long iterations, const Real& x0);

template <class Real>
struct Calibrated {
  Real parameter;
  Giem<Real> map;
};

// Bisection on t in [t0, t1] until |meanN| < 1e-12 (or the bracket
// collapses). Throws NoSignChange if the ends do not straddle zero.
template <class Real>
Calibrated<Real> calibrate_zero_mean(const std::function<Giem<Real>(const Real&)>& family, Real t0, Real t1);

// Bisection on s in [s0, s1] for a family whose rotation number increases
// with s, until the lift test at every convergent of rho with denominator
// <= max_period agrees with rho.
template <class Real>
Calibrated<Real> tune_rotation(const std::function<Giem<Real>(const Real&)>& family, const Real& rho, Real s0,
                               Real s1, long max_period = 1000000);

}  // namespace giem
