#include "giem/giem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "giem/errors.hpp"

namespace giem {

using std::abs;
using std::log;

template <class Real>
Giem<Real>::Giem(Alphabet alphabet, PermPair perm, Real left, std::vector<Real> lengths,
                 std::vector<Real> image_lengths, std::vector<SmoothMap<Real>> branches)
    : alphabet_(std::move(alphabet)),
      perm_(std::move(perm)),
      left_(std::move(left)),
      lengths_(std::move(lengths)),
      image_lengths_(std::move(image_lengths)),
      branches_(std::move(branches)) {
  const auto d = static_cast<std::size_t>(perm_.size());
  if (static_cast<std::size_t>(alphabet_.size()) != d || lengths_.size() != d || image_lengths_.size() != d ||
      branches_.size() != d)
    throw Error(ErrorKind::InvalidArgument, "alphabet, permutation, lengths and branches differ in size");
  cuts_.assign(d + 1, left_);
  image_cuts_.assign(d + 1, left_);
  for (std::size_t i = 1; i <= d; ++i) {
    cuts_[i] = cuts_[i - 1] + lengths_[perm_.letter_at(0, static_cast<int>(i))];
    image_cuts_[i] = image_cuts_[i - 1] + image_lengths_[perm_.letter_at(1, static_cast<int>(i))];
  }
}

template <class Real>
Real Giem<Real>::length() const {
  return cuts_.back() - left_;
}

template <class Real>
std::vector<Real> Giem<Real>::cuts() const {
  return cuts_;
}

template <class Real>
std::vector<Real> Giem<Real>::image_cuts() const {
  return image_cuts_;
}

template <class Real>
Interval<Real> Giem<Real>::interval(int letter) const {
  const int pos = perm_.pi0(letter);
  return {cuts_[pos - 1], cuts_[pos]};
}

template <class Real>
Interval<Real> Giem<Real>::image_interval(int letter) const {
  const int pos = perm_.pi1(letter);
  return {image_cuts_[pos - 1], image_cuts_[pos]};
}

template <class Real>
int Giem<Real>::letter_at(const Real& x) const {
  if (!(x >= cuts_.front() && x < cuts_.back()))
    throw Error(ErrorKind::DomainViolation, "point " + std::to_string(to_double(x)) + " outside the domain");
  const auto it = std::upper_bound(cuts_.begin() + 1, cuts_.end(), x);
  const int pos = static_cast<int>(it - cuts_.begin());
  return perm_.letter_at(0, pos);
}

template <class Real>
int Giem<Real>::letter_at_left_limit(const Real& x) const {
  if (!(x > cuts_.front() && x <= cuts_.back()))
    throw Error(ErrorKind::DomainViolation, "left limit requested outside (u0, ud]");
  const auto it = std::lower_bound(cuts_.begin() + 1, cuts_.end(), x);
  const int pos = static_cast<int>(it - cuts_.begin());
  return perm_.letter_at(0, pos);
}

template <class Real>
int Giem<Real>::image_letter_at(const Real& y) const {
  if (!(y >= image_cuts_.front() && y < image_cuts_.back()))
    throw Error(ErrorKind::DomainViolation, "point outside the image");
  const auto it = std::upper_bound(image_cuts_.begin() + 1, image_cuts_.end(), y);
  const int pos = static_cast<int>(it - image_cuts_.begin());
  return perm_.letter_at(1, pos);
}

template <class Real>
Real Giem<Real>::apply(const Real& x) const {
  return branches_[letter_at(x)](x);
}

template <class Real>
Jet2<Real> Giem<Real>::apply_jet(const Real& x) const {
  return branches_[letter_at(x)].jet(x);
}

template <class Real>
Real Giem<Real>::apply_left_limit(const Real& x) const {
  return branches_[letter_at_left_limit(x)](x);
}

template <class Real>
Real Giem<Real>::apply_inverse(const Real& y) const {
  return branches_[image_letter_at(y)].inverse_value(y);
}

template <class Real>
Real mean_nonlinearity(const Giem<Real>& g) {
  Real total(0);
  for (int a = 0; a < g.size(); ++a) {
    const auto iv = g.interval(a);
    total += nonlinearity_integral(g.branch(a), iv.lo, iv.hi);
  }
  return total;
}

template <class Real>
SmoothnessReport validate(const Giem<Real>& g, const Real& tol, int grid) {
  if (!is_irreducible(g.perm())) throw Error(ErrorKind::ReduciblePerm, "combinatorial data is reducible");
  const int d = g.size();
  for (int a = 0; a < d; ++a) {
    if (!(g.lengths()[a] > 0) || !(g.image_lengths()[a] > 0))
      throw Error(ErrorKind::NonMonotoneBranch, "cut points out of order at letter " + g.alphabet().name(a));
  }
  const Real scale = g.length();
  Real image_total(0);
  for (const auto& l : g.image_lengths()) image_total += l;
  if (abs(image_total - g.length()) > tol * scale)
    throw Error(ErrorKind::TilingGap, "image lengths do not add up to the domain length");

  SmoothnessReport report;
  report.nu = 1;
  for (int a = 0; a < d; ++a) {
    const auto iv = g.interval(a);
    const auto img = g.image_interval(a);
    const auto& b = g.branch(a);
    const Real slack = domain_slack(b.domain());
    if (abs(b.domain().lo - iv.lo) > slack || abs(b.domain().hi - iv.hi) > slack)
      throw Error(ErrorKind::TilingGap, "branch domain differs from its interval at letter " + g.alphabet().name(a));
    if (abs(b(iv.lo) - img.lo) > tol * scale || abs(b(iv.hi) - img.hi) > tol * scale)
      throw Error(ErrorKind::TilingGap, "branch " + g.alphabet().name(a) + " does not map onto its image interval");
    // d1 > 0 and |n| on a grid; Simpson's rule for the variation.
    const int m = grid % 2 == 1 ? grid : grid + 1;
    double var = 0;
    for (int k = 0; k < m; ++k) {
      const Real x = iv.lo + iv.width() * Real(k) / Real(m - 1);
      const auto j = b.jet(x);
      if (!(j.d1 > 0)) throw Error(ErrorKind::NonMonotoneBranch, "Df <= 0 on branch " + g.alphabet().name(a));
      const double w = (k == 0 || k == m - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      var += w * std::abs(to_double(j.d2 / j.d1));
    }
    report.variation += var * to_double(iv.width()) / (3.0 * (m - 1));
    const double nu = b.meta().nu.value_or(1.0);
    const auto est = estimate_smoothness(b, nu, std::max(grid, 65));
    report.c0.push_back(*est.c0);
    report.c1.push_back(*est.c1);
    report.nu = std::min(report.nu, nu);
  }
  report.mean_nonlinearity = to_double(mean_nonlinearity(g));
  return report;
}

template <class Real>
int genus_one_discontinuities(const Giem<Real>& g) {
  const auto cuts = g.cuts();
  const Real tol = 1000 * epsilon<Real>() * std::max(Real(1), g.length());
  int count = 0;
  for (std::size_t i = 1; i + 1 < cuts.size(); ++i)
    if (abs(g.apply_left_limit(cuts[i]) - g.apply(cuts[i])) > tol) ++count;
  return count;
}

template <class Real>
Giem<Real> standard_iem(const std::vector<Real>& lengths, const PermPair& perm, const Real& left) {
  const int d = perm.size();
  if (static_cast<int>(lengths.size()) != d) throw Error(ErrorKind::InvalidArgument, "one length per letter");
  std::vector<Real> cut(d + 1, left), img(d + 1, left);
  for (int i = 1; i <= d; ++i) {
    cut[i] = cut[i - 1] + lengths[perm.letter_at(0, i)];
    img[i] = img[i - 1] + lengths[perm.letter_at(1, i)];
  }
  std::vector<SmoothMap<Real>> branches;
  for (int a = 0; a < d; ++a) {
    const Interval<Real> dom{cut[perm.pi0(a) - 1], cut[perm.pi0(a)]};
    if (!(dom.lo < dom.hi)) throw Error(ErrorKind::NonMonotoneBranch, "nonpositive length");
    branches.push_back(SmoothMap<Real>::affine(Real(1), img[perm.pi1(a) - 1] - dom.lo, dom));
  }
  return Giem<Real>(Alphabet::standard(d), perm, left, lengths, lengths, std::move(branches));
}

template <class Real>
Giem<Real> piecewise_moebius(const std::vector<Real>& lengths, const std::vector<Real>& image_lengths,
                             const PermPair& perm, const std::vector<Real>& n) {
  const int d = perm.size();
  if (static_cast<int>(lengths.size()) != d || static_cast<int>(image_lengths.size()) != d ||
      static_cast<int>(n.size()) != d)
    throw Error(ErrorKind::IncompatibleLengths, "one length, image length and N per letter");
  Real total(0), image_total(0);
  for (int a = 0; a < d; ++a) {
    if (!(lengths[a] > 0) || !(image_lengths[a] > 0))
      throw Error(ErrorKind::IncompatibleLengths, "lengths must be positive");
    total += lengths[a];
    image_total += image_lengths[a];
  }
  if (abs(total - image_total) > 64 * epsilon<Real>() * total)
    throw Error(ErrorKind::IncompatibleLengths, "lengths and image lengths have different sums");
  std::vector<Real> cut(d + 1, Real(0)), img(d + 1, Real(0));
  for (int i = 1; i <= d; ++i) {
    cut[i] = cut[i - 1] + lengths[perm.letter_at(0, i)];
    img[i] = img[i - 1] + image_lengths[perm.letter_at(1, i)];
  }
  const Interval<Real> unit{Real(0), Real(1)};
  std::vector<SmoothMap<Real>> branches;
  for (int a = 0; a < d; ++a) {
    const Interval<Real> dom{cut[perm.pi0(a) - 1], cut[perm.pi0(a)]};
    const Interval<Real> im{img[perm.pi1(a) - 1], img[perm.pi1(a)]};
    branches.push_back(SmoothMap<Real>::compose({SmoothMap<Real>::affine_between(dom, unit),
                                                 SmoothMap<Real>::moebius(n[a]),
                                                 SmoothMap<Real>::affine_between(unit, im)}));
  }
  return Giem<Real>(Alphabet::standard(d), perm, Real(0), lengths, image_lengths, std::move(branches));
}

template <class Real>
Giem<Real> refine(const Giem<Real>& g, const Real& cut) {
  const int a = g.letter_at(cut);
  const auto iv = g.interval(a);
  const Real tiny = 64 * epsilon<Real>() * std::max(Real(1), g.length());
  if (!(cut - iv.lo > tiny && iv.hi - cut > tiny))
    throw Error(ErrorKind::DegenerateInterval, "refinement point too close to an existing cut");
  const int d = g.size();
  const auto& b = g.branch(a);
  const Real fc = b(cut);
  const auto img = g.image_interval(a);

  std::vector<int> pi0(d + 1), pi1(d + 1);
  for (int x = 0; x < d; ++x) {
    pi0[x] = g.perm().pi0(x) + (g.perm().pi0(x) > g.perm().pi0(a) ? 1 : 0);
    pi1[x] = g.perm().pi1(x) + (g.perm().pi1(x) > g.perm().pi1(a) ? 1 : 0);
  }
  pi0[d] = g.perm().pi0(a) + 1;
  pi1[d] = g.perm().pi1(a) + 1;

  auto names = g.alphabet().names();
  std::string fresh;
  for (int k = 0;; ++k) {
    fresh = k < 26 ? std::string(1, static_cast<char>('A' + k)) : "L" + std::to_string(k);
    if (std::find(names.begin(), names.end(), fresh) == names.end()) break;
  }
  names.push_back(fresh);

  auto lengths = g.lengths();
  auto image_lengths = g.image_lengths();
  auto branches = g.branches();
  lengths[a] = cut - iv.lo;
  lengths.push_back(iv.hi - cut);
  image_lengths[a] = fc - img.lo;
  image_lengths.push_back(img.hi - fc);
  branches[a] = SmoothMap<Real>::restrict_to(b, {iv.lo, cut});
  branches.push_back(SmoothMap<Real>::restrict_to(b, {cut, iv.hi}));
  return Giem<Real>(Alphabet(names), PermPair(pi0, pi1), g.left(), std::move(lengths), std::move(image_lengths),
                    std::move(branches));
}

template <class Real>
Giem<Real> conjugate(const Giem<Real>& g, const SmoothMap<Real>& h) {
  const Real slack = domain_slack(h.domain());
  if (abs(h.domain().lo - g.left()) > slack || abs(h.domain().hi - g.right()) > slack ||
      abs(h(h.domain().lo) - g.left()) > slack || abs(h(h.domain().hi) - g.right()) > slack)
    throw Error(ErrorKind::NotInvertible, "conjugacy must be a homeomorphism of the domain fixing both ends");
  const int d = g.size();
  const auto cuts = g.cuts();
  const auto icuts = g.image_cuts();
  std::vector<Real> hc(d + 1), hi(d + 1);
  for (int i = 0; i <= d; ++i) {
    hc[i] = i == 0 ? g.left() : (i == d ? g.right() : h(cuts[i]));
    hi[i] = i == 0 ? g.left() : (i == d ? g.right() : h(icuts[i]));
  }
  const auto h_inv = SmoothMap<Real>::inverse(h);
  std::vector<Real> lengths(d), image_lengths(d);
  std::vector<SmoothMap<Real>> branches;
  for (int a = 0; a < d; ++a) {
    const int p0 = g.perm().pi0(a), p1 = g.perm().pi1(a);
    lengths[a] = hc[p0] - hc[p0 - 1];
    image_lengths[a] = hi[p1] - hi[p1 - 1];
    const auto entry = SmoothMap<Real>::restrict_to(h_inv, {hc[p0 - 1], hc[p0]});
    branches.push_back(SmoothMap<Real>::compose({entry, g.branch(a), h}));
  }
  Giem<Real> out(g.alphabet(), g.perm(), g.left(), std::move(lengths), std::move(image_lengths),
                 std::move(branches));
  // Cut further wherever a branch is only piecewise smooth.
  std::vector<Real> extra;
  for (int a = 0; a < out.size(); ++a)
    for (const Real& b : out.branch(a).break_points()) extra.push_back(b);
  std::sort(extra.begin(), extra.end());
  for (const Real& b : extra) out = refine(out, b);
  return out;
}

template <class Real>
Giem<Real> conjugated_rotation(const SmoothMap<Real>& h, const Real& rho) {
  if (!(rho > 0 && rho < 1)) throw Error(ErrorKind::InvalidArgument, "rotation number must lie in (0,1)");
  const auto rotation = standard_iem<Real>({1 - rho, rho}, PermPair({1, 2}, {2, 1}));
  return conjugate(rotation, h);
}

template <class Real>
Giem<Real> rotate_after(const Giem<Real>& g, const Real& s_in) {
  using std::floor;
  const Real L = g.length();
  Real s = s_in - L * floor(s_in / L);
  if (s == 0) return g;
  const Real split = g.left() + L - s;
  const Real tiny = 64 * epsilon<Real>() * std::max(Real(1), L);
  Giem<Real> base = g;
  const Real x = g.apply_inverse(split);
  bool on_cut = false;
  for (const auto& c : g.cuts()) on_cut = on_cut || abs(c - x) <= tiny;
  if (!on_cut) base = refine(g, x);

  const int d = base.size();
  std::vector<Real> new_left(d);
  std::vector<SmoothMap<Real>> branches;
  for (int a = 0; a < d; ++a) {
    const Real lo = base.image_interval(a).lo;
    const Real shift = lo >= split - tiny ? s - L : s;
    new_left[a] = lo + shift;
    const auto& b = base.branch(a);
    const auto img = b.image();
    branches.push_back(b.then(SmoothMap<Real>::affine(Real(1), shift, img)));
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int u, int v) { return new_left[u] < new_left[v]; });
  std::vector<int> pi1(d);
  for (int k = 0; k < d; ++k) pi1[order[k]] = k + 1;
  return Giem<Real>(base.alphabet(), PermPair(base.perm().pi0(), pi1), base.left(), base.lengths(),
                    base.image_lengths(), std::move(branches));
}

namespace {

// Left end of the interval whose image starts at the left of the domain.
template <class Real>
Real wrap_point(const Giem<Real>& g) {
  return g.interval(g.perm().letter_at(1, 1)).lo;
}

}  // namespace

template <class Real>
double rotation_number(const Giem<Real>& g, long iterations, const Real& x0) {
  const Real c = wrap_point(g);
  Real x = x0;
  long wraps = 0;
  for (long i = 0; i < iterations; ++i) {
    if (x >= c) ++wraps;
    x = g.apply(x);
  }
  return static_cast<double>(wraps) / static_cast<double>(iterations);
}

template <class Real>
Calibrated<Real> calibrate_zero_mean(const std::function<Giem<Real>(const Real&)>& family, Real t0, Real t1) {
  Real m0 = mean_nonlinearity(family(t0));
  const Real m1 = mean_nonlinearity(family(t1));
  if (abs(m0) < Real(1e-12)) return {t0, family(t0)};
  if (abs(m1) < Real(1e-12)) return {t1, family(t1)};
  if (!(m0 * m1 < 0)) throw Error(ErrorKind::NoSignChange, "meanN has the same sign at both ends of the bracket");
  for (int iter = 0; iter < 400; ++iter) {
    const Real mid = (t0 + t1) / 2;
    auto g = family(mid);
    const Real m = mean_nonlinearity(g);
    if (abs(m) < Real(1e-12) || abs(t1 - t0) <= 4 * epsilon<Real>() * std::max(Real(1), abs(mid)))
      return {mid, std::move(g)};
    if ((m < 0) == (m0 < 0)) {
      t0 = mid;
      m0 = m;
    } else {
      t1 = mid;
    }
  }
  throw Error(ErrorKind::MaxIterations, "calibration bisection did not converge");
}

namespace {

// -1 if the rotation number is certainly below rho, +1 if certainly above,
// 0 if every convergent test up to max_period is inconclusive.
template <class Real>
int compare_rotation(const Giem<Real>& g, const Real& rho, long max_period) {
  using std::floor;
  // Convergents p/q of rho.
  std::vector<std::pair<long, long>> conv;
  {
    long p_prev = 0, q_prev = 1, p = 1, q = 0;
    Real x = rho;
    for (int k = 0; k < 80; ++k) {
      const Real fl = floor(x);
      const long a = static_cast<long>(to_double(fl));
      const long pn = a * p + p_prev, qn = a * q + q_prev;
      if (qn > max_period) break;
      p_prev = p;
      q_prev = q;
      p = pn;
      q = qn;
      conv.emplace_back(p, q);
      const Real frac = x - fl;
      if (frac == 0) break;
      x = 1 / frac;
    }
  }
  const Real c = wrap_point(g);
  const Real x0 = g.left();
  Real x = x0;
  long wraps = 0, n = 0;
  for (const auto& [p, q] : conv) {
    while (n < q) {
      if (x >= c) ++wraps;
      x = g.apply(x);
      ++n;
    }
    // Sign of F^q-lift(x0) - x0 - p L.
    const int sign = wraps != p ? (wraps > p ? 1 : -1) : (x > x0 ? 1 : (x < x0 ? -1 : 0));
    const bool below = Real(p) < rho * Real(q);
    if (below && sign < 0) return -1;
    if (!below && sign > 0) return 1;
  }
  return 0;
}

}  // namespace

template <class Real>
Calibrated<Real> tune_rotation(const std::function<Giem<Real>(const Real&)>& family, const Real& rho, Real s0,
                               Real s1, long max_period) {
  if (compare_rotation(family(s0), rho, max_period) >= 0 || compare_rotation(family(s1), rho, max_period) <= 0)
    throw Error(ErrorKind::NoSignChange, "rotation number does not cross the target inside the bracket");
  for (int iter = 0; iter < 400; ++iter) {
    const Real mid = (s0 + s1) / 2;
    auto g = family(mid);
    const int c = compare_rotation(g, rho, max_period);
    if (c == 0 || abs(s1 - s0) <= 4 * epsilon<Real>() * std::max(Real(1), abs(mid))) return {mid, std::move(g)};
    if (c < 0)
      s0 = mid;
    else
      s1 = mid;
  }
  throw Error(ErrorKind::MaxIterations, "rotation tuning did not converge");
}

#define GIEM_INSTANTIATE(R)                                                                               \
  template class Giem<R>;                                                                                 \
  template SmoothnessReport validate(const Giem<R>&, const R&, int);                                      \
  template R mean_nonlinearity(const Giem<R>&);                                                           \
  template int genus_one_discontinuities(const Giem<R>&);                                                 \
  template Giem<R> standard_iem(const std::vector<R>&, const PermPair&, const R&);                        \
  template Giem<R> piecewise_moebius(const std::vector<R>&, const std::vector<R>&, const PermPair&,       \
                                     const std::vector<R>&);                                              \
  template Giem<R> conjugate(const Giem<R>&, const SmoothMap<R>&);                                        \
  template Giem<R> conjugated_rotation(const SmoothMap<R>&, const R&);                                    \
  template Giem<R> refine(const Giem<R>&, const R&);                                                      \
  template Giem<R> rotate_after(const Giem<R>&, const R&);                                                \
  template double rotation_number(const Giem<R>&, long, const R&);                                        \
  template Calibrated<R> calibrate_zero_mean(const std::function<Giem<R>(const R&)>&, R, R);              \
  template Calibrated<R> tune_rotation(const std::function<Giem<R>(const R&)>&, const R&, R, R, long);

GIEM_INSTANTIATE(double)
GIEM_INSTANTIATE(Extended)

}  // namespace giem
