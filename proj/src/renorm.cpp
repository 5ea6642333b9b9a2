#include "giem/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "giem/errors.hpp"

namespace giem {

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::Connection: return "connection-suspected";
    case StopReason::PrecisionExhausted: return "precision-exhausted";
  }
  return "unknown";
}

template <class Real>
int LevelState<Real>::letter_at(const Real& x) const {
  if (!(x >= cuts.front() && x < cuts.back()))
    throw Error(ErrorKind::DomainViolation, "point outside I^" + std::to_string(level));
  const auto it = std::upper_bound(cuts.begin() + 1, cuts.end(), x);
  return perm.letter_at(0, static_cast<int>(it - cuts.begin()));
}

template <class Real>
std::uint64_t LevelState<Real>::return_time(int letter) const {
  if (q[letter] > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw Error(ErrorKind::BudgetExceeded, "return time does not fit 64 bits");
  return q[letter].template convert_to<std::uint64_t>();
}

template <class Real>
int detect_type(const LevelState<Real>& s, const RenormOptions& options) {
  using std::abs;
  const int d = s.size();
  // Positive margin: the last domain interval is longer than the last image
  // interval, so alpha(0) wins.
  const Real margin = s.image_cuts[d - 1] - s.cuts[d - 1];
  const Real tie = Real(options.tie_tolerance * precision_scale<Real>()) * s.length;
  if (abs(margin) <= tie) {
    std::ostringstream os;
    os << "type tie at level " << s.level << " (margin " << to_double(margin) << ", |I^n| " << to_double(s.length)
       << ")";
    throw Error(ErrorKind::ConnectionSuspected, os.str());
  }
  if (options.precision_guard && abs(margin) <= 2 * s.error) {
    std::ostringstream os;
    os << "type not certified at level " << s.level << " (margin " << to_double(margin) << ", error bound "
       << to_double(s.error) << ")";
    throw Error(ErrorKind::PrecisionExhausted, os.str());
  }
  return margin > 0 ? 0 : 1;
}

template <class Real>
RenormTrace<Real>::RenormTrace(const Giem<Real>& f) : f_(f) {
  const Real tol = domain_slack(Interval<Real>{f.left(), f.right()});
  for (int a = 0; a < f.size(); ++a) {
    const auto iv = f.interval(a);
    branch_lo_.push_back(iv.lo - tol);
    branch_hi_.push_back(iv.hi + tol);
  }
}

template <class Real>
void RenormTrace<Real>::report_off_branch(int letter, const Real& x) const {
  const auto iv = f_.interval(letter);
  std::ostringstream os;
  os << "orbit point " << to_double(x) << " is not on branch " << f_.alphabet().name(letter) << " ["
     << to_double(iv.lo) << ", " << to_double(iv.hi) << "]";
  throw Error(ErrorKind::OrbitLeftDomain, os.str());
}

template <class Real>
RenormTrace<Real> RenormTrace<Real>::renormalize(const Giem<Real>& f, int n_max, const RenormOptions& options) {
  RenormTrace t(f);
  const int d = f.size();
  const Real eps = epsilon<Real>();
  using std::abs;
  const Real scale = std::max({Real(1), abs(f.left()), abs(f.right())});

  LevelState<Real> s0;
  s0.level = 0;
  s0.perm = f.perm();
  s0.left = f.left();
  s0.length = f.length();
  s0.cuts = f.cuts();
  s0.image_cuts = f.image_cuts();
  s0.q.assign(d, BigInt(1));
  s0.error = eps * s0.length * d;
  t.levels_.push_back(s0);
  t.defined_at_.push_back(std::vector<int>(d, 0));
  t.parts_.push_back({-1, -1});

  for (int n = 0; n < n_max; ++n) {
    const LevelState<Real>& s = t.levels_.back();
    int type = 0;
    try {
      type = detect_type(s, options);
    } catch (const Error& e) {
      t.stop_ = e.kind() == ErrorKind::ConnectionSuspected ? StopReason::Connection : StopReason::PrecisionExhausted;
      t.stop_detail_ = e.what();
      break;
    }
    const auto [w, l] = winner_loser(s.perm, type);
    std::vector<Real> dom_left(d), img_left(d);
    for (int a = 0; a < d; ++a) {
      dom_left[a] = s.cuts[s.perm.pi0(a) - 1];
      img_left[a] = s.image_cuts[s.perm.pi1(a) - 1];
    }
    Real new_right, created;
    if (type == 0) {
      // The loser's image is cut off; it is sent once more through the winner.
      new_right = s.image_cuts[d - 1];
      created = new_right;
      img_left[l] = t.apply_level(n, w, new_right);
    } else {
      // The loser's interval is cut off; the part of the winner landing on
      // it becomes the loser's new domain.
      new_right = s.cuts[d - 1];
      created = t.apply_level_inverse(n, w, new_right);
      dom_left[l] = created;
    }

    LevelState<Real> next;
    next.level = n + 1;
    next.perm = rauzy_move(s.perm, type);
    next.left = s.left;
    next.length = new_right - s.left;
    next.cuts.resize(d + 1);
    next.image_cuts.resize(d + 1);
    for (int i = 1; i <= d; ++i) {
      next.cuts[i - 1] = dom_left[next.perm.letter_at(0, i)];
      next.image_cuts[i - 1] = img_left[next.perm.letter_at(1, i)];
    }
    next.cuts[d] = new_right;
    next.image_cuts[d] = new_right;
    next.q = s.q;
    next.q[l] += s.q[w];
    next.error = s.error + Real(s.q[w].template convert_to<double>()) * eps * scale;

    bool ordered = true;
    for (int i = 0; i < d; ++i)
      ordered = ordered && next.cuts[i] < next.cuts[i + 1] && next.image_cuts[i] < next.image_cuts[i + 1];
    if (!ordered || next.length < 100 * eps * scale) {
      t.stop_ = StopReason::PrecisionExhausted;
      t.stop_detail_ = "level " + std::to_string(n + 1) + " is below the resolution of the working precision";
      break;
    }

    std::vector<int> defined = t.defined_at_.back();
    defined[l] = n + 1;
    t.defined_at_.push_back(std::move(defined));
    t.parts_.push_back(type == 0 ? std::array<int, 2>{l, w} : std::array<int, 2>{w, l});
    t.new_cut_.push_back(created);
    t.steps_.push_back(StepLabel{n, type, w, l});
    t.levels_.push_back(std::move(next));
  }
  return t;
}

template <class Real>
std::vector<int> RenormTrace<Real>::itinerary(int n, int letter) const {
  std::vector<int> out;
  for_each_base_letter(n, letter, [&](int b) { out.push_back(b); });
  return out;
}

template <class Real>
Real RenormTrace<Real>::apply_level(int n, int letter, const Real& x) const {
  Real y = x;
  for_each_base_letter(n, letter, [&](int b) {
    check_on_branch(b, y);
    y = f_.branch(b)(y);
  });
  return y;
}

template <class Real>
Jet2<Real> RenormTrace<Real>::apply_level_jet(int n, int letter, const Jet2<Real>& x) const {
  Jet2<Real> y = x;
  for_each_base_letter(n, letter, [&](int b) {
    check_on_branch(b, y.value);
    y = f_.branch(b).jet(y);
  });
  return y;
}

template <class Real>
void RenormTrace<Real>::apply_level_jets(int n, int letter, std::vector<Jet2<Real>>& points) const {
  for_each_base_letter(n, letter, [&](int b) {
    const auto& branch = f_.branch(b);
    for (auto& p : points) {
      check_on_branch(b, p.value);
      p = branch.jet(p);
    }
  });
}

template <class Real>
Real RenormTrace<Real>::apply_level_offsets(int n, int letter, const Real& x, std::vector<Jet2<Real>>& pts) const {
  Real base = x;
  for_each_base_letter(n, letter, [&](int b) {
    check_on_branch(b, base);
    base = f_.branch(b).advance_offsets(base, pts);
  });
  return base;
}

template <class Real>
Real RenormTrace<Real>::apply_level_inverse(int n, int letter, const Real& y) const {
  Real x = y;
  for_each_base_letter(
      n, letter,
      [&](int b) {
        x = f_.branch(b).inverse_value(x);
        check_on_branch(b, x);
      },
      true);
  return x;
}

template <class Real>
Real RenormTrace<Real>::apply_level(int n, const Real& x) const {
  return apply_level(n, level(n).letter_at(x), x);
}

template <class Real>
std::vector<Real> RenormTrace<Real>::orbit(int n, int letter, const Real& x) const {
  std::vector<Real> out{x};
  Real y = x;
  for_each_base_letter(n, letter, [&](int b) {
    check_on_branch(b, y);
    y = f_.branch(b)(y);
    out.push_back(y);
  });
  return out;
}

template <class Real>
std::vector<Real> RenormTrace<Real>::new_cut_orbit(int n) const {
  if (n < 0 || n >= depth()) throw Error(ErrorKind::InvalidArgument, "no step from this level");
  auto o = orbit(n, steps_[n].winner, new_cut_[n]);
  o.erase(o.begin());
  return o;
}

template <class Real>
PartitionSnapshot<Real> partition(const RenormTrace<Real>& trace, int n, int offset, std::size_t max_intervals) {
  if (offset != 0 && offset != 1) throw Error(ErrorKind::InvalidArgument, "offset must be 0 or 1");
  const auto& s = trace.level(n);
  const int d = s.size();
  BigInt total = 0;
  for (const auto& q : s.q) total += q;
  if (total > BigInt(max_intervals)) throw Error(ErrorKind::BudgetExceeded, "partition larger than the budget");

  PartitionSnapshot<Real> p;
  p.level = n;
  p.offset = offset;
  const auto count = total.template convert_to<std::size_t>();
  p.tags.reserve(count);
  p.left.reserve(count);
  p.right.reserve(count);
  const auto& f = trace.map();
  for (int a = 0; a < d; ++a) {
    const auto iv = s.interval(a);
    Real x = iv.lo, y = iv.hi;
    std::uint64_t i = 0;
    auto record = [&] {
      p.tags.push_back({a, i});
      p.left.push_back(x);
      p.right.push_back(y);
    };
    trace.for_each_base_letter(n, a, [&](int b) {
      if (offset == 0) record();
      const auto& branch = f.branch(b);
      x = branch(x);
      y = branch(y);
      ++i;
      if (offset == 1) record();
    });
  }
  p.norm = Real(0);
  for (std::size_t k = 0; k < p.size(); ++k) p.norm = std::max(p.norm, p.right[k] - p.left[k]);
  return p;
}

template <class Real>
std::vector<Jet2<Real>> zoomed_branch(const RenormTrace<Real>& trace, int n, int letter, int grid) {
  if (grid < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least two points");
  const auto iv = trace.level(n).interval(letter);
  const Real w = iv.width();
  // Offsets from the left end keep the relative accuracy of the zoom even
  // when I_alpha^n is many orders of magnitude below the domain scale.
  std::vector<Jet2<Real>> pts(grid);
  for (int k = 0; k < grid; ++k) pts[k] = Jet2<Real>{k == grid - 1 ? w : w * Real(k) / Real(grid - 1), Real(1), Real(0)};
  trace.apply_level_offsets(n, letter, iv.lo, pts);
  const Real span = pts.back().value;
  for (auto& p : pts) {
    p.value = p.value / span;
    p.d1 = p.d1 * w / span;
    p.d2 = p.d2 * w * w / span;
  }
  pts.front().value = Real(0);
  pts.back().value = Real(1);
  return pts;
}

template <class Real>
Real mean_nonlinearity_level(const RenormTrace<Real>& trace, int n, int letter) {
  using std::log;
  const auto iv = trace.level(n).interval(letter);
  std::vector<Jet2<Real>> ends{{iv.lo, Real(1), Real(0)}, {iv.hi, Real(1), Real(0)}};
  trace.apply_level_jets(n, letter, ends);
  return log(ends[1].d1) - log(ends[0].d1);
}

template <class Real>
Real mean_nonlinearity_orbit_sum(const RenormTrace<Real>& trace, int n, int letter) {
  const auto iv = trace.level(n).interval(letter);
  const auto& f = trace.map();
  Real x = iv.lo, y = iv.hi, total(0);
  trace.for_each_base_letter(n, letter, [&](int b) {
    const auto& branch = f.branch(b);
    total += nonlinearity_integral(branch, x, y);
    x = branch(x);
    y = branch(y);
  });
  return total;
}

template <class Real>
GeometryReport geometry_report(const RenormTrace<Real>& trace, int n, int grid) {
  const auto& s = trace.level(n);
  const int d = s.size();
  GeometryReport r;
  r.level = n;
  Real dmin = s.length, dmax(0), imin = s.length, imax(0);
  for (int a = 0; a < d; ++a) {
    const Real dl = s.interval(a).width(), il = s.image_interval(a).width();
    dmin = std::min(dmin, dl);
    dmax = std::max(dmax, dl);
    imin = std::min(imin, il);
    imax = std::max(imax, il);
  }
  r.domain_ratio = to_double(dmax / dmin);
  r.image_ratio = to_double(imax / imin);
  const Real a0 = s.cuts[d] - s.cuts[d - 1], a1 = s.image_cuts[d] - s.image_cuts[d - 1];
  r.type_ratio = to_double(std::min(a0, a1) / std::max(a0, a1));

  if (grid < 2) return r;
  double sup = 0, inf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < d; ++a) {
    const auto iv = s.interval(a);
    std::vector<Jet2<Real>> pts(grid);
    for (int k = 0; k < grid; ++k) {
      const Real x = k == grid - 1 ? iv.hi : iv.lo + iv.width() * Real(k) / Real(grid - 1);
      pts[k] = Jet2<Real>{x, Real(1), Real(0)};
    }
    trace.apply_level_jets(n, a, pts);
    for (const auto& p : pts) {
      sup = std::max(sup, to_double(p.d1));
      inf = std::min(inf, to_double(p.d1));
    }
  }
  r.derivative_sup = sup;
  r.derivative_inf = inf;
  return r;
}

template <class Real>
Giem<Real> group_two(const Giem<Real>& f) {
  const int d = f.size();
  const int jumps = genus_one_discontinuities(f);
  if (jumps != 1)
    throw Error(ErrorKind::TooManyDiscontinuities,
                "grouping needs exactly one discontinuity, found " + std::to_string(jumps));
  if (d == 2) return f;
  using std::abs;
  const auto cuts = f.cuts();
  const Real tol = 1000 * epsilon<Real>() * std::max(Real(1), f.length());
  int split = -1;
  for (int i = 1; i < d; ++i)
    if (abs(f.apply_left_limit(cuts[i]) - f.apply(cuts[i])) > tol) split = i;

  auto glue = [&](int from, int to) {
    std::vector<Real> breaks(cuts.begin() + from, cuts.begin() + to + 1);
    std::vector<SmoothMap<Real>> pieces;
    for (int i = from + 1; i <= to; ++i) pieces.push_back(f.branch(f.perm().letter_at(0, i)));
    if (pieces.size() == 1) return pieces.front();
    return SmoothMap<Real>::piecewise(std::move(breaks), std::move(pieces));
  };
  auto image_length = [&](int from, int to) {
    Real total(0);
    for (int i = from + 1; i <= to; ++i) total += f.image_lengths()[f.perm().letter_at(0, i)];
    return total;
  };
  std::vector<SmoothMap<Real>> branches{glue(0, split), glue(split, d)};
  std::vector<Real> lengths{cuts[split] - cuts[0], cuts[d] - cuts[split]};
  std::vector<Real> image_lengths{image_length(0, split), image_length(split, d)};
  const bool a_first = f.apply(cuts[0]) < f.apply(cuts[split]);
  PermPair perm({1, 2}, a_first ? std::vector<int>{1, 2} : std::vector<int>{2, 1});
  return Giem<Real>(Alphabet::standard(2), perm, f.left(), lengths, image_lengths, branches);
}

template <class Real>
Prop31Report check_prop31(const Giem<Real>& f, int i_max, int grid, double tol) {
  using std::abs;
  const int d = f.size();
  const auto two = group_two(f);
  const auto t2 = RenormTrace<Real>::renormalize(two, i_max);
  const auto td = RenormTrace<Real>::renormalize(f, (d - 1) * (i_max + 1) + 2);
  Prop31Report r;
  const Real rtol(tol);

  auto dump = [&](int i, int m) {
    std::ostringstream os;
    os << "2-level " << i << " (|I| = " << to_double(t2.level(i).length) << ")";
    if (m >= 0) os << " vs d-level " << m << " (|I| = " << to_double(td.level(m).length) << ")";
    os << "; matched so far:";
    for (int v : r.m) os << ' ' << v;
    return os.str();
  };

  int m = 0;
  const int last = std::min(i_max, t2.depth());
  for (int i = 0; i <= last; ++i) {
    const auto& s2 = t2.level(i);
    while (m <= td.depth() && td.level(m).length > s2.length * (1 + rtol)) ++m;
    if (m > td.depth()) {
      if (td.stop_reason() != StopReason::Completed)
        throw Error(ErrorKind::PrecisionExhausted, "d-interval tower stopped early: " + dump(i, -1));
      throw Error(ErrorKind::CorrespondenceMismatch, "no d-level matches " + dump(i, -1));
    }
    const auto& sd = td.level(m);
    if (abs(sd.length - s2.length) > rtol * s2.length)
      throw Error(ErrorKind::CorrespondenceMismatch, "interval lengths differ at " + dump(i, m));
    if (!r.m.empty() && m - r.m.back() >= d)
      throw Error(ErrorKind::CorrespondenceMismatch, "gap of " + std::to_string(m - r.m.back()) + " at " + dump(i, m));

    double cut_err = 0;
    for (const auto& c2 : s2.cuts) {
      Real best = s2.length;
      for (const auto& cd : sd.cuts) best = std::min(best, abs(cd - c2));
      cut_err = std::max(cut_err, to_double(best / s2.length));
    }
    double val_err = 0;
    for (int k = 0; k < grid; ++k) {
      const Real x = s2.left + s2.length * (Real(k) + Real(0.5)) / Real(grid);
      const Real diff = abs(t2.apply_level(i, x) - td.apply_level(m, x));
      val_err = std::max(val_err, to_double(diff / s2.length));
    }
    if (cut_err > tol || val_err > tol)
      throw Error(ErrorKind::CorrespondenceMismatch, "cut or value disagreement at " + dump(i, m));
    r.max_cut_error = std::max(r.max_cut_error, cut_err);
    r.max_value_error = std::max(r.max_value_error, val_err);
    r.m.push_back(m);
  }
  const auto& steps = t2.steps();
  for (std::size_t k = 0; k < steps.size() && static_cast<int>(k) < last; ++k)
    if (k == 0 || steps[k].type != steps[k - 1].type) r.rot_levels.push_back(static_cast<int>(k));
  return r;
}

template <class Real>
FirstReturn<Real> first_return_bruteforce(const Giem<Real>& f, const Interval<Real>& J,
                                          const std::vector<Real>& samples, std::uint64_t max_iter) {
  FirstReturn<Real> out;
  for (const auto& x : samples) {
    if (!J.contains(x)) throw Error(ErrorKind::DomainViolation, "sample outside the return interval");
    Real y = f.apply(x);
    std::uint64_t t = 1;
    while (!J.contains(y)) {
      if (++t > max_iter) throw Error(ErrorKind::MaxIterations, "no return within the iteration budget");
      y = f.apply(y);
    }
    out.x.push_back(x);
    out.time.push_back(t);
    out.value.push_back(y);
  }
  return out;
}

template <class Real>
std::vector<Real> letter_measures(const PartitionSnapshot<Real>& p, int d, const Real& total) {
  std::vector<Real> out(d, Real(0));
  for (std::size_t k = 0; k < p.size(); ++k) out[p.tags[k].letter] += p.right[k] - p.left[k];
  for (auto& v : out) v /= total;
  return out;
}

template <class Real>
ConvergenceRow convergence_row(const RenormTrace<Real>& trace, int n, int letter, int grid,
                               const PartitionSnapshot<Real>& tilde, const Real& base_mean,
                               const Real& partition_norm) {
  using std::abs;
  ConvergenceRow row;
  row.n = n;
  row.letter = letter;
  const Real big_n = mean_nonlinearity_level(trace, n, letter);
  row.mean_nonlinearity = to_double(big_n);
  const auto jets = zoomed_branch(trace, n, letter, grid);
  row.d_moebius = to_double(c2_distance(jets, sample_jets(SmoothMap<Real>::moebius(big_n), grid)));
  row.d_identity = to_double(c2_distance_to_identity(jets));
  const Real ell = letter_measures(tilde, trace.map().size(), trace.map().length())[letter];
  row.thm2_residual = to_double(abs(big_n - ell * base_mean));
  row.len_level = to_double(trace.level(n).length);
  row.partition_norm = to_double(partition_norm);
  return row;
}

template <class Real>
std::vector<ConvergenceRow> convergence_table(const RenormTrace<Real>& trace, int grid, int n_last) {
  const int last = n_last < 0 ? trace.depth() : std::min(n_last, trace.depth());
  const Real base_mean = mean_nonlinearity(trace.map());
  std::vector<ConvergenceRow> rows;
  for (int n = 0; n <= last; ++n) {
    const auto tilde = partition(trace, n, 1);
    const auto plain = partition(trace, n, 0);
    for (int a = 0; a < trace.map().size(); ++a)
      rows.push_back(convergence_row(trace, n, a, grid, tilde, base_mean, plain.norm));
  }
  return rows;
}

#define GIEM_RENORM_INSTANTIATE(R)                                                                              \
  template struct LevelState<R>;                                                                                \
  template class RenormTrace<R>;                                                                                \
  template int detect_type(const LevelState<R>&, const RenormOptions&);                                         \
  template PartitionSnapshot<R> partition(const RenormTrace<R>&, int, int, std::size_t);                        \
  template std::vector<Jet2<R>> zoomed_branch(const RenormTrace<R>&, int, int, int);                            \
  template R mean_nonlinearity_level(const RenormTrace<R>&, int, int);                                          \
  template R mean_nonlinearity_orbit_sum(const RenormTrace<R>&, int, int);                                      \
  template GeometryReport geometry_report(const RenormTrace<R>&, int, int);                                     \
  template Giem<R> group_two(const Giem<R>&);                                                                   \
  template Prop31Report check_prop31(const Giem<R>&, int, int, double);                                         \
  template FirstReturn<R> first_return_bruteforce(const Giem<R>&, const Interval<R>&, const std::vector<R>&,    \
                                                  std::uint64_t);                                               \
  template std::vector<R> letter_measures(const PartitionSnapshot<R>&, int, const R&);                          \
  template ConvergenceRow convergence_row(const RenormTrace<R>&, int, int, int, const PartitionSnapshot<R>&,     \
                                          const R&, const R&);                                                  \
  template std::vector<ConvergenceRow> convergence_table(const RenormTrace<R>&, int, int);

GIEM_RENORM_INSTANTIATE(double)
GIEM_RENORM_INSTANTIATE(Extended)

}  // namespace giem
