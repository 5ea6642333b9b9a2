#include "giem/smoothmap.hpp"

#include <algorithm>
#include <cmath>

#include "giem/errors.hpp"

namespace giem {

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <class Real>
Real max_abs(const Real& a, const Real& b) {
  return std::max(abs(a), abs(b));
}

}  // namespace

template <class Real>
Real domain_slack(const Interval<Real>& domain) {
  const Real scale = std::max(Real(1), std::max(max_abs(domain.lo, domain.hi), domain.width()));
  return sqrt(epsilon<Real>()) * scale;
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::make(Node node, const Interval<Real>& domain, SmoothnessMeta meta) {
  if (!(domain.lo < domain.hi))
    throw Error(ErrorKind::DegenerateInterval, "empty domain for a smooth map");
  auto data = std::make_shared<Data>(Data{std::move(node), domain, meta, domain_slack(domain), {}});
  const SmoothMap probe(data);
  data->image = {probe.jet_unchecked(domain.lo).value, probe.jet_unchecked(domain.hi).value};
  return SmoothMap(std::move(data));
}

template <class Real>
SmoothMap<Real>::SmoothMap() : SmoothMap(identity()) {}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::identity(const Interval<Real>& domain) {
  return affine(Real(1), Real(0), domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::affine(const Real& slope, const Real& offset, const Interval<Real>& domain) {
  if (!(slope > 0)) throw Error(ErrorKind::NonMonotoneBranch, "affine slope must be positive");
  return make(node::Affine<Real>{slope, offset}, domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::affine_between(const Interval<Real>& from, const Interval<Real>& to) {
  if (!(from.width() > 0) || !(to.width() > 0))
    throw Error(ErrorKind::DegenerateInterval, "affine_between needs nondegenerate intervals");
  const Real slope = to.width() / from.width();
  return affine(slope, to.lo - slope * from.lo, from);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::moebius(const Real& n) {
  return make(node::MoebiusN<Real>{n, exp(-n / 2)}, {Real(0), Real(1)});
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::general_moebius(const Real& a, const Real& b, const Real& c, const Real& d,
                                                 const Interval<Real>& domain) {
  if (!(a * d - b * c > 0)) throw Error(ErrorKind::NonMonotoneBranch, "Moebius determinant must be positive");
  const Real at_lo = c * domain.lo + d;
  const Real at_hi = c * domain.hi + d;
  if (!(at_lo * at_hi > 0)) throw Error(ErrorKind::DomainViolation, "Moebius pole inside the domain");
  return make(node::GeneralMoebius<Real>{a, b, c, d}, domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::pure_nonlinearity(const Real& n) {
  return make(node::PureNonlinearity<Real>{n, giem::expm1(n)}, {Real(0), Real(1)});
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::bump(const Real& t) {
  if (!(abs(t) < 1)) throw Error(ErrorKind::NonMonotoneBranch, "bump amplitude must satisfy |t| < 1");
  // n(x) = -2 pi t sin(2 pi x) / (1 + t cos(2 pi x)), Lipschitz, so nu = 1.
  SmoothnessMeta meta;
  const double td = std::abs(to_double(t));
  const double twopi = 2 * M_PI;
  meta.nu = 1.0;
  meta.c1 = twopi * td / std::sqrt(std::max(1e-300, 1 - td * td));
  // |n'| <= 4 pi^2 t (1 + t) / (1 - t)^2 is a simple upper bound.
  meta.c0 = twopi * twopi * td * (1 + td) / ((1 - td) * (1 - td));
  return make(node::Bump<Real>{t}, {Real(0), Real(1)}, meta);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::compose(const std::vector<SmoothMap>& parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "empty composition");
  std::vector<SmoothMap> flat;
  for (const auto& p : parts) {
    if (auto* c = std::get_if<node::Compose<Real>>(&p.node())) {
      for (const auto& q : c->parts) flat.push_back(q);
    } else {
      flat.push_back(p);
    }
  }
  // Merge runs of affine factors; the merged factor keeps the domain of
  // the first one.
  std::vector<SmoothMap> merged;
  for (const auto& p : flat) {
    if (!merged.empty() && merged.back().is_affine() && p.is_affine()) {
      const auto& a = std::get<node::Affine<Real>>(merged.back().node());
      const auto& b = std::get<node::Affine<Real>>(p.node());
      merged.back() = affine(b.slope * a.slope, b.slope * a.offset + b.offset, merged.back().domain());
    } else {
      merged.push_back(p);
    }
  }
  // The range reached by the chain must fit each next domain.
  Interval<Real> reach = merged.front().domain();
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    reach = {merged[i].jet(reach.lo).value, merged[i].jet(reach.hi).value};
    const auto& dom = merged[i + 1].domain();
    const Real slack = domain_slack(dom);
    if (reach.lo < dom.lo - slack || reach.hi > dom.hi + slack)
      throw Error(ErrorKind::DomainViolation, "composition chain: image does not fit the next domain");
  }
  if (merged.size() == 1) return merged.front();
  const auto domain = merged.front().domain();
  return make(node::Compose<Real>{std::move(merged)}, domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::restrict_to(const SmoothMap& m, const Interval<Real>& sub) {
  const Real slack = domain_slack(m.domain());
  if (sub.lo < m.domain().lo - slack || sub.hi > m.domain().hi + slack)
    throw Error(ErrorKind::DomainViolation, "restriction outside the domain");
  return make(node::Restrict<Real>{{m}}, sub, m.meta());
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::inverse(const SmoothMap& m) {
  if (auto* a = std::get_if<node::Affine<Real>>(&m.node()))
    return affine(1 / a->slope, -a->offset / a->slope, m.image());
  return make(node::Inverse<Real>{{m}}, m.image());
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::piecewise(std::vector<Real> breaks, std::vector<SmoothMap> pieces) {
  if (pieces.empty() || breaks.size() != pieces.size() + 1)
    throw Error(ErrorKind::InvalidArgument, "piecewise map needs one more break than pieces");
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j)
    if (!(breaks[j] < breaks[j + 1])) throw Error(ErrorKind::NonMonotoneBranch, "piecewise breaks out of order");
  const Interval<Real> domain{breaks.front(), breaks.back()};
  return make(node::Piecewise<Real>{std::move(breaks), std::move(pieces)}, domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::tabulated(const Real& lo, const Real& step, std::vector<Real> value,
                                           std::vector<Real> d1, std::vector<Real> d2) {
  if (value.size() < 2 || d1.size() != value.size() || d2.size() != value.size())
    throw Error(ErrorKind::InvalidArgument, "tabulated map needs matching sample vectors");
  const Interval<Real> domain{lo, lo + step * Real(static_cast<long>(value.size() - 1))};
  return make(node::Tabulated<Real>{lo, step, std::move(value), std::move(d1), std::move(d2)}, domain);
}

template <class Real>
SmoothMap<Real> SmoothMap<Real>::with_meta(const SmoothnessMeta& meta) const {
  return make(data_->node, data_->domain, meta);
}

template <class Real>
Interval<Real> SmoothMap<Real>::image() const {
  return data_->image;
}

template <class Real>
std::string SmoothMap<Real>::kind_name() const {
  return std::visit(overloaded{
                        [](const node::Affine<Real>&) { return "affine"; },
                        [](const node::MoebiusN<Real>&) { return "moebius"; },
                        [](const node::GeneralMoebius<Real>&) { return "general_moebius"; },
                        [](const node::PureNonlinearity<Real>&) { return "pure_nonlinearity"; },
                        [](const node::Bump<Real>&) { return "bump"; },
                        [](const node::Compose<Real>&) { return "compose"; },
                        [](const node::Restrict<Real>&) { return "restrict"; },
                        [](const node::Inverse<Real>&) { return "inverse"; },
                        [](const node::Tabulated<Real>&) { return "tabulated"; },
                        [](const node::Piecewise<Real>&) { return "piecewise"; },
                    },
                    data_->node);
}

template <class Real>
void SmoothMap<Real>::check_domain(const Real& x) const {
  const auto& d = domain();
  const Real& slack = data_->slack;
  if (!(x >= d.lo - slack && x <= d.hi + slack))
    throw Error(ErrorKind::DomainViolation, "point " + std::to_string(to_double(x)) + " outside [" +
                                                std::to_string(to_double(d.lo)) + ", " +
                                                std::to_string(to_double(d.hi)) + "]");
}

template <class Real>
Jet2<Real> SmoothMap<Real>::jet(const Real& x) const {
  check_domain(x);
  return jet_unchecked(x);
}

template <class Real>
Jet2<Real> SmoothMap<Real>::jet(const Jet2<Real>& in) const {
  const Jet2<Real> f = jet(in.value);
  return {f.value, f.d1 * in.d1, f.d2 * in.d1 * in.d1 + f.d1 * in.d2};
}

namespace {

// Quintic Hermite basis on [0,1] and its first two derivatives, in the order
// p0, v0, a0, a1, v1, p1.
template <class Real>
void quintic_basis(const Real& t, Real (&h)[6], Real (&dh)[6], Real (&ddh)[6]) {
  const Real t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  h[0] = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  h[1] = t - 6 * t3 + 8 * t4 - 3 * t5;
  h[2] = (t2 - 3 * t3 + 3 * t4 - t5) / 2;
  h[3] = (t3 - 2 * t4 + t5) / 2;
  h[4] = -4 * t3 + 7 * t4 - 3 * t5;
  h[5] = 10 * t3 - 15 * t4 + 6 * t5;
  dh[0] = -30 * t2 + 60 * t3 - 30 * t4;
  dh[1] = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  dh[2] = (2 * t - 9 * t2 + 12 * t3 - 5 * t4) / 2;
  dh[3] = (3 * t2 - 8 * t3 + 5 * t4) / 2;
  dh[4] = -12 * t2 + 28 * t3 - 15 * t4;
  dh[5] = 30 * t2 - 60 * t3 + 30 * t4;
  ddh[0] = -60 * t + 180 * t2 - 120 * t3;
  ddh[1] = -36 * t + 96 * t2 - 60 * t3;
  ddh[2] = (2 - 18 * t + 36 * t2 - 20 * t3) / 2;
  ddh[3] = (6 * t - 24 * t2 + 20 * t3) / 2;
  ddh[4] = -24 * t + 84 * t2 - 60 * t3;
  ddh[5] = 60 * t - 180 * t2 + 120 * t3;
}

}  // namespace

template <class Real>
Jet2<Real> SmoothMap<Real>::jet_unchecked(const Real& x) const {
  return std::visit(
      overloaded{
          [&](const node::Affine<Real>& a) -> Jet2<Real> {
            return {a.slope * x + a.offset, a.slope, Real(0)};
          },
          [&](const node::MoebiusN<Real>& m) -> Jet2<Real> {
            const Real cm1 = m.c - 1;
            const Real den = 1 + x * cm1;
            const Real d1 = m.c / (den * den);
            return {x * m.c / den, d1, -2 * cm1 * d1 / den};
          },
          [&](const node::GeneralMoebius<Real>& m) -> Jet2<Real> {
            const Real den = m.c * x + m.d;
            const Real det = m.a * m.d - m.b * m.c;
            const Real d1 = det / (den * den);
            return {(m.a * x + m.b) / den, d1, -2 * m.c * d1 / den};
          },
          [&](const node::PureNonlinearity<Real>& p) -> Jet2<Real> {
            if (p.denom == 0) return {x, Real(1), Real(0)};
            const Real d1 = p.n * exp(p.n * x) / p.denom;
            return {giem::expm1(p.n * x) / p.denom, d1, p.n * d1};
          },
          [&](const node::Bump<Real>& b) -> Jet2<Real> {
            const Real w = 2 * pi<Real>();
            const Real s = sin(w * x), c = cos(w * x);
            return {x + b.t * s / w, 1 + b.t * c, -w * b.t * s};
          },
          [&](const node::Compose<Real>& c) -> Jet2<Real> {
            Jet2<Real> j{x, Real(1), Real(0)};
            for (const auto& p : c.parts) j = p.jet(j);
            return j;
          },
          [&](const node::Restrict<Real>& r) -> Jet2<Real> { return r.inner.front().jet(x); },
          [&](const node::Inverse<Real>& inv) -> Jet2<Real> {
            const auto& f = inv.inner.front();
            const Real y = f.inverse_value(x);
            const Jet2<Real> j = f.jet(y);
            return {y, 1 / j.d1, -j.d2 / (j.d1 * j.d1 * j.d1)};
          },
          [&](const node::Tabulated<Real>& t) -> Jet2<Real> {
            const long last = static_cast<long>(t.value.size()) - 2;
            const Real u = (x - t.lo) / t.step;
            using std::floor;
            long i = static_cast<long>(to_double(floor(u)));
            i = std::clamp(i, 0L, last);
            const Real s = u - Real(i);
            Real h[6], dh[6], ddh[6];
            quintic_basis(s, h, dh, ddh);
            const Real st = t.step, st2 = t.step * t.step;
            const Real c[6] = {t.value[i], st * t.d1[i], st2 * t.d2[i], st2 * t.d2[i + 1], st * t.d1[i + 1],
                               t.value[i + 1]};
            Real v(0), v1(0), v2(0);
            for (int k = 0; k < 6; ++k) {
              v += c[k] * h[k];
              v1 += c[k] * dh[k];
              v2 += c[k] * ddh[k];
            }
            return {v, v1 / st, v2 / st2};
          },
          [&](const node::Piecewise<Real>& p) -> Jet2<Real> {
            const auto it = std::upper_bound(p.breaks.begin() + 1, p.breaks.end() - 1, x);
            const auto j = static_cast<std::size_t>(it - (p.breaks.begin() + 1));
            return p.pieces[j].jet(x);
          },
      },
      data_->node);
}

template <class Real>
Real SmoothMap<Real>::nonlinearity(const Real& x) const {
  const auto j = jet(x);
  return j.d2 / j.d1;
}

namespace {

// (s+e)^m - s^m with the factor e pulled out.
template <class Real>
Real power_difference(const Real& s, const Real& e, int m) {
  const Real t = s + e;
  Real sum(0), tp(1);
  for (int j = 0; j < m; ++j) {
    Real sp(1);
    for (int k = 0; k < m - 1 - j; ++k) sp *= s;
    sum += tp * sp;
    tp *= t;
  }
  return e * sum;
}

}  // namespace

template <class Real>
Real SmoothMap<Real>::difference(const Real& x, const Real& h) const {
  if (h == 0) return Real(0);
  return std::visit(
      overloaded{
          [&](const node::Affine<Real>& a) -> Real { return a.slope * h; },
          [&](const node::MoebiusN<Real>& m) -> Real {
            const Real cm1 = m.c - 1;
            return m.c * h / ((1 + (x + h) * cm1) * (1 + x * cm1));
          },
          [&](const node::GeneralMoebius<Real>& m) -> Real {
            const Real det = m.a * m.d - m.b * m.c;
            return det * h / ((m.c * (x + h) + m.d) * (m.c * x + m.d));
          },
          [&](const node::PureNonlinearity<Real>& p) -> Real {
            if (p.denom == 0) return h;
            return exp(p.n * x) * giem::expm1(p.n * h) / p.denom;
          },
          [&](const node::Bump<Real>& b) -> Real {
            const Real w = 2 * pi<Real>();
            const Real half = pi<Real>() * h;
            return h + b.t / pi<Real>() * cos(w * x + half) * sin(half);
          },
          [&](const node::Compose<Real>& c) -> Real {
            Real base = x, off = h;
            for (const auto& p : c.parts) {
              off = p.difference(base, off);
              base = p(base);
            }
            return off;
          },
          [&](const node::Restrict<Real>& r) -> Real { return r.inner.front().difference(x, h); },
          [&](const node::Inverse<Real>& inv) -> Real {
            const auto& f = inv.inner.front();
            const Real u = f.inverse_value(x);
            return inverse_offset(f, u, h, f.jet(u).d1);
          },
          [&](const node::Tabulated<Real>& t) -> Real {
            const long last = static_cast<long>(t.value.size()) - 2;
            using std::floor;
            const Real u0 = (x - t.lo) / t.step;
            const long i = std::clamp(static_cast<long>(to_double(floor(u0))), 0L, last);
            const long i1 = std::clamp(static_cast<long>(to_double(floor((x + h - t.lo) / t.step))), 0L, last);
            if (i != i1) return jet(x + h).value - jet(x).value;
            // Same cell: difference the Hermite polynomial term by term.
            const Real s = u0 - Real(i), e = h / t.step;
            const Real st = t.step, st2 = t.step * t.step;
            const Real c[6] = {t.value[i], st * t.d1[i], st2 * t.d2[i], st2 * t.d2[i + 1], st * t.d1[i + 1],
                               t.value[i + 1]};
            const Real p1 = power_difference(s, e, 1), p2 = power_difference(s, e, 2),
                       p3 = power_difference(s, e, 3), p4 = power_difference(s, e, 4),
                       p5 = power_difference(s, e, 5);
            const Real dh[6] = {-10 * p3 + 15 * p4 - 6 * p5, p1 - 6 * p3 + 8 * p4 - 3 * p5,
                                (p2 - 3 * p3 + 3 * p4 - p5) / 2, (p3 - 2 * p4 + p5) / 2,
                                -4 * p3 + 7 * p4 - 3 * p5, 10 * p3 - 15 * p4 + 6 * p5};
            Real v(0);
            for (int k = 0; k < 6; ++k) v += c[k] * dh[k];
            return v;
          },
          [&](const node::Piecewise<Real>& p) -> Real {
            if (h < 0) return -difference(x + h, -h);
            const Real y = x + h;
            auto piece_of = [&](const Real& z) {
              const auto it = std::upper_bound(p.breaks.begin() + 1, p.breaks.end() - 1, z);
              return static_cast<std::size_t>(it - (p.breaks.begin() + 1));
            };
            const std::size_t j0 = piece_of(x), j1 = piece_of(y);
            if (j0 == j1) return p.pieces[j0].difference(x, h);
            Real total = p.pieces[j0].difference(x, p.breaks[j0 + 1] - x);
            for (std::size_t j = j0 + 1; j < j1; ++j)
              total += p.pieces[j].difference(p.breaks[j], p.breaks[j + 1] - p.breaks[j]);
            return total + p.pieces[j1].difference(p.breaks[j1], y - p.breaks[j1]);
          },
      },
      data_->node);
}

template <class Real>
Real SmoothMap<Real>::inverse_offset(const SmoothMap& f, const Real& u, const Real& h, const Real& d1) {
  // Solve f(u + k) - f(u) = h for k by Newton on the difference.
  if (h == 0) return Real(0);
  // The base point may sit a few ulps off its true orbit, so the offset is
  // only kept inside the tolerated domain, not the exact one.
  const Real k_lo = f.domain().lo - f.data_->slack - u, k_hi = f.domain().hi + f.data_->slack - u;
  Real k = std::clamp(h / d1, k_lo, k_hi);
  const Real tol = 4 * epsilon<Real>() * abs(k);
  for (int iter = 0; iter < 40; ++iter) {
    const Real next = std::clamp(k - (f.difference(u, k) - h) / f.jet(u + k).d1, k_lo, k_hi);
    const Real step = next - k;
    k = next;
    if (abs(step) <= tol) break;
  }
  return k;
}

template <class Real>
Real SmoothMap<Real>::advance_offsets(const Real& x, std::vector<Jet2<Real>>& pts) const {
  auto chain = [](Jet2<Real>& p, const Real& off, const Jet2<Real>& j) {
    p = {off, j.d1 * p.d1, j.d2 * p.d1 * p.d1 + j.d1 * p.d2};
  };
  if (const auto* c = std::get_if<node::Compose<Real>>(&data_->node)) {
    Real base = x;
    for (const auto& part : c->parts) base = part.advance_offsets(base, pts);
    return base;
  }
  if (const auto* r = std::get_if<node::Restrict<Real>>(&data_->node)) return r->inner.front().advance_offsets(x, pts);
  if (const auto* inv = std::get_if<node::Inverse<Real>>(&data_->node)) {
    const auto& f = inv->inner.front();
    const Real u = f.inverse_value(x);
    const Real du = f.jet(u).d1;
    for (auto& p : pts) {
      const Real k = inverse_offset(f, u, p.value, du);
      const Jet2<Real> fj = f.jet(u + k);
      chain(p, k, Jet2<Real>{Real(0), 1 / fj.d1, -fj.d2 / (fj.d1 * fj.d1 * fj.d1)});
    }
    return u;
  }
  for (auto& p : pts) chain(p, difference(x, p.value), jet(x + p.value));
  return (*this)(x);
}

template <class Real>
Real SmoothMap<Real>::newton_inverse(const Real& y, const Real& guess) const {
  Real lo = domain().lo, hi = domain().hi;
  const Real f_lo = data_->image.lo, f_hi = data_->image.hi;
  const Real slack = domain_slack(data_->image);
  if (y < f_lo - slack || y > f_hi + slack)
    throw Error(ErrorKind::DomainViolation, "inverse requested outside the image");
  if (y <= f_lo) return lo;
  if (y >= f_hi) return hi;
  Real x = std::clamp(guess, lo, hi);
  const Real tol = 4 * epsilon<Real>() * std::max(Real(1), max_abs(lo, hi));
  for (int iter = 0; iter < 200; ++iter) {
    const Jet2<Real> j = jet_unchecked(x);
    const Real r = j.value - y;
    if (r == 0) return x;
    if (r > 0)
      hi = x;
    else
      lo = x;
    Real next = x - r / j.d1;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (abs(next - x) <= tol || hi - lo <= tol) return next;
    x = next;
  }
  throw Error(ErrorKind::NotInvertible, "Newton inversion did not converge");
}

template <class Real>
Real SmoothMap<Real>::inverse_value(const Real& y) const {
  return std::visit(
      overloaded{
          [&](const node::Affine<Real>& a) -> Real { return (y - a.offset) / a.slope; },
          [&](const node::MoebiusN<Real>& m) -> Real {
            // M_N^{-1} = M_{-N}
            const Real c = 1 / m.c;
            return y * c / (1 + y * (c - 1));
          },
          [&](const node::GeneralMoebius<Real>& m) -> Real { return (m.d * y - m.b) / (m.a - m.c * y); },
          [&](const node::PureNonlinearity<Real>& p) -> Real {
            if (p.denom == 0) return y;
            return giem::log1p(y * p.denom) / p.n;
          },
          [&](const node::Bump<Real>& b) -> Real {
            const Real w = 2 * pi<Real>();
            return newton_inverse(y, y - b.t * sin(w * y) / w);
          },
          [&](const node::Compose<Real>& c) -> Real {
            Real x = y;
            for (auto it = c.parts.rbegin(); it != c.parts.rend(); ++it) x = it->inverse_value(x);
            return x;
          },
          [&](const node::Restrict<Real>& r) -> Real { return r.inner.front().inverse_value(y); },
          [&](const node::Inverse<Real>& inv) -> Real { return inv.inner.front().jet(y).value; },
          [&](const node::Tabulated<Real>& t) -> Real {
            const auto img = image();
            const Real guess = domain().lo + (y - img.lo) / img.width() * domain().width();
            (void)t;
            return newton_inverse(y, guess);
          },
          [&](const node::Piecewise<Real>& p) -> Real {
            std::size_t j = 0;
            while (j + 1 < p.pieces.size() && p.pieces[j + 1].jet(p.breaks[j + 1]).value <= y) ++j;
            return p.pieces[j].inverse_value(y);
          },
      },
      data_->node);
}

template <class Real>
std::vector<Real> SmoothMap<Real>::break_points() const {
  std::vector<Real> out;
  const auto& d = domain();
  auto keep = [&](const Real& b) {
    if (b > d.lo + domain_slack(d) && b < d.hi - domain_slack(d)) out.push_back(b);
  };
  std::visit(overloaded{
                 [&](const node::Compose<Real>& c) {
                   // Breaks of a later factor pull back through the earlier
                   // ones when the chain actually reaches them.
                   Interval<Real> reach = d;
                   for (std::size_t k = 0; k < c.parts.size(); ++k) {
                     for (Real b : c.parts[k].break_points()) {
                       if (!(b > reach.lo && b < reach.hi)) continue;
                       for (std::size_t m = k; m-- > 0;) b = c.parts[m].inverse_value(b);
                       keep(b);
                     }
                     reach = {c.parts[k](reach.lo), c.parts[k](reach.hi)};
                   }
                 },
                 [&](const node::Restrict<Real>& r) {
                   for (const Real& b : r.inner.front().break_points()) keep(b);
                 },
                 [&](const node::Inverse<Real>& inv) {
                   for (const Real& b : inv.inner.front().break_points()) keep(inv.inner.front()(b));
                 },
                 [&](const node::Piecewise<Real>& p) {
                   for (std::size_t j = 0; j < p.pieces.size(); ++j) {
                     if (j > 0) keep(p.breaks[j]);
                     for (const Real& b : p.pieces[j].break_points()) keep(b);
                   }
                 },
                 [&](const auto&) {},
             },
             data_->node);
  std::sort(out.begin(), out.end());
  return out;
}

template <class Real>
Real nonlinearity_integral(const SmoothMap<Real>& m, const Real& a, const Real& b) {
  return log(m.jet(b).d1) - log(m.jet(a).d1);
}

template <class Real>
SmoothMap<Real> zoom(const SmoothMap<Real>& m, const Real& a, const Real& b) {
  const auto& d = m.domain();
  const Real slack = domain_slack(d);
  const Real tiny = 16 * epsilon<Real>() * std::max(Real(1), max_abs(a, b));
  if (!(b - a > tiny)) throw Error(ErrorKind::DegenerateInterval, "zoom over a degenerate interval");
  if (a < d.lo - slack || b > d.hi + slack) throw Error(ErrorKind::DomainViolation, "zoom interval outside domain");
  const Real fa = m.jet(a).value, fb = m.jet(b).value;
  if (!(fb - fa > tiny)) throw Error(ErrorKind::DegenerateInterval, "zoom image is degenerate");
  const Interval<Real> unit{Real(0), Real(1)};
  const auto in = SmoothMap<Real>::affine_between(unit, {a, b});
  const auto out = SmoothMap<Real>::affine_between({fa, fb}, unit);
  return SmoothMap<Real>::compose({in, m, out});
}

template <class Real>
std::vector<Jet2<Real>> sample_jets(const SmoothMap<Real>& m, int grid) {
  if (grid < 2) throw Error(ErrorKind::InvalidArgument, "grid must have at least 2 points");
  std::vector<Jet2<Real>> out(grid);
  const auto& d = m.domain();
  for (int k = 0; k < grid; ++k) {
    const Real x = k == grid - 1 ? d.hi : d.lo + d.width() * Real(k) / Real(grid - 1);
    out[k] = m.jet(x);
  }
  return out;
}

template <class Real>
Real c2_distance(const std::vector<Jet2<Real>>& a, const std::vector<Jet2<Real>>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error(ErrorKind::InvalidArgument, "c2_distance: bad sample sets");
  Real m0(0), m1(0), m2(0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    m0 = std::max(m0, Real(abs(a[k].value - b[k].value)));
    m1 = std::max(m1, Real(abs(a[k].d1 - b[k].d1)));
    m2 = std::max(m2, Real(abs(a[k].d2 - b[k].d2)));
  }
  return m0 + m1 + m2;
}

template <class Real>
Real c2_distance(const SmoothMap<Real>& m1, const SmoothMap<Real>& m2, int grid) {
  return c2_distance(sample_jets(m1, grid), sample_jets(m2, grid));
}

template <class Real>
Real c2_distance_to_identity(const std::vector<Jet2<Real>>& a) {
  const int grid = static_cast<int>(a.size());
  std::vector<Jet2<Real>> id(grid);
  for (int k = 0; k < grid; ++k) id[k] = {Real(k) / Real(grid - 1), Real(1), Real(0)};
  return c2_distance(a, id);
}

template <class Real>
SmoothMap<Real> from_nonlinearity(const std::vector<Real>& n) {
  const std::size_t m = n.size();
  if (m < 4) throw Error(ErrorKind::InvalidArgument, "from_nonlinearity needs at least 4 samples");
  const Real h = Real(1) / Real(static_cast<long>(m - 1));
  // L(x) = int_0^x n by a fourth-order cell rule on the samples.
  std::vector<Real> L(m, Real(0));
  for (std::size_t i = 0; i + 1 < m; ++i) {
    Real cell;
    if (i == 0)
      cell = (9 * n[0] + 19 * n[1] - 5 * n[2] + n[3]) / 24;
    else if (i + 2 == m)
      cell = (9 * n[m - 1] + 19 * n[m - 2] - 5 * n[m - 3] + n[m - 4]) / 24;
    else
      cell = (-n[i - 1] + 13 * n[i] + 13 * n[i + 1] - n[i + 2]) / 24;
    L[i + 1] = L[i] + h * cell;
  }
  // E = exp(L), E' = n E; F = int E by the trapezoid rule with the
  // Euler-Maclaurin endpoint correction, exact for cubics.
  std::vector<Real> E(m), F(m, Real(0));
  for (std::size_t i = 0; i < m; ++i) E[i] = exp(L[i]);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const Real e0 = n[i] * E[i], e1 = n[i + 1] * E[i + 1];
    F[i + 1] = F[i] + h * (E[i] + E[i + 1]) / 2 + h * h * (e0 - e1) / 12;
  }
  const Real total = F[m - 1];
  std::vector<Real> value(m), d1(m), d2(m);
  for (std::size_t i = 0; i < m; ++i) {
    value[i] = F[i] / total;
    d1[i] = E[i] / total;
    d2[i] = n[i] * d1[i];
  }
  value.front() = Real(0);
  value.back() = Real(1);
  return SmoothMap<Real>::tabulated(Real(0), h, std::move(value), std::move(d1), std::move(d2));
}

template <class Real>
SmoothnessMeta estimate_smoothness(const SmoothMap<Real>& m, double nu, int grid) {
  const auto& d = m.domain();
  std::vector<double> x(grid), nl(grid);
  for (int k = 0; k < grid; ++k) {
    const Real xr = d.lo + d.width() * Real(k) / Real(grid - 1);
    x[k] = to_double(xr);
    nl[k] = to_double(m.nonlinearity(xr));
  }
  SmoothnessMeta meta;
  meta.nu = nu;
  double c1 = 0, c0 = 0;
  for (int k = 0; k < grid; ++k) c1 = std::max(c1, std::abs(nl[k]));
  // Pairs at strides 1, 2, 4, ... cover both short and long range variation.
  for (int stride = 1; stride < grid; stride *= 2)
    for (int k = 0; k + stride < grid; ++k)
      c0 = std::max(c0, std::abs(nl[k + stride] - nl[k]) / std::pow(x[k + stride] - x[k], nu));
  meta.c0 = c0;
  meta.c1 = c1;
  return meta;
}

#define GIEM_INSTANTIATE(R)                                                                        \
  template class SmoothMap<R>;                                                                     \
  template R domain_slack(const Interval<R>&);                                                     \
  template R nonlinearity_integral(const SmoothMap<R>&, const R&, const R&);                       \
  template SmoothMap<R> zoom(const SmoothMap<R>&, const R&, const R&);                             \
  template std::vector<Jet2<R>> sample_jets(const SmoothMap<R>&, int);                             \
  template R c2_distance(const SmoothMap<R>&, const SmoothMap<R>&, int);                           \
  template R c2_distance(const std::vector<Jet2<R>>&, const std::vector<Jet2<R>>&);                \
  template R c2_distance_to_identity(const std::vector<Jet2<R>>&);                                 \
  template SmoothMap<R> from_nonlinearity(const std::vector<R>&);                                  \
  template SmoothnessMeta estimate_smoothness(const SmoothMap<R>&, double, int);

GIEM_INSTANTIATE(double)
GIEM_INSTANTIATE(Extended)

}  // namespace giem
