#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "giem/real.hpp"

namespace giem {

// Value with first and second derivative.
template <class Real>
struct Jet2 {
  Real value{};
  Real d1{1};
  Real d2{0};
};

template <class Real>
struct Interval {
  Real lo{};
  Real hi{};
  Real width() const { return hi - lo; }
  bool contains(const Real& x) const { return lo <= x && x < hi; }
};

// Optional regularity data. nu is the Hoelder exponent of the nonlinearity,
// c0 its Hoelder constant and c1 its sup norm.
struct SmoothnessMeta {
  std::optional<double> nu;
  std::optional<double> c0;
  std::optional<double> c1;
};

template <class Real>
class SmoothMap;

namespace node {

template <class Real>
struct Affine {
  Real slope, offset;
};

// x e^{-N/2} / (1 + x(e^{-N/2} - 1)) on [0,1].
template <class Real>
struct MoebiusN {
  Real n;
  Real c;  // e^{-N/2}
};

// (a x + b) / (c x + d) with a d - b c > 0.
template <class Real>
struct GeneralMoebius {
  Real a, b, c, d;
};

// (e^{N x} - 1) / (e^N - 1) on [0,1]: constant nonlinearity N.
template <class Real>
struct PureNonlinearity {
  Real n;
  Real denom;  // expm1(N)
};

enum class BumpProfile { Sine };

// x + t sin(2 pi x) / (2 pi) on [0,1], |t| < 1.
template <class Real>
struct Bump {
  Real t;
  BumpProfile profile = BumpProfile::Sine;
};

// parts[0] is applied first.
template <class Real>
struct Compose {
  std::vector<SmoothMap<Real>> parts;
};

template <class Real>
struct Restrict {
  std::vector<SmoothMap<Real>> inner;  // exactly one element
};

template <class Real>
struct Inverse {
  std::vector<SmoothMap<Real>> inner;  // exactly one element
};

// Quintic Hermite interpolant of (value, d1, d2) samples on a uniform grid.
template <class Real>
struct Tabulated {
  Real lo, step;
  std::vector<Real> value, d1, d2;
};

// pieces[j] acts on [breaks[j], breaks[j+1]).
template <class Real>
struct Piecewise {
  std::vector<Real> breaks;
  std::vector<SmoothMap<Real>> pieces;
};

}  // namespace node

// An orientation-preserving C^2 map of an interval, stored as an immutable
// expression tree that evaluates value, Df and D^2f in closed form.
template <class Real>
class SmoothMap {
 public:
  using Node = std::variant<node::Affine<Real>, node::MoebiusN<Real>, node::GeneralMoebius<Real>,
                            node::PureNonlinearity<Real>, node::Bump<Real>, node::Compose<Real>,
                            node::Restrict<Real>, node::Inverse<Real>, node::Tabulated<Real>,
                            node::Piecewise<Real>>;

  // Identity on [0,1].
  SmoothMap();

  static SmoothMap identity(const Interval<Real>& domain = {Real(0), Real(1)});
  static SmoothMap affine(const Real& slope, const Real& offset,
                          const Interval<Real>& domain = {Real(0), Real(1)});
  // The affine map taking [a,b] onto [c,d].
  static SmoothMap affine_between(const Interval<Real>& from, const Interval<Real>& to);
  static SmoothMap moebius(const Real& n);
  static SmoothMap general_moebius(const Real& a, const Real& b, const Real& c, const Real& d,
                                   const Interval<Real>& domain);
  static SmoothMap pure_nonlinearity(const Real& n);
  static SmoothMap bump(const Real& t);
  // parts[0] applied first; nested compositions are spliced and adjacent
  // affine factors merged.
  static SmoothMap compose(const std::vector<SmoothMap>& parts);
  static SmoothMap restrict_to(const SmoothMap& m, const Interval<Real>& sub);
  static SmoothMap inverse(const SmoothMap& m);
  static SmoothMap piecewise(std::vector<Real> breaks, std::vector<SmoothMap> pieces);
  static SmoothMap tabulated(const Real& lo, const Real& step, std::vector<Real> value,
                             std::vector<Real> d1, std::vector<Real> d2);

  // next ∘ this
  SmoothMap then(const SmoothMap& next) const { return compose({*this, next}); }

  const Interval<Real>& domain() const { return data_->domain; }
  Interval<Real> image() const;
  const Node& node() const { return data_->node; }
  std::string kind_name() const;
  const SmoothnessMeta& meta() const { return data_->meta; }
  SmoothMap with_meta(const SmoothnessMeta& meta) const;

  Real operator()(const Real& x) const { return jet(x).value; }
  Jet2<Real> jet(const Real& x) const;
  // Chain rule: the jet of this map applied to a jet.
  Jet2<Real> jet(const Jet2<Real>& in) const;
  Real nonlinearity(const Real& x) const;
  // f(x + h) - f(x) without the cancellation of subtracting two values.
  Real difference(const Real& x, const Real& h) const;
  // Moves a base point and a cloud of nearby points together. Each pts[k]
  // holds the offset h_k from x in .value and the jet of the point; on
  // return the offsets are f(x + h_k) - f(x) and the derivatives carry the
  // chain rule. Returns f(x).
  Real advance_offsets(const Real& x, std::vector<Jet2<Real>>& pts) const;
  Real inverse_value(const Real& y) const;

  // Interior points of the domain where the map is only piecewise smooth.
  std::vector<Real> break_points() const;

  bool is_affine() const { return std::holds_alternative<node::Affine<Real>>(data_->node); }

 private:
  struct Data {
    Node node;
    Interval<Real> domain;
    SmoothnessMeta meta;
    Real slack;  // domain_slack(domain), cached
    Interval<Real> image;
  };
  explicit SmoothMap(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  static SmoothMap make(Node node, const Interval<Real>& domain, SmoothnessMeta meta = {});
  void check_domain(const Real& x) const;
  Jet2<Real> jet_unchecked(const Real& x) const;
  Real newton_inverse(const Real& y, const Real& guess) const;
  static Real inverse_offset(const SmoothMap& f, const Real& u, const Real& h, const Real& d1);

  std::shared_ptr<const Data> data_;
};

// Tolerance used when checking that a point lies in a map's domain.
template <class Real>
Real domain_slack(const Interval<Real>& domain);

// Integral of the nonlinearity over [a,b], as ln Df(b) - ln Df(a).
template <class Real>
Real nonlinearity_integral(const SmoothMap<Real>& m, const Real& a, const Real& b);

// Affine rescaling of m restricted to [a,b] to a self-map of [0,1].
template <class Real>
SmoothMap<Real> zoom(const SmoothMap<Real>& m, const Real& a, const Real& b);

// Jets at grid points k/(grid-1), k = 0..grid-1.
template <class Real>
std::vector<Jet2<Real>> sample_jets(const SmoothMap<Real>& m, int grid);

// Sum over value, d1, d2 of the grid maximum of the absolute difference.
// A lower bound for the true C^2 distance.
template <class Real>
Real c2_distance(const SmoothMap<Real>& m1, const SmoothMap<Real>& m2, int grid = 1025);
template <class Real>
Real c2_distance(const std::vector<Jet2<Real>>& a, const std::vector<Jet2<Real>>& b);
// Distance from the identity of sampled jets on the uniform grid.
template <class Real>
Real c2_distance_to_identity(const std::vector<Jet2<Real>>& a);

// The map of [0,1] fixing 0 and 1 whose nonlinearity is the sampled
// function n (uniform grid over [0,1], endpoints included, odd or even
// length >= 4).
template <class Real>
SmoothMap<Real> from_nonlinearity(const std::vector<Real>& samples);

// Grid estimates of sup |n| and the Hoelder constant of n for exponent nu.
template <class Real>
SmoothnessMeta estimate_smoothness(const SmoothMap<Real>& m, double nu = 1.0, int grid = 1025);

}  // namespace giem
