#include <cmath>
#include <random>

#include "giem/smoothmap.hpp"
#include "helpers.hpp"

using namespace giem;
using Map = SmoothMap<double>;

namespace {

// Central differences of the value, step 1e-5.
Jet2<double> finite_difference_jet(const Map& m, double x) {
  const double h = 1e-5;
  const double f0 = m(x), fp = m(x + h), fm = m(x - h);
  return {f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)};
}

std::vector<Map> sample_maps() {
  return {
      Map::affine(2.0, 0.1),
      Map::moebius(0.7),
      Map::moebius(-1.3),
      Map::general_moebius(2.0, 0.5, 0.3, 1.0, {0.0, 1.0}),
      Map::pure_nonlinearity(1.1),
      Map::bump(0.3),
      Map::compose({Map::bump(0.2), Map::moebius(0.5), Map::pure_nonlinearity(-0.4)}),
      Map::restrict_to(Map::bump(0.1), {0.2, 0.7}),
      Map::inverse(Map::bump(0.25)),
      Map::inverse(Map::compose({Map::moebius(0.4), Map::bump(0.1)})),
  };
}

}  // namespace

TEST_CASE("closed-form jets") {
  const auto j = Map::affine(2.0, 0.0).jet(0.3);
  CHECK(j.value == doctest::Approx(0.6));
  CHECK(j.d1 == 2.0);
  CHECK(j.d2 == 0.0);
  for (double x : {0.0, 0.25, 0.9, 1.0}) {
    const auto m = Map::moebius(0.0).jet(x);
    CHECK(m.value == doctest::Approx(x).epsilon(1e-15));
    CHECK(m.d1 == doctest::Approx(1.0));
    CHECK(m.d2 == doctest::Approx(0.0));
  }
  CHECK(Map::moebius(2 * std::log(2.0))(0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(Map::pure_nonlinearity(1.0)(0.5) == doctest::Approx(0.377541).epsilon(1e-6));
}

TEST_CASE("derivatives match central differences for every node kind") {
  std::mt19937_64 rng(7);
  for (const auto& m : sample_maps()) {
    CAPTURE(m.kind_name());
    const auto d = m.domain();
    std::uniform_real_distribution<double> u(d.lo + 1e-3, d.hi - 1e-3);
    for (int k = 0; k < 100; ++k) {
      const double x = u(rng);
      const auto exact = m.jet(x);
      const auto fd = finite_difference_jet(m, x);
      CHECK(exact.d1 > 0);
      CHECK(rel_close(exact.d1, fd.d1, 1e-4));
      CHECK(std::abs(exact.d2 - fd.d2) <= 1e-4 * std::max(1.0, std::abs(exact.d2)));
    }
  }
}

TEST_CASE("nonlinearity") {
  CHECK(Map::affine(3.0, -1.0).nonlinearity(0.4) == 0.0);
  for (double x : {0.0, 0.3, 1.0}) CHECK(Map::pure_nonlinearity(0.8).nonlinearity(x) == doctest::Approx(0.8));

  // n_{f∘g} = n_f(g) g' + n_g, against differences of ln D(f∘g).
  const Map g = Map::bump(0.2);
  const Map f = Map::moebius(0.9);
  const Map fg = g.then(f);
  const double x = 0.25;
  const double expected = f.nonlinearity(g(x)) * g.jet(x).d1 + g.nonlinearity(x);
  CHECK(fg.nonlinearity(x) == doctest::Approx(expected).epsilon(1e-12));
  const double h = 1e-5;
  const double fd = (std::log(fg.jet(x + h).d1) - std::log(fg.jet(x - h).d1)) / (2 * h);
  CHECK(fg.nonlinearity(x) == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("nonlinearity integral") {
  for (double n : {-1.5, 0.0, 0.3, 2.0})
    CHECK(nonlinearity_integral(Map::moebius(n), 0.0, 1.0) == doctest::Approx(n).epsilon(1e-14));
  CHECK(nonlinearity_integral(Map::affine(4.0, 1.0), 0.2, 0.9) == 0.0);
  CHECK(nonlinearity_integral(Map::pure_nonlinearity(1.0), 0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));

  // Additivity under composition.
  const Map g = Map::bump(0.15), f = Map::moebius(-0.6);
  const double a = 0.1, b = 0.8;
  CHECK(nonlinearity_integral(g.then(f), a, b) ==
        doctest::Approx(nonlinearity_integral(g, a, b) + nonlinearity_integral(f, g(a), g(b))).epsilon(1e-13));
}

TEST_CASE("zoom") {
  const auto z = zoom(Map::affine(2.5, 0.3), 0.1, 0.4);
  CHECK(c2_distance(z, Map::identity()) < 1e-14);
  CHECK(c2_distance(zoom(Map::pure_nonlinearity(1.3), 0.0, 1.0), Map::pure_nonlinearity(1.3)) < 1e-13);
  CHECK(c2_distance(zoom(Map::pure_nonlinearity(1.3), 0.0, 0.5), Map::pure_nonlinearity(0.65)) < 1e-13);
  CHECK(throws_kind([] { zoom(Map::bump(0.1), 0.3, 0.3); }, ErrorKind::DegenerateInterval));

  // Nonlinearity rescales by the interval length.
  const Map m = Map::compose({Map::bump(0.2), Map::moebius(0.4)});
  const double a = 0.3, b = 0.45;
  const auto zm = zoom(m, a, b);
  for (double x : {0.0, 0.3, 0.77, 1.0})
    CHECK(zm.nonlinearity(x) == doctest::Approx((b - a) * m.nonlinearity(a + x * (b - a))).epsilon(1e-10));

  // zoom(zoom(m,[a,b]),[c,d]) = zoom(m,[a+c(b-a), a+d(b-a)])
  const double c = 0.2, d = 0.7;
  const auto lhs = zoom(zm, c, d);
  const auto rhs = zoom(m, a + c * (b - a), a + d * (b - a));
  for (int k = 0; k <= 20; ++k) CHECK(std::abs(lhs(k / 20.0) - rhs(k / 20.0)) <= 1e-12);
}

TEST_CASE("Moebius family") {
  for (int k = 0; k <= 10; ++k) CHECK(Map::moebius(0.0)(k / 10.0) == doctest::Approx(k / 10.0));
  const double a = 0.7, b = -1.2;
  const auto composed = Map::moebius(b).then(Map::moebius(a));
  const auto sa = sample_jets(composed, 1025);
  const auto sb = sample_jets(Map::moebius(a + b), 1025);
  for (std::size_t k = 0; k < sa.size(); ++k) CHECK(std::abs(sa[k].value - sb[k].value) <= 1e-12);
  CHECK(c2_distance(composed, Map::moebius(a + b)) < 1e-12);
  CHECK(Map::moebius(1.0).inverse_value(Map::moebius(1.0)(0.3)) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("C2 distance") {
  CHECK(c2_distance(Map::identity(), Map::moebius(0.0)) == 0.0);
  CHECK(throws_kind([] { c2_distance(Map::identity(), Map::identity(), 1); }, ErrorKind::InvalidArgument));
  const double d1 = c2_distance(Map::pure_nonlinearity(0.1), Map::moebius(0.1));
  const double d2 = c2_distance(Map::pure_nonlinearity(0.2), Map::moebius(0.2));
  CHECK(d2 / d1 >= 3.5);
  CHECK(d2 / d1 <= 4.5);
  CHECK(d1 <= 0.02);

  // |M_a - M_b|_{C^2} / |a - b| stays bounded for |a|,|b| <= 1.
  double worst = 0;
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      if (i == j) continue;
      const double a = i / 4.0, b = j / 4.0;
      worst = std::max(worst, c2_distance(Map::moebius(a), Map::moebius(b), 257) / std::abs(a - b));
    }
  CHECK(worst > 0.5);
  CHECK(worst < 5.0);
}

TEST_CASE("from_nonlinearity") {
  const int m = 1025;
  std::vector<double> zero(m, 0.0);
  CHECK(c2_distance(from_nonlinearity(zero), Map::identity()) < 1e-12);

  std::vector<double> constant(m, 0.9);
  CHECK(c2_distance(from_nonlinearity(constant), Map::pure_nonlinearity(0.9)) < 1e-8);

  const Map bump = Map::bump(0.05);
  std::vector<double> samples(m);
  for (int k = 0; k < m; ++k) samples[k] = bump.nonlinearity(k / double(m - 1));
  const auto rebuilt = from_nonlinearity(samples);
  CHECK(c2_distance(rebuilt, bump) < 1e-6);
  CHECK(rebuilt.inverse_value(rebuilt(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("inverse nodes and domain checks") {
  const Map b = Map::bump(0.4);
  for (double y : {0.0, 0.1, 0.5, 0.93, 1.0}) CHECK(b(b.inverse_value(y)) == doctest::Approx(y).epsilon(1e-14));
  const Map inv = Map::inverse(b);
  const auto j = inv.jet(0.3);
  const auto fwd = b.jet(j.value);
  CHECK(j.d1 * fwd.d1 == doctest::Approx(1.0));
  CHECK(throws_kind([] { Map::moebius(0.5).jet(1.5); }, ErrorKind::DomainViolation));
  CHECK(throws_kind([] { Map::bump(1.2); }, ErrorKind::NonMonotoneBranch));
  CHECK(throws_kind([] { Map::compose({Map::affine(3.0, 0.0), Map::moebius(0.1)}); }, ErrorKind::DomainViolation));
}

TEST_CASE("piecewise maps and break points") {
  const Map left = Map::affine_between({0.0, 0.5}, {0.0, 0.3});
  const Map right = Map::affine_between({0.5, 1.0}, {0.3, 1.0});
  const Map pw = Map::piecewise({0.0, 0.5, 1.0}, {left, right});
  CHECK(pw(0.25) == doctest::Approx(0.15));
  CHECK(pw(0.75) == doctest::Approx(0.65));
  CHECK(pw.inverse_value(0.65) == doctest::Approx(0.75));
  REQUIRE(pw.break_points().size() == 1);
  CHECK(pw.break_points()[0] == doctest::Approx(0.5));
  // Composed after a bump the break pulls back through the bump.
  const Map c = Map::bump(0.1).then(pw);
  REQUIRE(c.break_points().size() == 1);
  CHECK(Map::bump(0.1)(c.break_points()[0]) == doctest::Approx(0.5));
  CHECK(Map::bump(0.1).break_points().empty());
}

TEST_CASE("zoomed bump branches obey the rescaling bounds") {
  const Map f = Map::bump(0.05);
  const auto meta = f.meta();
  REQUIRE(meta.c1.has_value());
  const auto est = estimate_smoothness(f);
  CHECK(*est.c1 <= *meta.c1 * (1 + 1e-9));
  CHECK(*est.c0 <= *meta.c0 * (1 + 1e-9));
  for (double delta : {0.1, 0.01, 0.001}) {
    const double a = 0.37;
    const auto z = zoom(f, a, a + delta);
    double sup = 0, var = 0;
    for (int k = 0; k <= 64; ++k) {
      sup = std::max(sup, std::abs(z.nonlinearity(k / 64.0)));
      var = std::max(var, std::abs(z.nonlinearity(k / 64.0) - z.nonlinearity(0.0)) / std::pow(k / 64.0 + 1e-300, 1.0));
    }
    CHECK(sup <= *meta.c1 * delta);
    CHECK(var <= *meta.c0 * std::pow(delta, 2.0) + 1e-15);
  }
}

TEST_CASE("zoomed bump-Moebius branches approach the Moebius family at order delta^2") {
  const Map f = Map::moebius(0.6).then(Map::bump(0.08));
  const double a = 0.21;
  auto dist = [&](double delta) {
    const auto z = zoom(f, a, a + delta);
    const double n = nonlinearity_integral(z, 0.0, 1.0);
    return c2_distance(z, Map::moebius(n));
  };
  for (double delta : {0.04, 0.02, 0.01}) {
    const double ratio = dist(delta) / dist(delta / 2);
    CAPTURE(delta);
    CHECK(ratio >= std::pow(2.0, 1.8));
  }
}

TEST_CASE("extended precision instantiation") {
  set_extended_bits(160);
  using X = SmoothMap<Extended>;
  const auto m = X::moebius(Extended(2) * log(Extended(2)));
  const Extended v = m(Extended("0.5"));
  CHECK(abs(v - Extended(1) / 3) < Extended("1e-45"));
  CHECK(extended_bits() >= 160);
  // saving and restoring the precision must not drift downwards
  for (int bits : {64, 66, 96, 128}) {
    set_extended_bits(bits);
    const int seen = extended_bits();
    CHECK(seen >= bits);
    set_extended_bits(seen);
    CHECK(extended_bits() == seen);
  }
  set_extended_bits(160);
  const auto composed = X::moebius(Extended("0.3")).then(X::moebius(Extended("-0.8")));
  CHECK(to_double(c2_distance(composed, X::moebius(Extended("-0.5")), 65)) < 1e-40);
}
