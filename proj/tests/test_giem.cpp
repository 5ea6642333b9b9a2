#include <cmath>

#include "giem/giem.hpp"
#include "helpers.hpp"

using namespace giem;
using Map = SmoothMap<double>;

namespace {

const double rho = golden<double>();
const PermPair two({1, 2}, {2, 1});

Giem<double> golden_rotation() { return standard_iem<double>({1 - rho, rho}, two); }

Giem<double> three_interval_rotation(double c = 0.2) {
  return standard_iem<double>({c, 1 - rho - c, rho}, PermPair::from_monodromy({2, 3, 1}));
}

void check_tiling(const Giem<double>& g) {
  double total = 0, image_total = 0;
  for (int a = 0; a < g.size(); ++a) {
    total += g.lengths()[a];
    image_total += g.image_lengths()[a];
  }
  CHECK(std::abs(total - g.length()) <= 1e-12);
  CHECK(std::abs(image_total - g.length()) <= 1e-12);
  // Branch images sit where the pi1 order says and do not overlap.
  for (int pos = 1; pos <= g.size(); ++pos) {
    const int a = g.perm().letter_at(1, pos);
    const auto iv = g.interval(a);
    const auto img = g.image_interval(a);
    CHECK(std::abs(g.branch(a)(iv.lo) - img.lo) <= 1e-12);
    CHECK(std::abs(g.branch(a)(iv.hi) - img.hi) <= 1e-12);
    if (pos > 1) CHECK(img.lo >= g.image_interval(g.perm().letter_at(1, pos - 1)).hi - 1e-12);
  }
}

}  // namespace

TEST_CASE("golden rotation as a standard interval exchange") {
  const auto g = golden_rotation();
  CHECK(g.apply(0.1) == doctest::Approx(0.718034).epsilon(1e-6));
  CHECK(g.apply(0.9) == doctest::Approx(0.518034).epsilon(1e-6));
  CHECK(g.letter_at(1 - rho) == 1);
  CHECK(g.letter_at_left_limit(1 - rho) == 0);
  CHECK(g.apply_inverse(g.apply(0.3)) == doctest::Approx(0.3));
  const auto report = validate(g, 1e-12);
  CHECK(report.variation == 0.0);
  CHECK(report.mean_nonlinearity == 0.0);
  CHECK(genus_one_discontinuities(g) == 1);
  check_tiling(g);
  CHECK(throws_kind([&] { g.apply(1.0); }, ErrorKind::DomainViolation));
}

TEST_CASE("discontinuity counts") {
  CHECK(genus_one_discontinuities(three_interval_rotation()) == 1);
  const auto rev = standard_iem<double>({1.0 / 3, 1.0 / 3, 1.0 / 3}, PermPair::from_monodromy({3, 2, 1}));
  validate(rev, 1e-12);
  CHECK(genus_one_discontinuities(rev) == 2);
  CHECK(genus_one_discontinuities(standard_iem<double>({0.2, 0.3, 0.5}, PermPair::from_monodromy({3, 2, 1}))) ==
        2);
}

TEST_CASE("validation failures") {
  // Second interval has negative length: cuts out of order.
  const Giem<double> bad(Alphabet::standard(2), two, 0.0, {0.7, -0.1}, {0.3, 0.3},
                         {Map::identity({0.0, 0.7}), Map::identity({0.6, 0.7})});
  CHECK(throws_kind([&] { validate(bad, 1e-12); }, ErrorKind::NonMonotoneBranch));
  const auto reducible = standard_iem<double>({0.5, 0.5}, PermPair({1, 2}, {1, 2}));
  CHECK(throws_kind([&] { validate(reducible, 1e-12); }, ErrorKind::ReduciblePerm));
  // Branches that do not land on their image slots.
  const Giem<double> gap(Alphabet::standard(2), two, 0.0, {0.4, 0.6}, {0.4, 0.6},
                         {Map::affine(1.0, 0.5, {0.0, 0.4}), Map::affine(1.0, -0.4, {0.4, 1.0})});
  CHECK(throws_kind([&] { validate(gap, 1e-12); }, ErrorKind::TilingGap));
}

TEST_CASE("piecewise Moebius maps") {
  const std::vector<double> lengths{1 - rho, rho};
  const auto pm0 = piecewise_moebius<double>(lengths, lengths, two, {0.0, 0.0});
  const auto g = golden_rotation();
  for (double x : {0.0, 0.2, 0.5, 0.77, 0.99}) CHECK(pm0.apply(x) == doctest::Approx(g.apply(x)).epsilon(1e-15));

  const auto pm = piecewise_moebius<double>(lengths, lengths, two, {0.3, -0.3});
  const auto report = validate(pm, 1e-12);
  double zoom_sum = 0;
  for (int a = 0; a < 2; ++a) {
    const auto iv = pm.interval(a);
    zoom_sum += nonlinearity_integral(zoom(pm.branch(a), iv.lo, iv.hi), 0.0, 1.0);
  }
  CHECK(std::abs(report.mean_nonlinearity - zoom_sum) <= 1e-12);
  CHECK(report.variation > 0);
  check_tiling(pm);

  const auto pm4 = piecewise_moebius<double>(lengths, lengths, two, {0.4, -0.4});
  validate(pm4, 1e-12);
  const std::vector<double> ns{0.4, -0.4};
  for (int a = 0; a < 2; ++a) {
    const auto iv = pm4.interval(a);
    CHECK(c2_distance(zoom(pm4.branch(a), iv.lo, iv.hi), Map::moebius(ns[a])) < 1e-12);
  }
  CHECK(throws_kind([&] { piecewise_moebius<double>({0.5, 0.5}, {0.5, 0.6}, two, {0.0, 0.0}); },
                    ErrorKind::IncompatibleLengths));

  // Different domain and image lengths.
  const auto skew = piecewise_moebius<double>({0.3, 0.7}, {0.45, 0.55}, two, {1.0, -0.2});
  validate(skew, 1e-12);
  check_tiling(skew);
  CHECK(mean_nonlinearity(skew) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("conjugated rotations") {
  const auto plain = conjugated_rotation(Map::identity(), rho);
  const auto g = golden_rotation();
  CHECK(plain.cuts() == g.cuts());
  CHECK(plain.image_cuts() == g.image_cuts());

  const auto bumped = conjugated_rotation(Map::bump(0.05), rho);
  const auto report = validate(bumped, 1e-12);
  CHECK(bumped.size() == 2);
  CHECK(genus_one_discontinuities(bumped) == 1);
  CHECK(report.variation > 0);
  CHECK(std::abs(report.mean_nonlinearity) < 1e-12);
  CHECK(bumped.branch(0)(0.3) != doctest::Approx(0.3 + rho));
  CHECK(std::abs(rotation_number(bumped, 10000, 0.1) - rho) < 1e-3);
  check_tiling(bumped);

  // A conjugacy with an interior break gets extra cuts but still one jump.
  const Map pw = Map::piecewise({0.0, 0.4, 1.0}, {Map::affine_between({0.0, 0.4}, {0.0, 0.5}),
                                                  Map::affine_between({0.4, 1.0}, {0.5, 1.0})});
  const auto broken = conjugated_rotation(pw, rho);
  validate(broken, 1e-12);
  CHECK(broken.size() == 4);
  CHECK(genus_one_discontinuities(broken) == 1);
  CHECK(std::abs(rotation_number(broken, 10000, 0.1) - rho) < 1e-3);

  CHECK(throws_kind([] { conjugated_rotation(Map::affine(0.5, 0.0), rho); }, ErrorKind::NotInvertible));
}

TEST_CASE("refinement and post-rotation") {
  const auto g = golden_rotation();
  const auto r = refine(g, 0.2);
  CHECK(r.size() == 3);
  CHECK(monodromy(r.perm()) == Monodromy{2, 3, 1});
  validate(r, 1e-12);
  for (double x : {0.05, 0.25, 0.5, 0.9}) CHECK(r.apply(x) == doctest::Approx(g.apply(x)));
  CHECK(genus_one_discontinuities(r) == 1);

  const auto three = three_interval_rotation();
  for (int k = 0; k < 3; ++k) CHECK(r.cuts()[k] == doctest::Approx(three.cuts()[k]));

  const auto pm = piecewise_moebius<double>({1 - rho, rho}, {1 - rho, rho}, two, {0.3, -0.3});
  const auto shifted = rotate_after(pm, 0.05);
  validate(shifted, 1e-12);
  CHECK(shifted.size() == 3);
  CHECK(genus_one_discontinuities(shifted) == 1);
  for (double x : {0.1, 0.4, 0.6, 0.95}) {
    double y = pm.apply(x) + 0.05;
    if (y >= 1) y -= 1;
    CHECK(shifted.apply(x) == doctest::Approx(y).epsilon(1e-14));
  }
  CHECK(mean_nonlinearity(shifted) == doctest::Approx(mean_nonlinearity(pm)).epsilon(1e-12));
}

TEST_CASE("zero-mean calibration") {
  const std::function<Giem<double>(const double&)> standard = [](const double&) { return golden_rotation(); };
  CHECK(calibrate_zero_mean(standard, 0.0, 1.0).parameter == 0.0);

  const std::function<Giem<double>(const double&)> family = [](const double& t) {
    return piecewise_moebius<double>({1 - rho, rho}, {1 - rho, rho}, two, {t, -0.3});
  };
  const auto cal = calibrate_zero_mean(family, 0.0, 1.0);
  CHECK(std::abs(mean_nonlinearity(cal.map)) < 1e-12);
  CHECK(cal.parameter == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(throws_kind([&] { calibrate_zero_mean(family, 0.5, 1.0); }, ErrorKind::NoSignChange));
}

TEST_CASE("rotation tuning") {
  const auto pm = piecewise_moebius<double>({1 - rho, rho}, {1 - rho, rho}, two, {0.3, -0.3});
  const std::function<Giem<double>(const double&)> family = [&](const double& s) { return rotate_after(pm, s); };
  const auto tuned = tune_rotation(family, rho, -0.2, 0.2, 100000);
  CHECK(std::abs(rotation_number(tuned.map, 200000, 0.0) - rho) < 1e-4);
}
