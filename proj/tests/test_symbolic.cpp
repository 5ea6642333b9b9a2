#include <cmath>
#include <random>
#include <set>

#include "giem/catalog.hpp"
#include "giem/combinatorics.hpp"
#include "giem/symbolic.hpp"
#include "helpers.hpp"

using namespace giem;
using Trace = RenormTrace<double>;
using Tree = CylinderTree<double>;

namespace {

const double rho = golden<double>();

// Level-n cylinder whose half-open interval holds x.
std::size_t locate(const Tree& tree, int n, double x) {
  const auto& lv = tree.level(n);
  for (std::size_t k = 0; k < lv.size(); ++k)
    if (x >= lv.left[k] && x < lv.right[k]) return k;
  FAIL("point in no cylinder");
  return 0;
}

template <class Real>
void check_tree_structure(const Giem<Real>& f, int n_max) {
  const auto t = RenormTrace<Real>::renormalize(f, n_max);
  REQUIRE(t.depth() >= n_max);
  const auto tree = CylinderTree<Real>::build(t, n_max);
  for (int n = 0; n <= n_max; ++n) {
    const auto& lv = tree.level(n);
    Real total(0);
    for (std::size_t k = 0; k < lv.size(); ++k) total += tree.measure(n, k);
    CHECK(std::abs(to_double(total) - 1) <= 1e-12);

    // Tag bijection with the orbit intervals f^i(I_alpha^n), 1 <= i <= q.
    const auto p = partition(t, n, 1);
    REQUIRE(p.size() == lv.size());
    std::set<std::pair<int, std::uint64_t>> tags, cyl;
    for (std::size_t k = 0; k < p.size(); ++k) {
      tags.insert({p.tags[k].letter, p.tags[k].index});
      cyl.insert({lv.alpha[k], lv.index[k]});
    }
    CHECK(tags == cyl);
    CHECK(tags.size() == lv.size());

    if (n == 0) continue;
    const auto& up = tree.level(n - 1);
    for (std::size_t k = 0; k < lv.size(); ++k) {
      const auto pk = lv.parent[k];
      CHECK(to_double(lv.left[k] - up.left[pk]) >= -1e-12);
      CHECK(to_double(up.right[pk] - lv.right[k]) >= -1e-12);
      CHECK(admissible_transition(t.steps()[n - 1], up.alpha[pk], tree.letter(n, k)));
    }
  }
}

}  // namespace

TEST_CASE("level-zero cylinders are the images of the letter intervals") {
  for (const auto& f : {catalog::golden_rotation<double>(), catalog::three_interval_rotation<double>(0.1),
                        catalog::bump_golden<double>(0.05)}) {
    const auto t = Trace::renormalize(f, 3);
    const auto cyl = cylinders(t, 0);
    REQUIRE(static_cast<int>(cyl.size()) == f.size());
    for (const auto& c : cyl) {
      REQUIRE(c.word.size() == 1);
      CHECK(c.word[0] == SymbolLetter{c.alpha, 0, 0});
      const auto img = f.image_interval(c.alpha);
      CHECK(std::abs(c.interval.lo - img.lo) <= 1e-12);
      CHECK(std::abs(c.interval.hi - img.hi) <= 1e-12);
    }
  }
}

TEST_CASE("golden level one has three cylinders with the loser split by chi") {
  const auto t = Trace::renormalize(catalog::golden_rotation<double>(), 3);
  const auto& step = t.steps()[0];
  REQUIRE(step.type == 0);
  const auto cyl = cylinders(t, 1);
  REQUIRE(cyl.size() == 3);
  std::set<int> loser_chi;
  for (const auto& c : cyl) {
    if (c.alpha == step.loser) {
      loser_chi.insert(c.word[1].chi);
      // chi = 1 marks the loser's own old orbit (the third case), chi = 0
      // the part that went through the winner (the second case, chi = type).
      CHECK(c.word[0].alpha == (c.word[1].chi == 1 ? step.loser : step.winner));
    } else {
      CHECK(c.word[1].chi == 0);
      CHECK(c.word[0].alpha == c.alpha);
    }
  }
  CHECK(loser_chi == std::set<int>{0, 1});
}

TEST_CASE("cylinders tile, nest and match orbit intervals") {
  // Affine maps tile exactly in binary64. The nonlinear ones carry endpoint
  // rounding of a few 1e-12 in the sum at n = 20, so they run at 128 bits.
  check_tree_structure(catalog::golden_rotation<double>(), 20);
  check_tree_structure(catalog::three_interval_rotation<double>(0.1), 20);
  const auto saved = extended_bits();
  set_extended_bits(128);
  check_tree_structure(catalog::moebius_golden<Extended>(Extended(0.3), Extended(-0.1)), 20);
  check_tree_structure(catalog::bump_golden<Extended>(Extended(0.05)), 12);
  set_extended_bits(saved);
}

TEST_CASE("coding a point by entry times") {
  const auto f = catalog::golden_rotation<double>();
  const auto t = Trace::renormalize(f, 14);
  // f(I_B) = [0, rho) on the golden rotation.
  CHECK(code_point(t, 0.3, 0).word[0] == SymbolLetter{1, 0, 0});
  CHECK(code_point(t, 0.9, 0).word[0] == SymbolLetter{0, 0, 0});
  CHECK(throws_kind([&] { code_point(t, rho, 0); }, ErrorKind::BoundaryPoint));

  for (const auto& g : {f, catalog::bump_golden<double>(0.05), catalog::moebius_golden<double>(0.3, -0.1)}) {
    const int n = 12;
    const auto tr = Trace::renormalize(g, n);
    const auto tree = Tree::build(tr, n);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 100; ++s) {
      const double x = u(rng);
      const auto code = code_point(tr, x, n);
      CHECK(code.word == tree.word(n, locate(tree, n, x)));
      for (int i = 0; i <= n; ++i) {
        if (i > 0) CHECK((code.word[i].chi == 0) == (code.entry[i] == code.entry[i - 1]));
        // f^{k_i}(x) is the first visit to I^i.
        double y = x;
        for (std::uint64_t j = 0; j < code.entry[i]; ++j) {
          CHECK(!(y < tr.level(i).right()));
          y = g.apply(y);
        }
        CHECK(y < tr.level(i).right());
      }
    }
  }
}

TEST_CASE("entry times are constant on cylinders") {
  const auto t = Trace::renormalize(catalog::bump_golden<double>(0.05), 10);
  const auto tree = Tree::build(t, 10);
  const auto& lv = tree.level(10);
  for (std::size_t k = 0; k < lv.size(); k += 7) {
    const double w = lv.right[k] - lv.left[k];
    const auto a = code_point(t, lv.left[k] + 0.25 * w, 10);
    const auto b = code_point(t, lv.left[k] + 0.75 * w, 10);
    CHECK(a.word == b.word);
    CHECK(a.entry == b.entry);
  }
}

TEST_CASE("conditional probabilities") {
  const auto t = Trace::renormalize(catalog::golden_rotation<double>(), 12);
  const auto tree = Tree::build(t, 10);
  for (int n = 1; n <= 10; ++n) {
    for (std::size_t p = 0; p < tree.level(n - 1).size(); ++p) {
      double sum = 0;
      for (const auto c : tree.children(n - 1, p)) {
        const double v = conditional(tree, n, p, tree.letter(n, c));
        sum += v;
        // Golden lengths: a child keeps all of its parent or a rho or
        // rho^2 share of it.
        CHECK((std::abs(v - 1) < 1e-9 || std::abs(v - rho) < 1e-9 || std::abs(v - rho * rho) < 1e-9));
      }
      CHECK(std::abs(sum - 1) < 1e-12);
    }
  }
  const Word past = tree.word(2, 0);
  const auto child = tree.children(2, 0).front();
  CHECK(conditional(tree, past, tree.letter(3, child)) == doctest::Approx(tree.measure(3, child) / tree.measure(2, 0)));
  CHECK(throws_kind([&] { conditional(tree, past, SymbolLetter{0, 5, 3}); }, ErrorKind::InadmissibleWord));
  CHECK(throws_kind([&] { tree.find(Word{{0, 1, 0}}); }, ErrorKind::InadmissibleWord));
}

TEST_CASE("chain rule for conditionals") {
  const auto t = Trace::renormalize(catalog::bump_golden<double>(0.05), 12);
  const auto tree = Tree::build(t, 12);
  const int n = 12;
  for (std::size_t k = 0; k < tree.level(n).size(); k += 11) {
    double prod = tree.measure(0, tree.ancestor(n, k, 0));
    std::size_t j = k;
    std::vector<std::size_t> chain(n + 1);
    for (int m = n; m >= 0; --m) {
      chain[m] = j;
      if (m > 0) j = tree.level(m).parent[j];
    }
    for (int m = 1; m <= n; ++m) prod *= conditional(tree, m, chain[m - 1], tree.letter(m, chain[m]));
    CHECK(std::abs(prod - tree.measure(n, k)) <= 1e-12 * tree.measure(n, k));
  }
}

TEST_CASE("memory decay") {
  SUBCASE("affine maps forget nothing") {
    for (const auto& f : {catalog::golden_rotation<double>(), catalog::three_interval_rotation<double>(0.1)}) {
      const auto t = Trace::renormalize(f, 16);
      const auto tree = Tree::build(t, 14);
      for (int s = 0; s < 12; ++s) CHECK(memory_decay(tree, 14, s) == 0.0);
      CHECK(memory_decay(tree, 14, 14) == 0.0);
    }
  }
  SUBCASE("perturbed map") {
    const auto t = Trace::renormalize(catalog::bump_golden<double>(0.05), 18);
    const auto tree = Tree::build(t, 16);
    double prev = 1e300;
    for (int s = 0; s <= 12; ++s) {
      const double v = memory_decay(tree, 16, s);
      CHECK(v > 0);
      CHECK(v <= prev);  // finer blocks cannot widen a spread
      prev = v;
    }
    CHECK(memory_decay(tree, 16, 2) < memory_decay(tree, 8, 2));
    CHECK(std::isfinite(memory_decay(tree, 16, 16)));
    // With every letter but a_0 shared, no block has two pasts.
    CHECK(throws_kind([&] { memory_decay(tree, 8, 7); }, ErrorKind::NoValidPairs));
  }
}

TEST_CASE("letter measures and mixing gap") {
  for (const auto& f : {catalog::golden_rotation<double>(), catalog::bump_golden<double>(0.05)}) {
    const auto t = Trace::renormalize(f, 18);
    const auto tree = Tree::build(t, 16);
    for (int n : {4, 8, 16}) {
      const auto mg = mixing_gap(tree, n);
      CHECK(mg.r == n / 2);
      const auto direct = letter_measures(partition(t, n, 1), f.size(), t.level(0).length);
      double total = 0;
      for (int a = 0; a < f.size(); ++a) {
        CHECK(std::abs(mg.ell_star[a] - direct[a]) <= 1e-12);
        total += mg.ell_star[a];
      }
      CHECK(std::abs(total - 1) <= 1e-12);
    }
    CHECK(mixing_gap(tree, 16).gap < mixing_gap(tree, 8).gap);
  }
}

TEST_CASE("word lemmas") {
  SUBCASE("golden rotation, connecting words within two levels") {
    const auto t = Trace::renormalize(catalog::golden_rotation<double>(), 14);
    const auto tree = Tree::build(t, 12);
    const auto rep = check_word_lemmas(tree, 12, 2);
    CHECK(rep.translation_pairs > 0);
    CHECK(rep.concatenations > 0);
    CHECK(rep.connecting_words == 4 * 11);
    CHECK(rep.max_translation_error <= 1e-9);
  }
  SUBCASE("translation between two level-2 cylinders") {
    const auto t = Trace::renormalize(catalog::golden_rotation<double>(), 4);
    const auto tree = Tree::build(t, 2);
    const auto& lv = tree.level(2);
    const auto& f = t.map();
    int pairs = 0;
    for (std::size_t a = 0; a < lv.size(); ++a)
      for (std::size_t b = 0; b < lv.size(); ++b) {
        if (a == b || tree.letter(2, a) != tree.letter(2, b)) continue;
        if (lv.index[b] < lv.index[a]) continue;
        const auto r = lv.index[b] - lv.index[a];
        double x = lv.left[a], y = lv.right[a];
        for (std::uint64_t s = 0; s < r; ++s) {
          x = f.apply(x);
          y = f.apply_left_limit(y);
        }
        CHECK(std::abs(x - lv.left[b]) <= 1e-12);
        CHECK(std::abs(y - lv.right[b]) <= 1e-12);
        ++pairs;
      }
    CHECK(pairs > 0);
    CHECK(check_word_lemmas(tree, 2, 2, 0).translation_pairs > 0);
  }
  SUBCASE("junction letters must agree") {
    const auto t = Trace::renormalize(catalog::golden_rotation<double>(), 6);
    const auto tree = Tree::build(t, 4);
    const Word left = tree.word(2, 0);
    for (std::size_t k = 0; k < tree.level(4).size(); ++k) {
      const Word w = tree.word(4, k);
      Word joined = left;
      joined.push_back(w[3]);
      joined.push_back(w[4]);
      const bool same = w[2].alpha == left.back().alpha;
      if (!same) {
        CHECK_FALSE(admissible_segment(t.steps(), joined));
        CHECK(throws_kind([&] { tree.find(joined); }, ErrorKind::InadmissibleWord));
      } else {
        CHECK(admissible_segment(t.steps(), joined));
      }
    }
  }
  SUBCASE("perturbed and three-letter maps") {
    const auto t = Trace::renormalize(catalog::bump_golden<double>(0.05), 14);
    const auto tree = Tree::build(t, 12);
    CHECK(check_word_lemmas(tree, 12, measured_k_bound(t.steps(), 2, 10)).max_translation_error <= 1e-9);
    const auto t3 = Trace::renormalize(catalog::three_interval_rotation<double>(0.1), 14);
    const auto tree3 = Tree::build(t3, 12);
    // The continuous cut never loses, so connecting words do not exist.
    CHECK(measured_k_bound(t3.steps(), 3, 10) == -1);
    CHECK(throws_kind([&] { check_word_lemmas(tree3, 12, 4); }, ErrorKind::LemmaCounterexample));
    CHECK(check_word_lemmas(tree3, 12, -1).concatenations > 0);
  }
}
