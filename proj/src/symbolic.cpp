#include "giem/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "giem/errors.hpp"

namespace giem {

namespace {

std::string describe(const Word& w) {
  std::ostringstream os;
  for (const auto& a : w) os << '(' << a.alpha << ',' << a.chi << ',' << a.level << ')';
  return os.str();
}

}  // namespace

template <class Real>
CylinderTree<Real> CylinderTree<Real>::build(const RenormTrace<Real>& trace, int n, std::size_t max_cylinders) {
  if (n < 0 || n > trace.depth())
    throw Error(ErrorKind::InvalidArgument, "level " + std::to_string(n) + " not in the trace");
  CylinderTree tree;
  tree.trace_ = &trace;
  tree.d_ = trace.level(0).size();
  tree.total_ = trace.level(0).length;
  const int d = tree.d_;

  for (int m = 0; m <= n; ++m) {
    const auto& s = trace.level(m);
    BigInt total = 0;
    for (const auto& q : s.q) total += q;
    if (total > BigInt(max_cylinders)) throw Error(ErrorKind::BudgetExceeded, "cylinder tree larger than the budget");

    CylinderLevel<Real> lv;
    lv.level = m;
    lv.start.assign(d + 1, 0);
    for (int a = 0; a < d; ++a) lv.start[a + 1] = lv.start[a] + s.return_time(a);
    const std::size_t count = lv.start[d];
    lv.alpha.resize(count);
    lv.chi.assign(count, 0);
    lv.index.resize(count);
    lv.parent.assign(count, 0);

    if (m == 0) {
      for (int a = 0; a < d; ++a) {
        lv.alpha[a] = a;
        lv.index[a] = 1;
      }
    } else {
      const auto& prev = tree.levels_.back();
      const auto& step = trace.steps()[m - 1];
      const int w = step.winner, l = step.loser, eps = step.type;
      const auto& sp = trace.level(m - 1);
      const std::uint64_t q_l = sp.return_time(l), q_w = sp.return_time(w);
      auto pos = [&](int a, std::uint64_t i) { return prev.start[a] + i - 1; };
      for (int a = 0; a < d; ++a) {
        for (std::uint64_t i = 1; i <= lv.start[a + 1] - lv.start[a]; ++i) {
          const std::size_t k = lv.start[a] + i - 1;
          lv.alpha[k] = a;
          lv.index[k] = i;
          if (a != l) {
            lv.parent[k] = pos(a, i);
          } else if (eps == 0) {
            // The loser's branch is its old one followed by the winner's.
            if (i <= q_l) {
              lv.chi[k] = 1;
              lv.parent[k] = pos(l, i);
            } else {
              lv.parent[k] = pos(w, i - q_l);
            }
          } else {
            if (i <= q_w) {
              lv.chi[k] = 1;
              lv.parent[k] = pos(w, i);
            } else {
              lv.parent[k] = pos(l, i - q_w);
            }
          }
        }
      }
    }

    const auto p = partition(trace, m, 1, max_cylinders);
    if (p.size() != count) throw Error(ErrorKind::CorrespondenceMismatch, "partition and cylinder counts differ");
    for (std::size_t k = 0; k < count; ++k) {
      if (p.tags[k].letter != lv.alpha[k] || p.tags[k].index != lv.index[k])
        throw Error(ErrorKind::CorrespondenceMismatch, "partition tag order differs at level " + std::to_string(m));
    }
    lv.left = p.left;
    lv.right = p.right;
    tree.levels_.push_back(std::move(lv));
  }

  // Children lists in CSR form.
  tree.child_start_.resize(n + 1);
  tree.child_list_.resize(n + 1);
  for (int m = 0; m < n; ++m) {
    const auto& up = tree.levels_[m + 1];
    auto& cs = tree.child_start_[m];
    cs.assign(tree.levels_[m].size() + 1, 0);
    for (std::size_t k = 0; k < up.size(); ++k) ++cs[up.parent[k] + 1];
    for (std::size_t k = 1; k < cs.size(); ++k) cs[k] += cs[k - 1];
    auto fill = cs;
    auto& cl = tree.child_list_[m];
    cl.resize(up.size());
    for (std::size_t k = 0; k < up.size(); ++k) cl[fill[up.parent[k]]++] = k;
  }
  return tree;
}

template <class Real>
SymbolLetter CylinderTree<Real>::letter(int n, std::size_t k) const {
  const auto& lv = levels_.at(n);
  return {lv.alpha.at(k), lv.chi.at(k), n};
}

template <class Real>
Word CylinderTree<Real>::word(int n, std::size_t k) const {
  Word w(n + 1);
  for (int m = n; m >= 0; --m) {
    w[m] = letter(m, k);
    if (m > 0) k = levels_[m].parent[k];
  }
  return w;
}

template <class Real>
Real CylinderTree<Real>::measure(int n, std::size_t k) const {
  const auto& lv = levels_.at(n);
  return (lv.right.at(k) - lv.left.at(k)) / total_;
}

template <class Real>
std::size_t CylinderTree<Real>::ancestor(int n, std::size_t k, int m) const {
  if (m > n || m < 0) throw Error(ErrorKind::InvalidArgument, "ancestor level out of range");
  for (int j = n; j > m; --j) k = levels_[j].parent[k];
  return k;
}

template <class Real>
std::vector<std::size_t> CylinderTree<Real>::children(int n, std::size_t k) const {
  if (n >= depth()) throw Error(ErrorKind::InvalidArgument, "no level below " + std::to_string(n));
  const auto& cs = child_start_[n];
  return {child_list_[n].begin() + cs.at(k), child_list_[n].begin() + cs.at(k + 1)};
}

template <class Real>
std::size_t CylinderTree<Real>::find(const Word& w) const {
  if (w.empty() || static_cast<int>(w.size()) - 1 > depth())
    throw Error(ErrorKind::InvalidArgument, "word length outside the tree");
  std::size_t k = 0;
  bool found = false;
  for (std::size_t a = 0; a < levels_[0].size(); ++a) {
    if (w[0].alpha == levels_[0].alpha[a] && w[0].chi == levels_[0].chi[a] && w[0].level == 0) {
      k = a;
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::InadmissibleWord, describe(w));
  for (int m = 1; m < static_cast<int>(w.size()); ++m) {
    found = false;
    const auto& cs = child_start_[m - 1];
    for (std::size_t c = cs[k]; c < cs[k + 1]; ++c) {
      const std::size_t j = child_list_[m - 1][c];
      if (levels_[m].alpha[j] == w[m].alpha && levels_[m].chi[j] == w[m].chi && w[m].level == m) {
        k = j;
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorKind::InadmissibleWord, describe(w));
  }
  return k;
}

template <class Real>
std::vector<Cylinder<Real>> CylinderTree<Real>::cylinders(int n) const {
  const auto& lv = levels_.at(n);
  std::vector<Cylinder<Real>> out(lv.size());
  for (std::size_t k = 0; k < lv.size(); ++k) {
    out[k].word = word(n, k);
    out[k].interval = {lv.left[k], lv.right[k]};
    out[k].alpha = lv.alpha[k];
    out[k].index = lv.index[k];
    out[k].measure = measure(n, k);
  }
  return out;
}

template <class Real>
std::vector<Cylinder<Real>> cylinders(const RenormTrace<Real>& trace, int n) {
  return CylinderTree<Real>::build(trace, n).cylinders(n);
}

bool admissible_transition(const StepLabel& step, int alpha, const SymbolLetter& next) {
  if (next.chi != 0 && next.chi != 1) return false;
  if (next.alpha != step.loser) return next.chi == 0 && alpha == next.alpha;
  return alpha == (next.chi == step.type ? step.winner : step.loser);
}

bool admissible_segment(const std::vector<StepLabel>& steps, const Word& segment) {
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const auto& a = segment[i];
    if (a.level < 0 || (a.level == 0 && a.chi != 0)) return false;
    if (i == 0) continue;
    if (a.level != segment[i - 1].level + 1 || a.level - 1 >= static_cast<int>(steps.size())) return false;
    if (!admissible_transition(steps[a.level - 1], segment[i - 1].alpha, a)) return false;
  }
  return true;
}

namespace {

template <class Real>
int image_letter(const LevelState<Real>& s, const Real& y, const Real& tol) {
  for (int a = 0; a < s.size(); ++a) {
    const auto iv = s.image_interval(a);
    if (y >= iv.lo && y < iv.hi) {
      using std::abs;
      if (abs(y - iv.lo) <= tol || abs(iv.hi - y) <= tol)
        throw Error(ErrorKind::BoundaryPoint, "point within rounding of a cut at level " + std::to_string(s.level));
      return a;
    }
  }
  throw Error(ErrorKind::DomainViolation, "point outside the image of level " + std::to_string(s.level));
}

}  // namespace

template <class Real>
CodingResult<Real> code_point(const RenormTrace<Real>& trace, const Real& x, int n, std::uint64_t max_iterations) {
  using std::abs;
  if (n < 0 || n > trace.depth()) throw Error(ErrorKind::InvalidArgument, "level not in the trace");
  const Real unit = Real(16) * epsilon<Real>() * (Real(1) + abs(trace.level(0).right()));
  CodingResult<Real> out;
  Real y = x;
  std::uint64_t k = 0;
  out.word.push_back({image_letter(trace.level(0), y, unit + trace.level(0).error), 0, 0});
  out.entry.push_back(0);
  for (int i = 1; i <= n; ++i) {
    const auto& s = trace.level(i);
    const Real tol = unit + s.error;
    int chi = 0;
    if (abs(y - s.right()) <= tol)
      throw Error(ErrorKind::BoundaryPoint, "point within rounding of the end of I^" + std::to_string(i));
    if (!(y < s.right())) {
      const auto& prev = trace.level(i - 1);
      const int a = prev.letter_at(y);
      const std::uint64_t q = prev.return_time(a);
      if (k > max_iterations || q > max_iterations - k)
        throw Error(ErrorKind::MaxIterations, "entry time beyond the iteration budget");
      y = trace.apply_level(i - 1, a, y);
      k += q;
      chi = 1;
    }
    out.word.push_back({image_letter(s, y, tol), chi, i});
    out.entry.push_back(k);
  }
  return out;
}

template <class Real>
Real conditional(const CylinderTree<Real>& tree, int n, std::size_t parent, const SymbolLetter& next) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "conditionals start at level 1");
  for (const auto c : tree.children(n - 1, parent)) {
    const auto a = tree.letter(n, c);
    if (a.alpha == next.alpha && a.chi == next.chi) return tree.measure(n, c) / tree.measure(n - 1, parent);
  }
  throw Error(ErrorKind::InadmissibleWord, "no child " + describe({next}) + " below the given past");
}

template <class Real>
Real conditional(const CylinderTree<Real>& tree, const Word& past, const SymbolLetter& next) {
  return conditional(tree, static_cast<int>(past.size()), tree.find(past), next);
}

template <class Real>
Real memory_decay(const CylinderTree<Real>& tree, int n, int s) {
  if (n < 1 || n > tree.depth()) throw Error(ErrorKind::InvalidArgument, "level outside the tree");
  if (s < 0) throw Error(ErrorKind::InvalidArgument, "negative memory");
  if (s >= n) return Real(0);
  using std::log;
  const auto& lv = tree.level(n);
  // Key: (alpha, chi) at levels n, n-1, ..., n-s.
  std::map<std::vector<int>, std::pair<Real, Real>> groups;
  std::map<std::vector<int>, std::size_t> sizes;
  std::vector<int> key(2 * (s + 1));
  for (std::size_t k = 0; k < lv.size(); ++k) {
    std::size_t j = k;
    for (int m = n; m >= n - s; --m) {
      const auto& l = tree.level(m);
      key[2 * (n - m)] = l.alpha[j];
      key[2 * (n - m) + 1] = l.chi[j];
      if (m > 0) j = l.parent[j];
    }
    const Real c = tree.measure(n, k) / tree.measure(n - 1, lv.parent[k]);
    auto [it, fresh] = groups.try_emplace(key, c, c);
    if (!fresh) {
      it->second.first = std::min(it->second.first, c);
      it->second.second = std::max(it->second.second, c);
    }
    ++sizes[key];
  }
  Real worst(0);
  bool any = false;
  for (const auto& [k, mm] : groups) {
    if (sizes[k] < 2) continue;
    any = true;
    worst = std::max(worst, Real(log(mm.second) - log(mm.first)));
  }
  if (!any) throw Error(ErrorKind::NoValidPairs, "no block at level " + std::to_string(n) + " has two pasts");
  return worst;
}

template <class Real>
std::vector<Real> ell_star(const CylinderTree<Real>& tree, int n) {
  const auto& lv = tree.level(n);
  std::vector<Real> out(tree.alphabet_size(), Real(0));
  for (std::size_t k = 0; k < lv.size(); ++k) out[lv.alpha[k]] += tree.measure(n, k);
  return out;
}

template <class Real>
MixingGap<Real> mixing_gap(const CylinderTree<Real>& tree, int n) {
  if (n < 1 || n > tree.depth()) throw Error(ErrorKind::InvalidArgument, "level outside the tree");
  using std::abs;
  MixingGap<Real> out;
  out.r = n / 2;
  out.ell_star = ell_star(tree, n);
  const int past = n - out.r;
  const int d = tree.alphabet_size();
  const auto& lv = tree.level(n);
  std::vector<Real> acc(tree.level(past).size() * d, Real(0));
  for (std::size_t k = 0; k < lv.size(); ++k)
    acc[tree.ancestor(n, k, past) * d + lv.alpha[k]] += tree.measure(n, k);
  out.gap = Real(0);
  for (std::size_t c = 0; c < tree.level(past).size(); ++c) {
    const Real m = tree.measure(past, c);
    for (int a = 0; a < d; ++a) out.gap = std::max(out.gap, Real(abs(acc[c * d + a] / m - out.ell_star[a])));
  }
  return out;
}

template <class Real>
WordLemmaReport check_word_lemmas(const CylinderTree<Real>& tree, int n_max, int k, int block,
                                  std::uint64_t max_shift) {
  using std::abs;
  if (n_max > tree.depth()) throw Error(ErrorKind::InvalidArgument, "n_max beyond the tree");
  if (block < 0) throw Error(ErrorKind::InvalidArgument, "negative block");
  WordLemmaReport rep;
  rep.connect_within = k;
  const auto& trace = tree.trace();
  const auto& f = trace.map();
  const auto& steps = trace.steps();
  auto fail = [](const std::string& what) { throw Error(ErrorKind::LemmaCounterexample, what); };

  // Translations: cylinders of level m = n + block sharing a_n ... a_m.
  for (int n = 1; n + block <= n_max; ++n) {
    const int m = n + block;
    const auto& lv = tree.level(m);
    std::map<std::vector<int>, std::size_t> first;
    std::vector<int> key(2 * (block + 1));
    for (std::size_t c = 0; c < lv.size(); ++c) {
      std::size_t j = c;
      for (int t = m; t >= n; --t) {
        key[2 * (m - t)] = tree.level(t).alpha[j];
        key[2 * (m - t) + 1] = tree.level(t).chi[j];
        j = tree.level(t).parent[j];
      }
      auto [it, fresh] = first.try_emplace(key, c);
      if (fresh) continue;
      const std::size_t c0 = it->second;
      const std::size_t p0 = tree.ancestor(m, c0, n - 1), p1 = tree.ancestor(m, c, n - 1);
      const auto& lp = tree.level(n - 1);
      if (lp.alpha[p0] != lp.alpha[p1])
        fail("pasts of " + describe(tree.word(m, c0)) + " and " + describe(tree.word(m, c)) + " end in different letters");
      const long long r = static_cast<long long>(lp.index[p1]) - static_cast<long long>(lp.index[p0]);
      const long long r_top = static_cast<long long>(lv.index[c]) - static_cast<long long>(lv.index[c0]);
      if (r != r_top)
        fail("shift " + std::to_string(r) + " between pasts but " + std::to_string(r_top) + " between " +
             describe(tree.word(m, c0)) + " and " + describe(tree.word(m, c)));
      ++rep.translation_pairs;
      if (static_cast<std::uint64_t>(r < 0 ? -r : r) > max_shift) continue;
      // Push the earlier cylinder r steps forward; its midpoint picks the
      // branch so ends sitting on a cut within rounding stay on their side.
      const std::size_t from = r >= 0 ? c0 : c, to = r >= 0 ? c : c0;
      Real x = lv.left[from], y = lv.right[from], mid = (x + y) / 2;
      for (long long t = 0; t < (r < 0 ? -r : r); ++t) {
        const auto& branch = f.branch(f.letter_at(mid));
        x = branch(x);
        y = branch(y);
        mid = branch(mid);
      }
      const Real err = std::max(abs(x - lv.left[to]), abs(y - lv.right[to]));
      rep.max_translation_error = std::max(rep.max_translation_error, to_double(err));
    }
  }
  if (rep.max_translation_error > 1e-9) fail("translated cylinder misses its partner");

  // Concatenation at a common letter: a_{n-block} .. a_n with a'_n .. a'_{n+block}.
  for (int n = block; n + block <= n_max; ++n) {
    const int lo_lvl = n - block, hi_lvl = n + block;
    std::set<Word> left_words, right_words, whole;
    auto segment = [&](int top, std::size_t c, int from, int to) {
      const Word w = tree.word(top, c);
      return Word(w.begin() + from, w.begin() + to + 1);
    };
    for (std::size_t c = 0; c < tree.level(n).size(); ++c) left_words.insert(segment(n, c, lo_lvl, n));
    for (std::size_t c = 0; c < tree.level(hi_lvl).size(); ++c) {
      right_words.insert(segment(hi_lvl, c, n, hi_lvl));
      whole.insert(segment(hi_lvl, c, lo_lvl, hi_lvl));
    }
    for (const auto& a : left_words) {
      for (const auto& b : right_words) {
        Word joined = a;
        if (a.back().alpha != b.front().alpha) {
          if (b.size() == 1) continue;
          joined.insert(joined.end(), b.begin() + 1, b.end());
          if (admissible_segment(steps, joined) && whole.count(joined))
            fail("junction with different letters is admissible: " + describe(joined));
          continue;
        }
        joined.insert(joined.end(), b.begin() + 1, b.end());
        if (!whole.count(joined) || !admissible_segment(steps, joined))
          fail("concatenation is not admissible: " + describe(joined));
        ++rep.concatenations;
      }
    }
  }

  // Connecting words between any two letters within k levels.
  const int d = tree.alphabet_size();
  for (int n = 0; k >= 0 && n + k <= n_max; ++n) {
    std::vector<char> seen(d * d, 0);
    const auto& lv = tree.level(n + k);
    for (std::size_t c = 0; c < lv.size(); ++c) seen[tree.level(n).alpha[tree.ancestor(n + k, c, n)] * d + lv.alpha[c]] = 1;
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) {
        if (!seen[b * d + a])
          fail("no word of length " + std::to_string(k) + " from letter " + std::to_string(b) + " at level " +
               std::to_string(n) + " to letter " + std::to_string(a));
        ++rep.connecting_words;
      }
  }
  return rep;
}

#define GIEM_SYMBOLIC_INSTANTIATE(R)                                                                       \
  template class CylinderTree<R>;                                                                          \
  template std::vector<Cylinder<R>> cylinders(const RenormTrace<R>&, int);                                 \
  template CodingResult<R> code_point(const RenormTrace<R>&, const R&, int, std::uint64_t);                \
  template R conditional(const CylinderTree<R>&, int, std::size_t, const SymbolLetter&);                   \
  template R conditional(const CylinderTree<R>&, const Word&, const SymbolLetter&);                        \
  template R memory_decay(const CylinderTree<R>&, int, int);                                               \
  template std::vector<R> ell_star(const CylinderTree<R>&, int);                                           \
  template MixingGap<R> mixing_gap(const CylinderTree<R>&, int);                                           \
  template WordLemmaReport check_word_lemmas(const CylinderTree<R>&, int, int, int, std::uint64_t);

GIEM_SYMBOLIC_INSTANTIATE(double)
GIEM_SYMBOLIC_INSTANTIATE(Extended)

}  // namespace giem
