#pragma once

#include <cstdint>
#include <vector>

#include "giem/renorm.hpp"

namespace giem {

// (alpha, chi, level): alpha is a letter of the alphabet, chi says whether
// the first entry into the new level needed one more return (1) or not (0).
struct SymbolLetter {
  int alpha = 0;
  int chi = 0;
  int level = 0;
  bool operator==(const SymbolLetter& o) const {
    return alpha == o.alpha && chi == o.chi && level == o.level;
  }
  bool operator<(const SymbolLetter& o) const {
    if (level != o.level) return level < o.level;
    if (alpha != o.alpha) return alpha < o.alpha;
    return chi < o.chi;
  }
};

// Word a_0 a_1 ... a_n, stored oldest first (word[i].level == i).
using Word = std::vector<SymbolLetter>;

// Level-n cylinders in tag order: letter alpha, then orbit index i = 1..q.
// Cylinder k of level n has tag (alpha[k], index[k]) and interval
// f^index(I_alpha^n); parent[k] points into level n-1.
template <class Real>
struct CylinderLevel {
  int level = 0;
  std::vector<int> alpha;
  std::vector<std::uint8_t> chi;
  std::vector<std::uint64_t> index;
  std::vector<std::size_t> parent;
  std::vector<std::size_t> start;  // first cylinder of each letter, plus the end
  std::vector<Real> left, right;
  std::size_t size() const { return alpha.size(); }
};

template <class Real>
struct Cylinder {
  Word word;
  Interval<Real> interval;
  int alpha = 0;
  std::uint64_t index = 0;
  Real measure{};
};

// All admissible cylinders of levels 0..n built by the three-case
// recursion over the steps of a trace. Intervals come from the orbit
// intervals f^i(I_alpha^n), 1 <= i <= q.
template <class Real>
class CylinderTree {
 public:
  static CylinderTree build(const RenormTrace<Real>& trace, int n, std::size_t max_cylinders = 20000000);

  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  const CylinderLevel<Real>& level(int n) const { return levels_.at(n); }
  const RenormTrace<Real>& trace() const { return *trace_; }
  int alphabet_size() const { return d_; }

  SymbolLetter letter(int n, std::size_t k) const;
  Word word(int n, std::size_t k) const;
  // Measure relative to |I|.
  Real measure(int n, std::size_t k) const;
  // The ancestor of cylinder k (level n) at level m <= n.
  std::size_t ancestor(int n, std::size_t k, int m) const;
  // Level-n cylinder with the given word (word.size() == n + 1), or throws
  // InadmissibleWord.
  std::size_t find(const Word& word) const;
  // Children of cylinder k at level n (cylinders of level n+1).
  std::vector<std::size_t> children(int n, std::size_t k) const;

  std::vector<Cylinder<Real>> cylinders(int n) const;

 private:
  const RenormTrace<Real>* trace_ = nullptr;
  int d_ = 0;
  Real total_{};
  std::vector<CylinderLevel<Real>> levels_;
  // children_[n] in CSR form over level n's cylinders.
  std::vector<std::vector<std::size_t>> child_start_, child_list_;
};

template <class Real>
std::vector<Cylinder<Real>> cylinders(const RenormTrace<Real>& trace, int n);

// Transition rule read off the recursion: whether (alpha', chi) at level
// n+1 may follow a letter with alpha at level n.
bool admissible_transition(const StepLabel& step, int alpha, const SymbolLetter& next);
// A word segment a_k ... a_m (consecutive levels, oldest first) is
// admissible iff all its transitions are.
bool admissible_segment(const std::vector<StepLabel>& steps, const Word& segment);

template <class Real>
struct CodingResult {
  Word word;                         // a_0 ... a_n
  std::vector<std::uint64_t> entry;  // k_0 ... k_n
};

// Symbolic coding of x through level n, from first entry times.
template <class Real>
CodingResult<Real> code_point(const RenormTrace<Real>& trace, const Real& x, int n,
                              std::uint64_t max_iterations = 100000000);

// l(a_n | a_{n-1} ... a_0) for the level-(n-1) cylinder `parent`.
template <class Real>
Real conditional(const CylinderTree<Real>& tree, int n, std::size_t parent, const SymbolLetter& next);
// The same with the past given as a word.
template <class Real>
Real conditional(const CylinderTree<Real>& tree, const Word& past, const SymbolLetter& next);

// max |log ratio| of l(a_n | a_{n-1}..a_{n-s} past') over pairs of level-n
// cylinders sharing a_n ... a_{n-s}. Zero when s >= n (no free past).
// Throws NoValidPairs when no block is shared by two cylinders.
template <class Real>
Real memory_decay(const CylinderTree<Real>& tree, int n, int s);

// l(alpha, *, n): measure of the level-n cylinders with letter alpha.
template <class Real>
std::vector<Real> ell_star(const CylinderTree<Real>& tree, int n);

template <class Real>
struct MixingGap {
  Real gap{};
  int r = 0;
  std::vector<Real> ell_star;
};

// max over letters alpha and level-r pasts (r = n/2) of
// |l((alpha,*,n) | a_r ... a_0) - l(alpha,*,n)|.
template <class Real>
MixingGap<Real> mixing_gap(const CylinderTree<Real>& tree, int n);

struct WordLemmaReport {
  std::size_t translation_pairs = 0;  // pairs checked for the translation lemma
  std::size_t concatenations = 0;
  std::size_t connecting_words = 0;
  int connect_within = 0;  // the k used for connecting words
  double max_translation_error = 0;
};

// Checks on every level up to n_max: translations between cylinders that
// share their recent block, concatenation of admissible words at a common
// letter, and connecting words between any two letters within k levels
// (skipped for k < 0, when the combinatorics are not k-bounded).
// Throws LemmaCounterexample with a witness.
template <class Real>
WordLemmaReport check_word_lemmas(const CylinderTree<Real>& tree, int n_max, int k, int block = 2,
                                  std::uint64_t max_shift = 2000);

}  // namespace giem
