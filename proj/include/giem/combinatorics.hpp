#pragma once

#include <string>
#include <utility>
#include <vector>

namespace giem {

// Ordered labels of the subintervals. Letters are referred to by their
// index in this list everywhere else in the library.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> letters);

  // "A", "B", "C", ... for d letters.
  static Alphabet standard(int d);

  int size() const { return static_cast<int>(letters_.size()); }
  const std::string& name(int letter) const { return letters_.at(letter); }
  int index(const std::string& name) const;
  const std::vector<std::string>& names() const { return letters_; }

 private:
  std::vector<std::string> letters_;
};

// Combinatorial data: pi0[letter] is the position (1..d) of the letter's
// interval in the domain, pi1[letter] the position of its image.
class PermPair {
 public:
  PermPair() = default;
  PermPair(std::vector<int> pi0, std::vector<int> pi1);

  // pi0 = identity, pi1 given by a monodromy p(1..d).
  static PermPair from_monodromy(const std::vector<int>& p);

  int size() const { return static_cast<int>(pi0_.size()); }
  int pi0(int letter) const { return pi0_[letter]; }
  int pi1(int letter) const { return pi1_[letter]; }
  int pi(int side, int letter) const { return side == 0 ? pi0_[letter] : pi1_[letter]; }
  // Letter sitting at position pos (1..d) on the given side.
  int letter_at(int side, int pos) const { return side == 0 ? inv0_[pos - 1] : inv1_[pos - 1]; }

  const std::vector<int>& pi0() const { return pi0_; }
  const std::vector<int>& pi1() const { return pi1_; }

  bool operator==(const PermPair& o) const { return pi0_ == o.pi0_ && pi1_ == o.pi1_; }

 private:
  std::vector<int> pi0_, pi1_, inv0_, inv1_;
};

// p(1..d) stored at indices 0..d-1.
using Monodromy = std::vector<int>;

struct StepLabel {
  int level = 0;
  int type = 0;
  int winner = 0;
  int loser = 0;
};

Monodromy monodromy(const PermPair& pp);

bool is_irreducible(const Monodromy& p);
bool is_irreducible(const PermPair& pp);

// (alpha(eps), alpha(1-eps)) with alpha(e) the letter in last position on side e.
std::pair<int, int> winner_loser(const PermPair& pp, int eps);

// The Rauzy move of type eps acting on (pi0, pi1).
PermPair rauzy_move(const PermPair& pp, int eps);

// The same move written directly on the monodromy. Kept separate from
// rauzy_move so each can check the other.
Monodromy rauzy_move_monodromy(const Monodromy& p, int eps);

// Interior positions i (1..d-1) with p(i+1) != p(i)+1: the places where a
// standard interval exchange with this monodromy jumps.
int combinatorial_discontinuities(const Monodromy& p);

// All irreducible permutations of {1..d}, as monodromies.
std::vector<Monodromy> irreducible_permutations(int d);

// Winner-chain reading of k-bounded combinatorics over the levels covered
// by `steps` (consecutive levels). For every level n whose window
// [n-k+1, n+k-1] lies inside the sequence and every ordered pair (beta,
// gamma), some n1 in the window must have winner beta and a chain
// loser(n1+i) = winner(n1+i+1), i < p, ending with loser(n1+p) = gamma
// and n1+p also in the window. Throws WindowTooShort when no level has a
// full window.
bool is_k_bounded(const std::vector<StepLabel>& steps, int k, int d);

// Smallest k <= k_max for which is_k_bounded holds, or -1.
int measured_k_bound(const std::vector<StepLabel>& steps, int d, int k_max);

}  // namespace giem
