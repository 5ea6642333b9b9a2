#include "giem/combinatorics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "giem/errors.hpp"

namespace giem {

Alphabet::Alphabet(std::vector<std::string> letters) : letters_(std::move(letters)) {
  if (letters_.size() < 2) throw Error(ErrorKind::InvalidArgument, "alphabet needs at least 2 letters");
  std::set<std::string> seen(letters_.begin(), letters_.end());
  if (seen.size() != letters_.size()) throw Error(ErrorKind::InvalidArgument, "alphabet labels must be distinct");
}

Alphabet Alphabet::standard(int d) {
  std::vector<std::string> names;
  for (int i = 0; i < d; ++i) {
    if (i < 26)
      names.push_back(std::string(1, static_cast<char>('A' + i)));
    else
      names.push_back("L" + std::to_string(i));
  }
  return Alphabet(std::move(names));
}

int Alphabet::index(const std::string& name) const {
  auto it = std::find(letters_.begin(), letters_.end(), name);
  if (it == letters_.end()) throw Error(ErrorKind::InvalidArgument, "unknown letter '" + name + "'");
  return static_cast<int>(it - letters_.begin());
}

namespace {

std::vector<int> invert(const std::vector<int>& pos, const char* side) {
  const int d = static_cast<int>(pos.size());
  std::vector<int> inv(d, -1);
  for (int a = 0; a < d; ++a) {
    if (pos[a] < 1 || pos[a] > d || inv[pos[a] - 1] != -1)
      throw Error(ErrorKind::InvalidArgument, std::string(side) + " is not a bijection onto {1..d}");
    inv[pos[a] - 1] = a;
  }
  return inv;
}

}  // namespace

PermPair::PermPair(std::vector<int> pi0, std::vector<int> pi1)
    : pi0_(std::move(pi0)), pi1_(std::move(pi1)) {
  if (pi0_.size() != pi1_.size()) throw Error(ErrorKind::InvalidArgument, "pi0 and pi1 differ in size");
  if (pi0_.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 letters");
  inv0_ = invert(pi0_, "pi0");
  inv1_ = invert(pi1_, "pi1");
}

PermPair PermPair::from_monodromy(const std::vector<int>& p) {
  std::vector<int> id(p.size());
  std::iota(id.begin(), id.end(), 1);
  return PermPair(id, p);
}

Monodromy monodromy(const PermPair& pp) {
  const int d = pp.size();
  Monodromy p(d);
  for (int i = 1; i <= d; ++i) p[i - 1] = pp.pi1(pp.letter_at(0, i));
  return p;
}

bool is_irreducible(const Monodromy& p) {
  const int d = static_cast<int>(p.size());
  // {1..j} is invariant iff max(p(1..j)) == j.
  int running_max = 0;
  for (int j = 1; j < d; ++j) {
    running_max = std::max(running_max, p[j - 1]);
    if (running_max == j) return false;
  }
  return true;
}

bool is_irreducible(const PermPair& pp) { return is_irreducible(monodromy(pp)); }

std::pair<int, int> winner_loser(const PermPair& pp, int eps) {
  const int d = pp.size();
  return {pp.letter_at(eps, d), pp.letter_at(1 - eps, d)};
}

PermPair rauzy_move(const PermPair& pp, int eps) {
  const int d = pp.size();
  const auto [winner, loser] = winner_loser(pp, eps);
  (void)loser;
  const int other = 1 - eps;
  const int anchor = pp.pi(other, winner);
  std::vector<int> moved(d);
  for (int a = 0; a < d; ++a) {
    const int v = pp.pi(other, a);
    if (v <= anchor)
      moved[a] = v;
    else if (v == d)
      moved[a] = anchor + 1;
    else
      moved[a] = v + 1;
  }
  return eps == 0 ? PermPair(pp.pi0(), moved) : PermPair(moved, pp.pi1());
}

Monodromy rauzy_move_monodromy(const Monodromy& p, int eps) {
  const int d = static_cast<int>(p.size());
  Monodromy out(d);
  if (eps == 0) {
    // Relabel image positions: the last image slot is reinserted after p(d).
    const int s = p[d - 1];
    for (int i = 0; i < d; ++i) {
      const int v = p[i];
      out[i] = v <= s ? v : (v == d ? s + 1 : v + 1);
    }
  } else {
    // Move the entry at domain position d to just after position r, p(r) = d.
    const int r = static_cast<int>(std::find(p.begin(), p.end(), d) - p.begin()) + 1;
    for (int i = 1; i <= d; ++i) {
      if (i <= r)
        out[i - 1] = p[i - 1];
      else if (i == r + 1)
        out[i - 1] = p[d - 1];
      else
        out[i - 1] = p[i - 2];
    }
  }
  return out;
}

int combinatorial_discontinuities(const Monodromy& p) {
  int count = 0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i + 1] != p[i] + 1) ++count;
  return count;
}

std::vector<Monodromy> irreducible_permutations(int d) {
  std::vector<Monodromy> out;
  Monodromy p(d);
  std::iota(p.begin(), p.end(), 1);
  do {
    if (is_irreducible(p)) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

namespace {

// Letters reachable as losers at the end of a winner chain that starts at
// a level in [lo, hi] with winner beta and stays inside [lo, hi].
std::vector<bool> chain_targets(const std::vector<StepLabel>& steps, int lo, int hi, int beta, int d) {
  std::vector<bool> hit(d, false);
  for (int n1 = lo; n1 <= hi; ++n1) {
    if (steps[n1].winner != beta) continue;
    for (int m = n1; m <= hi; ++m) {
      hit[steps[m].loser] = true;
      if (m + 1 > hi || steps[m].loser != steps[m + 1].winner) break;
    }
  }
  return hit;
}

}  // namespace

bool is_k_bounded(const std::vector<StepLabel>& steps, int k, int d) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  const int count = static_cast<int>(steps.size());
  bool certified_any = false;
  for (int n = k - 1; n + k - 1 < count; ++n) {
    certified_any = true;
    const int lo = n - k + 1;
    const int hi = n + k - 1;
    for (int beta = 0; beta < d; ++beta) {
      const auto hit = chain_targets(steps, lo, hi, beta, d);
      for (int gamma = 0; gamma < d; ++gamma)
        if (!hit[gamma]) return false;
    }
  }
  if (!certified_any)
    throw Error(ErrorKind::WindowTooShort,
                std::to_string(count) + " steps cannot hold a window of " + std::to_string(2 * k - 1) + " levels");
  return true;
}

int measured_k_bound(const std::vector<StepLabel>& steps, int d, int k_max) {
  for (int k = 1; k <= k_max; ++k) {
    if (2 * k - 1 > static_cast<int>(steps.size())) break;
    if (is_k_bounded(steps, k, d)) return k;
  }
  return -1;
}

}  // namespace giem
