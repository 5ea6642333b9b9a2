#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "giem/combinatorics.hpp"
#include "giem/giem.hpp"
#include "giem/smoothmap.hpp"

namespace giem {

using BigInt = boost::multiprecision::cpp_int;

enum class StopReason { Completed, Connection, PrecisionExhausted };
const char* stop_reason_name(StopReason r);

// One level of the Rauzy-Veech tower. I^n = [left, left + length); the
// letter intervals and their images under R^n f are given by cut
// positions (not lengths), because new cuts come from orbit evaluations.
template <class Real>
struct LevelState {
  int level = 0;
  PermPair perm;
  Real left{};
  Real length{};
  std::vector<Real> cuts;        // d+1 domain cut positions, pi0 order
  std::vector<Real> image_cuts;  // d+1 image cut positions, pi1 order
  std::vector<BigInt> q;         // return times by letter
  Real error{};                  // absolute error bound carried by the cut positions

  int size() const { return perm.size(); }
  Real right() const { return left + length; }
  Interval<Real> interval(int letter) const {
    const int p = perm.pi0(letter);
    return {cuts[p - 1], cuts[p]};
  }
  Interval<Real> image_interval(int letter) const {
    const int p = perm.pi1(letter);
    return {image_cuts[p - 1], image_cuts[p]};
  }
  int letter_at(const Real& x) const;
  std::uint64_t return_time(int letter) const;
};

struct RenormOptions {
  // Types closer than this fraction of |I^n| count as a connection. The
  // value is for binary64 and is scaled by the working epsilon otherwise.
  double tie_tolerance = 1e-13;
  // Stop when the type decision is no longer certified by the accumulated
  // rounding bound.
  bool precision_guard = true;
};

template <class Real>
class RenormTrace {
 public:
  // Runs the tower up to n_max steps; stops early (with the reason kept)
  // on a connection or when precision runs out.
  static RenormTrace renormalize(const Giem<Real>& f, int n_max, const RenormOptions& options = {});

  const Giem<Real>& map() const { return f_; }
  // Number of completed steps; levels 0..depth() exist.
  int depth() const { return static_cast<int>(levels_.size()) - 1; }
  const LevelState<Real>& level(int n) const { return levels_.at(n); }
  const std::vector<StepLabel>& steps() const { return steps_; }
  StopReason stop_reason() const { return stop_; }
  const std::string& stop_detail() const { return stop_detail_; }

  // Visits the base letters of the itinerary of letter at level n, in the
  // order they are applied (or reversed).
  template <class Visit>
  void for_each_base_letter(int n, int letter, Visit&& visit, bool reverse = false) const {
    walk(n, letter, visit, reverse);
  }
  std::vector<int> itinerary(int n, int letter) const;

  // R^n f restricted to the closure of I_letter^n, evaluated by iterating f
  // along the letter's itinerary with jets carried by the chain rule.
  Real apply_level(int n, int letter, const Real& x) const;
  Jet2<Real> apply_level_jet(int n, int letter, const Jet2<Real>& x) const;
  void apply_level_jets(int n, int letter, std::vector<Jet2<Real>>& points) const;
  Real apply_level_inverse(int n, int letter, const Real& y) const;
  // Offset form of apply_level_jets: points are x + pts[k].value and come
  // back as offsets from the image of x, which is returned.
  Real apply_level_offsets(int n, int letter, const Real& x, std::vector<Jet2<Real>>& pts) const;
  // R^n f on I^n with half-open branch lookup.
  Real apply_level(int n, const Real& x) const;

  // f^i(x) for i = 0..q along the itinerary of (n, letter).
  std::vector<Real> orbit(int n, int letter, const Real& x) const;

  // Orbit f^i(c), i = 1..q_winner, of the cut created by step n -> n+1.
  std::vector<Real> new_cut_orbit(int n) const;

 private:
  explicit RenormTrace(const Giem<Real>& f);
  void check_on_branch(int letter, const Real& x) const {
    if (!(x >= branch_lo_[letter] && x <= branch_hi_[letter])) report_off_branch(letter, x);
  }
  [[noreturn]] void report_off_branch(int letter, const Real& x) const;

  template <class Visit>
  void walk(int n, int letter, Visit& visit, bool reverse) const {
    const int m = defined_at_[n][letter];
    if (m == 0) {
      visit(letter);
      return;
    }
    const auto& p = parts_[m];
    if (!reverse) {
      walk(m - 1, p[0], visit, reverse);
      walk(m - 1, p[1], visit, reverse);
    } else {
      walk(m - 1, p[1], visit, reverse);
      walk(m - 1, p[0], visit, reverse);
    }
  }

  Giem<Real> f_;
  // Branch intervals widened by the orbit tolerance.
  std::vector<Real> branch_lo_, branch_hi_;
  std::vector<LevelState<Real>> levels_;
  std::vector<StepLabel> steps_;
  // defined_at_[n][a]: last level m <= n at which letter a got a new branch
  // (0 if its branch is still the base one). parts_[m] lists the two
  // level-(m-1) letters composed, first applied first.
  std::vector<std::vector<int>> defined_at_;
  std::vector<std::array<int, 2>> parts_;
  // Cut created by each step, inside the winner's interval.
  std::vector<Real> new_cut_;
  StopReason stop_ = StopReason::Completed;
  std::string stop_detail_;
};

// 0 or 1, or throws ConnectionSuspected / PrecisionExhausted.
template <class Real>
int detect_type(const LevelState<Real>& state, const RenormOptions& options = {});

struct PartitionInterval {
  int letter;
  std::uint64_t index;  // i in f^i(I_letter^n)
};

template <class Real>
struct PartitionSnapshot {
  int level = 0;
  int offset = 0;  // 0: i = 0..q-1; 1: i = 1..q
  std::vector<PartitionInterval> tags;
  std::vector<Real> left, right;
  Real norm{};  // longest interval
  std::size_t size() const { return tags.size(); }
};

// Orbit intervals f^i(I_alpha^n) found by iterating both ends of each
// I_alpha^n. Throws BudgetExceeded beyond max_intervals.
template <class Real>
PartitionSnapshot<Real> partition(const RenormTrace<Real>& trace, int n, int offset = 0,
                                  std::size_t max_intervals = 20000000);

// Jets of Z_{I_alpha^n}(R^n f) at grid points k/(grid-1).
template <class Real>
std::vector<Jet2<Real>> zoomed_branch(const RenormTrace<Real>& trace, int n, int letter, int grid);

// Integral of the nonlinearity of R^n f over I_alpha^n, from ln D(f^q) at
// both ends with the derivative carried by the chain rule.
template <class Real>
Real mean_nonlinearity_level(const RenormTrace<Real>& trace, int n, int letter);
// The same integral summed orbit interval by orbit interval.
template <class Real>
Real mean_nonlinearity_orbit_sum(const RenormTrace<Real>& trace, int n, int letter);

struct GeometryReport {
  int level = 0;
  double domain_ratio = 0;  // max/min of |I_alpha^n|
  double image_ratio = 0;   // max/min of |R^n f(I_alpha^n)|
  double type_ratio = 0;    // smaller over larger of the two lengths compared by the type
  double derivative_sup = 0;
  double derivative_inf = 0;
};

// A grid below 2 skips the derivative scan, which costs one orbit per
// grid point.
template <class Real>
GeometryReport geometry_report(const RenormTrace<Real>& trace, int n, int grid = 65);

// The two-interval map obtained by merging the intervals on each side of
// the single discontinuity.
template <class Real>
Giem<Real> group_two(const Giem<Real>& f);

struct Prop31Report {
  std::vector<int> m;          // m[i]: the d-level matching 2-level i
  std::vector<int> rot_levels;  // 2-levels where the type changes
  double max_cut_error = 0;     // relative to |I^i|
  double max_value_error = 0;   // relative to |I^i|
};

// Runs the d-interval tower and the tower of group_two(f) independently
// and matches their levels. Throws CorrespondenceMismatch on failure.
template <class Real>
Prop31Report check_prop31(const Giem<Real>& f, int i_max, int grid = 33, double tol = 1e-9);

template <class Real>
struct FirstReturn {
  std::vector<Real> x;
  std::vector<std::uint64_t> time;
  std::vector<Real> value;
};

// Iterates f from each sample until it comes back to J.
template <class Real>
FirstReturn<Real> first_return_bruteforce(const Giem<Real>& f, const Interval<Real>& J,
                                          const std::vector<Real>& samples, std::uint64_t max_iter);

struct ConvergenceRow {
  int n = 0;
  int letter = 0;
  double mean_nonlinearity = 0;
  double d_moebius = 0;
  double d_identity = 0;
  double thm2_residual = 0;
  double len_level = 0;
  double partition_norm = 0;
};

template <class Real>
ConvergenceRow convergence_row(const RenormTrace<Real>& trace, int n, int letter, int grid,
                               const PartitionSnapshot<Real>& tilde_partition, const Real& base_mean,
                               const Real& partition_norm);

// Rows for every level up to n_last (or the trace depth) and every letter.
template <class Real>
std::vector<ConvergenceRow> convergence_table(const RenormTrace<Real>& trace, int grid = 1025, int n_last = -1);

// Sum over the orbit intervals f^i(I_alpha^n), i = 1..q, of their lengths
// divided by |I|.
template <class Real>
std::vector<Real> letter_measures(const PartitionSnapshot<Real>& tilde_partition, int d, const Real& total);

}  // namespace giem
