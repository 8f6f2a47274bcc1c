#pragma once

// Continued fractions, the Liouville-type construction for a given scale,
// Kesten counting and the 3-IET mixing falsifier.

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "ietlab/induce.hpp"
#include "ietlab/scale.hpp"

namespace ietlab {

struct ContinuedFraction {
  std::vector<mpz_class> a;  // a[0] = a_1
  std::vector<mpz_class> p;  // p[0] = 0, p[1] = 1, p[k] = a_k p_{k-1} + p_{k-2}
  std::vector<mpz_class> q;  // q[0] = 1, q[1] = a_1
  /// (start, length) of the detected period of the partial quotients, 0-based in a.
  std::optional<std::pair<int, int>> period;

  int depth() const { return static_cast<int>(a.size()); }
};

/// Convergent tables for given partial quotients.
ContinuedFraction cf_from_quotients(std::vector<mpz_class> a);

/// a_1..a_K of alpha in (0,1) by the exact Gauss map. Throws RationalInput when the
/// expansion terminates before K terms.
ContinuedFraction cf_expand(const ExactReal& alpha, int K);

/// [0; pre..., period, period, ...] as an exact quadratic irrational.
ExactReal cf_value(const std::vector<mpz_class>& pre, const std::vector<long>& period);

/// ok[n] says ||alpha q_n|| < 1/q_{n+1}, for n = 0 .. depth-1.
std::vector<bool> check_convergent_ineq(const ContinuedFraction& cf, const ExactReal& alpha);

struct TypeEstimate {
  double nu = 0.0;
  std::vector<std::pair<mpz_class, double>> points;  // (q_k, -ln||q_k alpha|| / ln q_k) over the tail
};

/// Minimum of -ln||q alpha|| / ln q over convergent denominators q in [sqrt(n_max), n_max].
TypeEstimate type_estimate(const ExactReal& alpha, const mpz_class& n_max);

struct LiouvilleConstruction {
  std::vector<mpz_class> N;    // N_k, exact when feasible[k-1]
  std::vector<double> log10_N;
  std::vector<bool> feasible;
  std::vector<mpz_class> a;    // a_k = max(N_k, 3k^2), only for the feasible prefix
  ContinuedFraction cf;        // convergents of a_1..a_K
  std::vector<mpz_class> m;    // m_k = floor(q_{k+1} / k^2), k = 1..K-1
  std::vector<bool> chain_ok;  // q_{k+1} >= m_k >= 3 q_k
  bool certified_closed_form = false;
  /// [0; a_1, ..., a_K, 1, 1, 1, ...]; set when every a_k is feasible.
  std::optional<ExactReal> alpha;
};

/// Throws ScaleTooSlow when s_n / n does not tend to infinity.
LiouvilleConstruction liouville_from_scale(const ScaleSequence& s, int K, double max_digits = 1e5);

struct AkcResult {
  ExactReal measure;
  mpq_class bound;          // (4c+1)/k^2 + (c+1)/k^4
  bool within_bound = false;
  ExactReal union_bound;    // min(1, sum 2c/s_n)
  std::uint64_t balls = 0;
  bool exact_radii = false;  // radii c/s_n exact (else rounded from double)
};

/// Lebesgue measure of the union of circle balls B(n alpha, c/s_n), q_k <= n < q_{k+1}.
AkcResult akc_measure(const ExactReal& alpha, const ContinuedFraction& cf, int k, const mpq_class& c,
                      const ScaleSequence& s, std::uint64_t budget = 4'000'000);

/// Each (r/q_m, (r+1)/q_m) holds exactly one k alpha mod 1, 1 <= k <= q_m.
bool three_distance_check(const ExactReal& alpha, int m);

struct KestenCounts {
  std::set<long> counts;
  long b = 0;
  mpz_class q;
  bool consecutive = false;
  bool within_window = false;  // inside [floor(|J| q) - 1, floor(|J| q) + 2]
};

/// Values of card({x, x+alpha, ..., x+(q_m - 1) alpha} cap J) over x in [0,1).
KestenCounts kesten_window_counts(const ExactReal& alpha, const Interval& J, int m);

struct MixingTime {
  int m = 0;
  mpz_class q;
  long b = 0;
  long tau = 0;                      // q_m - 1 - b_m
  std::vector<std::vector<int>> hit;  // hit[i] = cells met by T^tau(cell i)
  std::vector<int> missed;            // per source cell
  int min_missed = 0;
  std::set<long> rotation_steps;      // T^tau(x) = R^j(x); the values of j
  std::set<ExactReal> displacements;  // T^tau(x) - x over the pieces, in T's coordinates
  bool at_most_seven = false;
};

struct MixingReport {
  int cell_count = 20;
  ExactReal alpha;
  ExactReal t;
  Iet iet = Iet::identity();
  std::vector<MixingTime> times;
};

/// T is the rotation by alpha induced on [1-t, 1), rescaled to [0,1). b_m is the
/// largest count of a q_m-orbit segment in the complement [0, 1-t).
MixingReport mixing_falsifier(const ExactReal& alpha, const ExactReal& t, int m_lo, int m_hi, int cells = 20);

}  // namespace ietlab
