#pragma once

// First-return maps, Rohlin towers and the integer tower bookkeeping of the
// 4-IET construction.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "ietlab/iet.hpp"

namespace ietlab {

struct Interval {
  ExactReal lo;
  ExactReal hi;

  ExactReal length() const { return hi - lo; }
  bool contains(const ExactReal& x) const { return lo <= x && x < hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr std::uint64_t kMaxSteps = 1'000'000;

/// A maximal subinterval of the base on which the return time is constant and
/// T^time acts as one translation (in original coordinates).
struct ReturnPiece {
  Interval domain;
  std::uint64_t time = 0;
  ExactReal translation;
};

struct FirstReturn {
  Interval base;
  std::vector<ReturnPiece> pieces;  // ordered left to right, tiling base
  Iet induced = Iet::identity();    // rescaled to [0,1), one interval per piece
  std::vector<std::uint64_t> return_times;
};

/// Throws BudgetExhausted when a point fails to return within max_steps.
FirstReturn first_return(const Iet& t, const Interval& base, std::uint64_t max_steps = kMaxSteps);

/// The intervals T^i(piece), 0 <= i < time.
std::vector<Interval> piece_floors(const Iet& t, const ReturnPiece& piece);
/// Every floor of every column; these partition [0,1) when T is minimal.
std::vector<Interval> all_floors(const Iet& t, const FirstReturn& fr);

struct Tower {
  Interval base;
  std::uint64_t height = 0;
  std::vector<Interval> floors;
  int columns = 0;  // interval count s of the induced map the column was taken from

  ExactReal measure() const { return ExactReal(static_cast<long>(height)) * base.length(); }
};

/// Shrinks [0,b) by right Rauzy steps until b < eps, so the induced map keeps
/// r intervals, then takes the column maximizing N_k * |I_k|.
/// Throws NotMinimal on a reducible or connection-hitting step.
Tower find_tower(const Iet& t, const ExactReal& eps, std::uint64_t max_steps = kMaxSteps);

/// Rotation by alpha induced on [0,b), rescaled. Throws NotIrrational for rational alpha.
Iet iet3_from_rotation(const ExactReal& alpha, const ExactReal& b);

// ---------------------------------------------------------------------------
// Tower bookkeeping.

/// b_{k,j} for j = 1..4 (slot 0 unused). b_{k,1} is only meaningful when the rule sets it.
using TowerRow = std::array<mpz_class, 5>;

/// Fills next[3], next[4] (and optionally next[1]) from the previous row and m_{k+1}, n_{k+1}.
/// next[2] is already set by the stated recurrence when the rule runs.
using TowerRule = std::function<void(const TowerRow& prev, const mpz_class& m_next,
                                     const mpz_class& n_next, TowerRow& next)>;

/// Heuristic default: b3' = b4 + n*b2 + m*b3, b4' = b2 + b3 + b4, b1 untouched.
TowerRule default_tower_rule();

struct TowerFlags {
  int k = 0;
  bool cond1 = false;                 // n_k^3 < m_k
  std::optional<bool> cond2;          // b_{k-1,2}^2 < m_k < b_{k-1,2}^5, k >= 2
  std::optional<bool> cond3;          // b_{k,2}^2 4^k m_k < n_{k+1}, k < K
  bool cons1 = false;                 // b_{k,2} >= b_{k,j}
  std::optional<bool> cons2;          // b_{k-1,2}^3 < b_{k+1,2} < 4 b_{k-1,2}^6, 2 <= k < K
};

struct TowerBook {
  int K = 0;
  std::vector<mpz_class> m;  // m[k-1] = m_k
  std::vector<mpz_class> n;
  std::vector<TowerRow> b;   // b[k-1] = row k
  std::vector<TowerFlags> flags;
  // n_{k+1} b_{k,3} / b_{k+1,2}, k = 1..K-1
  std::vector<mpq_class> series_a_terms;
  // n_k / m_k, k = 1..K
  std::vector<mpq_class> series_b_terms;
  // displayed bound of the A_{x,r,M,N} estimate, k = 2..K-1
  std::vector<double> conv_bound_terms;

  bool all_conditions() const;
  bool all_consequences() const;
};

/// m and n must have equal length K >= 2 with positive entries. r enters the
/// 2r b_{k-1,2}/b_{k,2} term of the convergence bound.
TowerBook tower_book(const std::vector<mpz_class>& m, const std::vector<mpz_class>& n,
                     const TowerRow& seed, const TowerRule& rule = default_tower_rule(), int r = 4);

/// Greedy attempt at (m, n) satisfying conditions 1-3: each n_{k+1} and m_k is the
/// least integer allowed by the lower bounds. Used as the "valid sequence" generator.
std::pair<std::vector<mpz_class>, std::vector<mpz_class>> tower_sequence_greedy(int K, const TowerRow& seed,
                                                                                const TowerRule& rule = default_tower_rule());

/// p*leb + (1-p)*sing componentwise; the length vector of S_p (permutation 4213).
std::array<ExactReal, 4> renormalized_lengths(const std::array<ExactReal, 4>& leb,
                                              const std::array<ExactReal, 4>& sing, const ExactReal& p);

}  // namespace ietlab
