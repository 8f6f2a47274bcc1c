#pragma once

// Interval exchange transformations with exact lengths.
//
// An r-IET cuts [0,1) into r half-open intervals of the given lengths and
// lays them down again in the order prescribed by the permutation: interval k
// lands in position perm[k]. Everything here is exact; the double caches are
// only read by the Monte Carlo estimators in gauges.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ietlab/circle.hpp"
#include "ietlab/exact_real.hpp"

namespace ietlab {

class Iet {
 public:
  /// Validates lengths (all > 0, sum exactly 1) and that perm (1-based) is a bijection.
  static Iet build(std::vector<ExactReal> lengths, std::vector<int> perm);
  static Iet identity();
  /// x -> x + alpha mod 1 as the 2-IET with lengths (1-alpha, alpha), perm (2 1).
  /// alpha is reduced mod 1 first; alpha == 0 gives the identity.
  static Iet rotation(const ExactReal& alpha);
  /// Builds an IET from consecutive domain pieces [b_i, b_{i+1}) and their translations.
  /// The pieces must tile [0,1) and their images must tile [0,1) as well.
  static Iet from_pieces(const std::vector<ExactReal>& breakpoints,
                         const std::vector<ExactReal>& translations);
  /// "iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]" or "rot: alpha=sqrt(2)-1".
  static Iet parse(std::string_view text);

  int size() const { return static_cast<int>(lengths_.size()); }
  const std::vector<ExactReal>& lengths() const { return lengths_; }
  /// 1-based positions of the intervals after the exchange.
  const std::vector<int>& perm() const { return perm_; }
  /// s_0 = 0 < s_1 < ... < s_r = 1.
  const std::vector<ExactReal>& breakpoints() const { return breakpoints_; }
  /// h_k = T(x) - x on interval k.
  const std::vector<ExactReal>& translations() const { return translations_; }
  /// Integer matrix expressing h_k over the basis of lengths.
  const std::vector<std::vector<int>>& translation_coeffs() const { return coeffs_; }
  /// Common radicand of all lengths (0 when every length is rational).
  std::int64_t field() const { return field_; }

  const std::vector<double>& breakpoints_d() const { return breakpoints_d_; }
  const std::vector<double>& translations_d() const { return translations_d_; }

  /// 0-based index k with s_k <= x < s_{k+1}; x must lie in [0,1).
  int interval_of(const ExactReal& x) const;
  ExactReal operator()(const ExactReal& x) const;
  CirclePoint evaluate(const CirclePoint& x) const;

  /// Adjacent intervals with equal translation merged.
  Iet canonical() const;
  bool is_identity() const;

  std::string to_string() const;

  /// Equality on canonical forms.
  friend bool operator==(const Iet& lhs, const Iet& rhs);

 private:
  Iet() = default;
  void derive();

  std::vector<ExactReal> lengths_;
  std::vector<int> perm_;
  std::vector<ExactReal> breakpoints_;
  std::vector<ExactReal> translations_;
  std::vector<std::vector<int>> coeffs_;
  std::vector<double> breakpoints_d_;
  std::vector<double> translations_d_;
  std::int64_t field_ = 0;
};

Iet invert(const Iet& t);
/// U = T o S, i.e. U(x) = T(S(x)); canonical.
Iet compose(const Iet& t, const Iet& s);

enum class PowerMode { Squaring, Iterative };
Iet power(const Iet& t, std::uint64_t n, PowerMode mode = PowerMode::Squaring);

/// n-fold pointwise evaluation, O(1) memory.
ExactReal iterate(const Iet& t, ExactReal x, std::uint64_t n);

struct DeltaSet {
  std::vector<ExactReal> points;  // sorted, distinct, each in [0,1)
  int horizon = 1;

  std::size_t size() const { return points.size(); }
  bool contains(const ExactReal& x) const;
  bool subset_of(const DeltaSet& other) const;
};

/// {T(x) - x mod 1}.
DeltaSet delta_set(const Iet& t);
/// Union over k <= n of pairwise circle differences of delta_set(T^k).
DeltaSet delta_prime_n(const Iet& t, int n);
/// card(Delta'_n) for every n in the ladder (ladder strictly increasing), one pass.
std::vector<std::size_t> delta_prime_cards(const Iet& t, const std::vector<int>& ladder);

struct CertifiedMinimal {};
struct Violated {
  int k;  // T^k(s_i) = s_j
  int i;  // 1-based discontinuity indices
  int j;
};
struct Inconclusive {
  std::string reason;
};
using KeaneVerdict = std::variant<CertifiedMinimal, Violated, Inconclusive>;

/// Checks that no T^k(s_i) equals a discontinuity s_j for 1 <= k <= depth.
KeaneVerdict keane_certificate(const Iet& t, int depth);
std::string to_string(const KeaneVerdict& v);

}  // namespace ietlab
