#pragma once

// Scale sequences s_n -> infinity and their classification.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace ietlab {

class ExprParser;

struct ScaleFlags {
  bool monotone = false;
  bool steady = false;
  bool two_jumpy = false;
  bool bounded_ratio = false;
  bool nice = false;
  bool certified_closed_form = false;  // false: finite-horizon verdict
};

class ScaleSequence {
 public:
  enum class Kind { Power, PowerLog, Table, Expr };

  /// s_n = n^alpha
  static ScaleSequence power(double alpha);
  /// s_n = n^alpha (ln n)^beta, defined from n = 2
  static ScaleSequence power_log(double alpha, double beta);
  /// values[i] = s_{i+1}
  static ScaleSequence table(std::vector<double> values);
  /// Formula in n: numbers, n, + - * / ^, parentheses, ln/log, exp, sqrt.
  static ScaleSequence expr(std::string formula, std::uint64_t horizon = 1 << 20);
  /// "pow:1.5", "powlog:1,1", "table:1,2,4,8", "expr:n^2*ln(n)"
  static ScaleSequence parse(std::string_view text);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  /// 1, or 2 for sequences carrying a logarithm.
  std::uint64_t first_index() const;
  /// Largest index the sequence is known at (Table size, Expr horizon, or UINT64_MAX).
  std::uint64_t horizon() const;

  double operator()(std::uint64_t n) const;
  /// ln s_n without overflow.
  double log_at(std::uint64_t n) const;
  /// s_n as an exact rational when it is one (integer powers of n); nullopt otherwise.
  std::optional<mpq_class> exact_at(std::uint64_t n) const;

  std::string to_string() const;

 private:
  friend class ExprParser;
  struct Node;
  ScaleSequence() = default;

  Kind kind_ = Kind::Power;
  double alpha_ = 1.0;
  double beta_ = 0.0;
  std::vector<double> table_;
  std::string formula_;
  std::uint64_t horizon_ = 0;
  std::shared_ptr<const Node> expr_;
};

/// Closed form for Power/PowerLog; finite-horizon certified for Table/Expr.
ScaleFlags classify_scale(const ScaleSequence& s);

}  // namespace ietlab
