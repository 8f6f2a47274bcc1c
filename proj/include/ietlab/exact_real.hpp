#pragma once

// Exact real numbers in Q or in a single real quadratic field Q(sqrt d).
//
// A value is a + b*sqrt(d) with a, b rational and d a squarefree integer > 1.
// Rational values carry b == 0 and d == 0. Mixing two different radicands in
// one operation throws ErrorKind::IncompatibleField.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <gmpxx.h>

#include "ietlab/error.hpp"

namespace ietlab {

class ExactReal {
 public:
  ExactReal() = default;
  ExactReal(long value) : a_(value) {}  // NOLINT(google-explicit-constructor)
  ExactReal(const mpz_class& value) : a_(value) {}  // NOLINT
  ExactReal(mpq_class value);  // NOLINT

  static ExactReal rational(long num, long den);
  /// a + b*sqrt(d); d > 0 is reduced to squarefree form, perfect squares fold into a.
  static ExactReal quadratic(const mpq_class& a, const mpq_class& b, std::int64_t d);
  static ExactReal sqrt(std::int64_t d);
  /// Literal forms: "p/q", decimals ("0.25", "-1.5e-3"), expressions built from
  /// + - * / parentheses and sqrt(n), plus the names golden / phi / silver.
  static ExactReal parse(std::string_view text);

  bool is_rational() const { return sgn(b_) == 0; }
  bool is_zero() const { return sgn(a_) == 0 && sgn(b_) == 0; }
  bool is_integer() const;
  const mpq_class& rational_part() const { return a_; }
  const mpq_class& sqrt_coeff() const { return b_; }
  /// 0 for rational values.
  std::int64_t radicand() const { return d_; }

  int sign() const;
  ExactReal abs() const { return sign() < 0 ? -*this : *this; }
  /// Galois conjugate a - b*sqrt(d).
  ExactReal conjugate() const;

  mpz_class floor() const;
  mpz_class ceil() const;
  /// x - floor(x), in [0, 1).
  ExactReal frac() const;
  double to_double() const;
  mpf_class to_mpf(unsigned bits) const;

  /// Canonical text form; "p/q" or "a/b+c/e*sqrt(d)". parse(to_string()) == *this.
  std::string to_string() const;

  ExactReal operator-() const;
  ExactReal& operator+=(const ExactReal& rhs);
  ExactReal& operator-=(const ExactReal& rhs);
  ExactReal& operator*=(const ExactReal& rhs);
  ExactReal& operator/=(const ExactReal& rhs);

  friend ExactReal operator+(ExactReal lhs, const ExactReal& rhs) { return lhs += rhs; }
  friend ExactReal operator-(ExactReal lhs, const ExactReal& rhs) { return lhs -= rhs; }
  friend ExactReal operator*(ExactReal lhs, const ExactReal& rhs) { return lhs *= rhs; }
  friend ExactReal operator/(ExactReal lhs, const ExactReal& rhs) { return lhs /= rhs; }

  friend bool operator==(const ExactReal& x, const ExactReal& y) {
    return x.d_ == y.d_ && x.a_ == y.a_ && x.b_ == y.b_;
  }
  friend std::strong_ordering operator<=>(const ExactReal& x, const ExactReal& y);

 private:
  std::int64_t field_with(const ExactReal& other) const;
  void normalize();

  mpq_class a_{0};
  mpq_class b_{0};
  std::int64_t d_ = 0;
};

enum class Ordering { Less, Equal, Greater };

/// Exact three-way comparison. Throws IncompatibleField for two different radicands.
Ordering compare(const ExactReal& x, const ExactReal& y);

/// Sign of p + q*sqrt(d) computed exactly.
int sign_of(const mpq_class& p, const mpq_class& q, std::int64_t d);

ExactReal min(const ExactReal& x, const ExactReal& y);
ExactReal max(const ExactReal& x, const ExactReal& y);

/// Distance to the nearest integer, in [0, 1/2].
ExactReal nearest_int_dist(const ExactReal& x);

std::ostream& operator<<(std::ostream& os, const ExactReal& x);

}  // namespace ietlab
