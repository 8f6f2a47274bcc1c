#include "ietlab/exact_real.hpp"

#include <cctype>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ietlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IncompatibleField: return "IncompatibleField";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::BadLengths: return "BadLengths";
    case ErrorKind::BadPermutation: return "BadPermutation";
    case ErrorKind::BudgetExhausted: return "BudgetExhausted";
    case ErrorKind::NotMinimal: return "NotMinimal";
    case ErrorKind::NotIrrational: return "NotIrrational";
    case ErrorKind::RationalInput: return "RationalInput";
    case ErrorKind::ScaleTooSlow: return "ScaleTooSlow";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::BadCsv: return "BadCsv";
    case ErrorKind::Domain: return "DomainError";
  }
  return "Error";
}

namespace {

// Splits n = s^2 * f with f squarefree; returns {s, f}.
std::pair<std::int64_t, std::int64_t> squarefree_split(std::int64_t n) {
  std::int64_t s = 1;
  std::int64_t f = 1;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    for (int i = 0; i + 1 < e; i += 2) s *= p;
    if (e % 2 == 1) f *= p;
  }
  f *= n;
  return {s, f};
}

bool fits_double_fast(const mpq_class& q) {
  return mpz_sizeinbase(q.get_num_mpz_t(), 2) < 900 && mpz_sizeinbase(q.get_den_mpz_t(), 2) < 900;
}

std::string rational_text(const mpq_class& q) { return q.get_str(); }

}  // namespace

ExactReal::ExactReal(mpq_class value) : a_(std::move(value)) { a_.canonicalize(); }

ExactReal ExactReal::rational(long num, long den) {
  if (den == 0) throw Error(ErrorKind::DivisionByZero, "zero denominator");
  mpq_class q(num, den);
  q.canonicalize();
  return ExactReal(q);
}

ExactReal ExactReal::quadratic(const mpq_class& a, const mpq_class& b, std::int64_t d) {
  if (d < 0) throw Error(ErrorKind::Domain, "negative radicand");
  ExactReal r;
  r.a_ = a;
  r.a_.canonicalize();
  if (d == 0 || sgn(b) == 0) return r;
  auto [s, f] = squarefree_split(d);
  mpq_class coeff = b * s;
  if (f == 1) {
    r.a_ += coeff;
    return r;
  }
  r.b_ = coeff;
  r.d_ = f;
  return r;
}

ExactReal ExactReal::sqrt(std::int64_t d) { return quadratic(0, 1, d); }

bool ExactReal::is_integer() const { return is_rational() && a_.get_den() == 1; }

int sign_of(const mpq_class& p, const mpq_class& q, std::int64_t d) {
  const int sp = sgn(p);
  const int sq = sgn(q);
  if (sq == 0 || d == 0) return sp;
  if (sp == 0 || sp == sq) return sq;
  mpq_class p2 = p * p;
  mpq_class q2 = q * q;
  q2 *= d;
  return cmp(p2, q2) > 0 ? sp : sq;
}

int ExactReal::sign() const { return sign_of(a_, b_, d_); }

ExactReal ExactReal::conjugate() const {
  ExactReal r = *this;
  r.b_ = -r.b_;
  return r;
}

std::int64_t ExactReal::field_with(const ExactReal& other) const {
  if (d_ == 0) return other.d_;
  if (other.d_ == 0 || other.d_ == d_) return d_;
  throw Error(ErrorKind::IncompatibleField,
              "sqrt(" + std::to_string(d_) + ") and sqrt(" + std::to_string(other.d_) + ")");
}

void ExactReal::normalize() {
  if (sgn(b_) == 0) d_ = 0;
}

ExactReal ExactReal::operator-() const {
  ExactReal r = *this;
  r.a_ = -r.a_;
  r.b_ = -r.b_;
  return r;
}

ExactReal& ExactReal::operator+=(const ExactReal& rhs) {
  const std::int64_t d = field_with(rhs);
  a_ += rhs.a_;
  if (rhs.d_ != 0) b_ += rhs.b_;
  d_ = d;
  normalize();
  return *this;
}

ExactReal& ExactReal::operator-=(const ExactReal& rhs) {
  const std::int64_t d = field_with(rhs);
  a_ -= rhs.a_;
  if (rhs.d_ != 0) b_ -= rhs.b_;
  d_ = d;
  normalize();
  return *this;
}

ExactReal& ExactReal::operator*=(const ExactReal& rhs) {
  const std::int64_t d = field_with(rhs);
  if (rhs.d_ == 0) {
    a_ *= rhs.a_;
    b_ *= rhs.a_;
  } else if (d_ == 0) {
    b_ = a_ * rhs.b_;
    a_ *= rhs.a_;
  } else {
    mpq_class na = a_ * rhs.a_ + b_ * rhs.b_ * d;
    mpq_class nb = a_ * rhs.b_ + b_ * rhs.a_;
    a_ = std::move(na);
    b_ = std::move(nb);
  }
  d_ = d;
  normalize();
  return *this;
}

ExactReal& ExactReal::operator/=(const ExactReal& rhs) {
  if (rhs.is_zero()) throw Error(ErrorKind::DivisionByZero, "division by zero");
  if (rhs.d_ == 0) {
    field_with(rhs);
    a_ /= rhs.a_;
    b_ /= rhs.a_;
    normalize();
    return *this;
  }
  // (x)/(c + e sqrt d) = x (c - e sqrt d) / (c^2 - e^2 d)
  mpq_class norm = rhs.a_ * rhs.a_ - rhs.b_ * rhs.b_ * rhs.d_;
  *this *= rhs.conjugate();
  a_ /= norm;
  b_ /= norm;
  normalize();
  return *this;
}

std::strong_ordering operator<=>(const ExactReal& x, const ExactReal& y) {
  const std::int64_t d = x.field_with(y);
  mpq_class p = x.a_ - y.a_;
  mpq_class q = x.b_ - y.b_;
  const int s = sign_of(p, q, d);
  if (s < 0) return std::strong_ordering::less;
  if (s > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Ordering compare(const ExactReal& x, const ExactReal& y) {
  auto c = x <=> y;
  if (c < 0) return Ordering::Less;
  if (c > 0) return Ordering::Greater;
  return Ordering::Equal;
}

mpf_class ExactReal::to_mpf(unsigned bits) const {
  mpf_class a(a_, bits);
  if (d_ == 0) return a;
  mpf_class root(d_, bits);
  root = ::sqrt(root);
  mpf_class b(b_, bits);
  return a + b * root;
}

double ExactReal::to_double() const {
  if (d_ == 0) return a_.get_d();
  if (fits_double_fast(a_) && fits_double_fast(b_)) {
    const double ad = a_.get_d();
    const double bd = b_.get_d() * std::sqrt(static_cast<double>(d_));
    const double r = ad + bd;
    // Accept when at most one leading bit cancelled: a few ulps of error.
    if (std::abs(r) >= 0.5 * std::max(std::abs(ad), std::abs(bd))) return r;
  }
  const std::size_t bits = std::max({mpz_sizeinbase(a_.get_num_mpz_t(), 2),
                                     mpz_sizeinbase(a_.get_den_mpz_t(), 2),
                                     mpz_sizeinbase(b_.get_num_mpz_t(), 2),
                                     mpz_sizeinbase(b_.get_den_mpz_t(), 2)});
  return to_mpf(static_cast<unsigned>(2 * bits + 128)).get_d();
}

mpz_class ExactReal::floor() const {
  if (d_ == 0) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), a_.get_num_mpz_t(), a_.get_den_mpz_t());
    return r;
  }
  mpz_class g;
  const double approx = to_double();
  if (std::abs(approx) < 1e15) {
    g = static_cast<long>(std::floor(approx));
  } else {
    const std::size_t bits = std::max(mpz_sizeinbase(a_.get_num_mpz_t(), 2),
                                      mpz_sizeinbase(b_.get_num_mpz_t(), 2));
    mpf_class f = to_mpf(static_cast<unsigned>(2 * bits + 128));
    mpf_class fl = ::floor(f);
    g = mpz_class(fl);
  }
  // Fix up the estimate exactly: want g <= x < g + 1.
  while (sign_of(a_ - g, b_, d_) < 0) --g;
  while (sign_of(a_ - (g + 1), b_, d_) >= 0) ++g;
  return g;
}

mpz_class ExactReal::ceil() const { return -(-*this).floor(); }

ExactReal ExactReal::frac() const {
  ExactReal r = *this;
  r.a_ -= floor();
  return r;
}

std::string ExactReal::to_string() const {
  if (d_ == 0) return rational_text(a_);
  std::ostringstream os;
  if (sgn(a_) != 0) {
    os << rational_text(a_);
    if (sgn(b_) > 0) os << '+';
  }
  os << rational_text(b_) << "*sqrt(" << d_ << ')';
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const ExactReal& x) { return os << x.to_string(); }

ExactReal min(const ExactReal& x, const ExactReal& y) { return (y < x) ? y : x; }
ExactReal max(const ExactReal& x, const ExactReal& y) { return (x < y) ? y : x; }

ExactReal nearest_int_dist(const ExactReal& x) {
  ExactReal f = x.frac();
  ExactReal g = ExactReal(1) - f;
  return min(f, g);
}

// ---------------------------------------------------------------------------
// Literal parser.

namespace {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view text) : text_(text) {}

  ExactReal parse() {
    ExactReal v = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, msg + " at offset " + std::to_string(pos_) + " in \"" +
                                      std::string(text_) + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExactReal expr() {
    ExactReal v = term();
    for (;;) {
      if (accept('+')) {
        v += term();
      } else if (accept('-')) {
        v -= term();
      } else {
        return v;
      }
    }
  }

  ExactReal term() {
    ExactReal v = unary();
    for (;;) {
      if (accept('*')) {
        v *= unary();
      } else if (accept('/')) {
        ExactReal den = unary();
        if (den.is_zero()) fail("division by zero");
        v /= den;
      } else {
        return v;
      }
    }
  }

  ExactReal unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return primary();
  }

  ExactReal primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExactReal v = expr();
      if (!accept(')')) fail("expected ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (name == "sqrt") {
        if (!accept('(')) fail("expected '(' after sqrt");
        ExactReal arg = expr();
        if (!accept(')')) fail("expected ')'");
        return sqrt_of(arg);
      }
      if (name == "golden" || name == "phi") return (ExactReal::sqrt(5) - 1) / 2;
      if (name == "silver") return ExactReal::sqrt(2) - 1;
      pos_ = start;
      fail("unknown name '" + std::string(name) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  ExactReal sqrt_of(const ExactReal& arg) {
    if (!arg.is_rational()) fail("sqrt of an irrational is not supported");
    const mpq_class& q = arg.rational_part();
    if (sgn(q) < 0) fail("sqrt of a negative number");
    // sqrt(p/q) = sqrt(p*q)/q
    mpz_class pq = q.get_num() * q.get_den();
    if (!pq.fits_slong_p()) fail("radicand too large");
    return ExactReal::quadratic(0, mpq_class(1, q.get_den()), pq.get_si());
  }

  ExactReal number() {
    const std::size_t start = pos_;
    mpz_class digits = 0;
    long scale = 0;
    bool seen_digit = false;
    bool seen_point = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits = digits * 10 + (c - '0');
        if (seen_point) --scale;
        seen_digit = true;
      } else if (c == '.' && !seen_point) {
        seen_point = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!seen_digit) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      int sign = 1;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        sign = text_[pos_] == '-' ? -1 : 1;
        ++pos_;
      }
      long e = 0;
      bool any = false;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        e = e * 10 + (text_[pos_] - '0');
        if (e > 100000) fail("exponent too large");
        ++pos_;
        any = true;
      }
      if (!any) fail("malformed exponent");
      scale += sign * e;
    }
    mpz_class ten_pow;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
    mpq_class q = scale < 0 ? mpq_class(digits, ten_pow) : mpq_class(digits * ten_pow);
    q.canonicalize();
    return ExactReal(q);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ExactReal ExactReal::parse(std::string_view text) { return LiteralParser(text).parse(); }

}  // namespace ietlab
