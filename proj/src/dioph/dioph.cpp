#include "ietlab/dioph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <mpfr.h>

#include "ietlab/error.hpp"

namespace ietlab {

namespace {

// Lazily produces partial quotients by the Gauss map, switching to the period
// once a complete quotient repeats.
class GaussExpander {
 public:
  explicit GaussExpander(const ExactReal& alpha) : x_(alpha) {
    if (alpha.is_rational()) throw Error(ErrorKind::RationalInput, "rational input " + alpha.to_string());
    if (!(ExactReal(0) < alpha && alpha < ExactReal(1))) {
      throw Error(ErrorKind::Domain, "continued fraction needs alpha in (0,1)");
    }
  }

  mpz_class next() {
    const int i = static_cast<int>(a_.size());
    if (period_) {
      const auto [start, len] = *period_;
      a_.push_back(a_[start + (i - start) % len]);
      return a_.back();
    }
    if (auto it = seen_.find(x_); it != seen_.end()) {
      period_ = std::make_pair(it->second, i - it->second);
      return next();
    }
    seen_.emplace(x_, i);
    const ExactReal inv = ExactReal(1) / x_;
    const mpz_class a = inv.floor();
    x_ = inv - ExactReal(a);
    a_.push_back(a);
    return a;
  }

  const std::optional<std::pair<int, int>>& period() const { return period_; }
  const std::vector<mpz_class>& terms() const { return a_; }

 private:
  ExactReal x_;
  std::vector<mpz_class> a_;
  std::map<ExactReal, int> seen_;
  std::optional<std::pair<int, int>> period_;
};

double log_of(const ExactReal& x) {
  // ln of a positive value that may underflow a double
  const std::size_t bits = std::max<std::size_t>(256, 2 * mpz_sizeinbase(x.rational_part().get_den_mpz_t(), 2) +
                                                          2 * mpz_sizeinbase(x.sqrt_coeff().get_den_mpz_t(), 2) + 256);
  const mpf_class f = x.to_mpf(static_cast<unsigned>(bits));
  long exp2 = 0;
  const double mant = mpf_get_d_2exp(&exp2, f.get_mpf_t());
  return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

double log_of(const mpz_class& z) {
  long exp2 = 0;
  const double mant = mpz_get_d_2exp(&exp2, z.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp2) * std::log(2.0);
}

// Sorts by a double key, then repairs any local misorder with exact comparisons.
template <class T, class Key>
void exact_sort(std::vector<T>& v, Key key) {
  std::vector<std::pair<double, std::size_t>> keys(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) keys[i] = {key(v[i]).to_double(), i};
  std::sort(keys.begin(), keys.end());
  std::vector<T> sorted;
  sorted.reserve(v.size());
  for (const auto& k : keys) sorted.push_back(std::move(v[k.second]));
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    for (std::size_t j = i; j > 0 && key(sorted[j]) < key(sorted[j - 1]); --j) std::swap(sorted[j], sorted[j - 1]);
  }
  v = std::move(sorted);
}

// sum of w[i] * x[i] by binary splitting, without intermediate reduction
mpq_class weighted_sum(const std::vector<mpq_class>& x, const std::vector<long>* w) {
  struct Node {
    mpz_class p, q;
  };
  std::vector<Node> level;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long wi = w ? (*w)[i] : 1;
    if (wi == 0) continue;
    level.push_back({wi * x[i].get_num(), x[i].get_den()});
  }
  if (level.empty()) return 0;
  while (level.size() > 1) {
    std::vector<Node> next;
    next.reserve(level.size() / 2 + 1);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      next.push_back({level[i].p * level[i + 1].q + level[i + 1].p * level[i].q, level[i].q * level[i + 1].q});
    }
    if (level.size() % 2) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  mpq_class out(level[0].p, level[0].q);
  out.canonicalize();
  return out;
}

// s_n / n >= k^4 for all n >= N, for s = n^alpha (ln n)^beta.
struct Threshold {
  mpz_class N;
  double log10_N = 0.0;
  bool feasible = false;
};

class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v, prec); }
  ~Mpfr() { mpfr_clear(v); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_t v;
};

// f(x) = (alpha-1) x + beta ln x - 4 ln k at x = ln n.
void eval_f(mpfr_t out, const mpfr_t x, double am1, double beta, long k, mpfr_prec_t prec) {
  Mpfr t(prec), u(prec);
  mpfr_mul_d(out, x, am1, MPFR_RNDN);
  if (beta != 0.0) {
    mpfr_log(t.v, x, MPFR_RNDN);
    mpfr_mul_d(t.v, t.v, beta, MPFR_RNDN);
    mpfr_add(out, out, t.v, MPFR_RNDN);
  }
  mpfr_set_si(u.v, k, MPFR_RNDN);
  mpfr_log(u.v, u.v, MPFR_RNDN);
  mpfr_mul_ui(u.v, u.v, 4, MPFR_RNDN);
  mpfr_sub(out, out, u.v, MPFR_RNDN);
}

int sign_f_at(const mpz_class& n, double am1, double beta, long k, mpfr_prec_t prec) {
  Mpfr x(prec), f(prec);
  mpfr_set_z(x.v, n.get_mpz_t(), MPFR_RNDN);
  mpfr_log(x.v, x.v, MPFR_RNDN);
  eval_f(f.v, x.v, am1, beta, k, prec);
  return mpfr_sgn(f.v);
}

Threshold closed_form_threshold(double alpha, double beta, long k, std::uint64_t first, double max_digits) {
  Threshold out;
  const double am1 = alpha - 1.0;
  const double k4log = 4.0 * std::log(static_cast<double>(k));
  // Integer exponent, no logarithm: smallest n with n^e >= k^4, exactly.
  if (beta == 0.0 && am1 >= 1.0 && am1 == std::floor(am1) && am1 <= 64.0) {
    const auto e = static_cast<unsigned long>(am1);
    mpz_class k4;
    mpz_ui_pow_ui(k4.get_mpz_t(), static_cast<unsigned long>(k), 4);
    mpz_class r;
    mpz_root(r.get_mpz_t(), k4.get_mpz_t(), e);
    mpz_class re;
    mpz_pow_ui(re.get_mpz_t(), r.get_mpz_t(), e);
    if (re < k4) ++r;
    out.N = std::max(r, mpz_class(static_cast<unsigned long>(first)));
    out.log10_N = log_of(out.N) / std::log(10.0);
    out.feasible = true;
    return out;
  }

  // f is increasing from x_lo on, and f(x_lo) is its minimum over [ln first, inf)
  const auto f = [&](double x) { return am1 * x + (beta != 0.0 ? beta * std::log(x) : 0.0) - k4log; };
  double x_lo = std::log(static_cast<double>(first));
  if (beta < 0.0 && am1 > 0.0) x_lo = std::max(x_lo, -beta / am1);
  if (f(x_lo) >= 0.0) {
    out.N = mpz_class(static_cast<unsigned long>(first));
    out.log10_N = std::log10(static_cast<double>(first));
    out.feasible = true;
    return out;
  }
  double hi = std::max(1.0, 2.0 * x_lo);
  while (f(hi) < 0.0) hi *= 2.0;
  double lo = x_lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double xstar = hi;
  out.log10_N = xstar / std::log(10.0);
  if (out.log10_N > max_digits) return out;

  const auto prec = static_cast<mpfr_prec_t>(xstar / std::log(2.0) + 128);
  Mpfr x(prec), fx(prec), dfx(prec), t(prec);
  mpfr_set_d(x.v, xstar, MPFR_RNDN);
  for (int it = 0; it < 64; ++it) {
    eval_f(fx.v, x.v, am1, beta, k, prec);
    // f'(x) = (alpha-1) + beta/x
    mpfr_d_div(dfx.v, beta, x.v, MPFR_RNDN);
    mpfr_add_d(dfx.v, dfx.v, am1, MPFR_RNDN);
    mpfr_div(t.v, fx.v, dfx.v, MPFR_RNDN);
    mpfr_sub(x.v, x.v, t.v, MPFR_RNDN);
    if (mpfr_zero_p(t.v) || mpfr_get_exp(t.v) < mpfr_get_exp(x.v) - prec + 8) break;
  }
  mpfr_exp(t.v, x.v, MPFR_RNDN);
  mpz_class n;
  mpfr_get_z(n.get_mpz_t(), t.v, MPFR_RNDU);
  while (n > first && sign_f_at(n - 1, am1, beta, k, prec) >= 0) --n;
  while (sign_f_at(n, am1, beta, k, prec) < 0) ++n;
  out.N = std::max(n, mpz_class(static_cast<unsigned long>(first)));
  out.feasible = true;
  return out;
}

}  // namespace

ContinuedFraction cf_from_quotients(std::vector<mpz_class> a) {
  ContinuedFraction cf;
  cf.a = std::move(a);
  cf.p = {0, 1};
  cf.q = {1};
  if (cf.a.empty()) {
    cf.p.resize(1);
    return cf;
  }
  cf.q.push_back(cf.a[0]);
  for (std::size_t k = 2; k <= cf.a.size(); ++k) {
    cf.p.push_back(cf.a[k - 1] * cf.p[k - 1] + cf.p[k - 2]);
    cf.q.push_back(cf.a[k - 1] * cf.q[k - 1] + cf.q[k - 2]);
  }
  return cf;
}

ContinuedFraction cf_expand(const ExactReal& alpha, int K) {
  GaussExpander g(alpha);
  for (int i = 0; i < K; ++i) g.next();
  ContinuedFraction cf = cf_from_quotients(g.terms());
  cf.period = g.period();
  return cf;
}

ExactReal cf_value(const std::vector<mpz_class>& pre, const std::vector<long>& period) {
  if (period.empty()) throw Error(ErrorKind::Domain, "empty period");
  // y = [period; y] solves Q y^2 + (Q' - P) y - P' = 0 for the last two convergents.
  mpz_class P = 1, Pm = 0, Q = 0, Qm = 1;
  for (long c : period) {
    if (c < 1) throw Error(ErrorKind::Domain, "partial quotients must be positive");
    const mpz_class P2 = c * P + Pm;
    const mpz_class Q2 = c * Q + Qm;
    Pm = P;
    Qm = Q;
    P = P2;
    Q = Q2;
  }
  const mpz_class disc = (Qm - P) * (Qm - P) + 4 * Q * Pm;
  if (!disc.fits_slong_p()) throw Error(ErrorKind::Domain, "period too long for a single radicand");
  const ExactReal y = (ExactReal(mpz_class(P - Qm)) + ExactReal::sqrt(disc.get_si())) / ExactReal(mpz_class(2 * Q));
  ExactReal z = y;
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) z = ExactReal(*it) + ExactReal(1) / z;
  return ExactReal(1) / z;
}

std::vector<bool> check_convergent_ineq(const ContinuedFraction& cf, const ExactReal& alpha) {
  std::vector<bool> ok;
  for (int n = 0; n + 1 < static_cast<int>(cf.q.size()); ++n) {
    const ExactReal dist = nearest_int_dist(alpha * ExactReal(cf.q[n]));
    ok.push_back(dist < ExactReal(mpq_class(mpz_class(1), cf.q[n + 1])));
  }
  return ok;
}

TypeEstimate type_estimate(const ExactReal& alpha, const mpz_class& n_max) {
  GaussExpander g(alpha);
  mpz_class q_prev = 1;
  mpz_class q = g.next();
  mpz_class lower;
  mpz_sqrt(lower.get_mpz_t(), n_max.get_mpz_t());
  TypeEstimate est;
  est.nu = std::numeric_limits<double>::infinity();
  while (q <= n_max) {
    if (q >= lower && q > 1) {
      const double v = -log_of(nearest_int_dist(alpha * ExactReal(q))) / log_of(q);
      est.points.emplace_back(q, v);
      est.nu = std::min(est.nu, v);
    }
    const mpz_class next = g.next() * q + q_prev;
    q_prev = q;
    q = next;
  }
  if (est.points.empty()) throw Error(ErrorKind::Domain, "no convergent denominator in the tail window");
  return est;
}

LiouvilleConstruction liouville_from_scale(const ScaleSequence& s, int K, double max_digits) {
  using Kind = ScaleSequence::Kind;
  if (K < 1) throw Error(ErrorKind::Domain, "K must be positive");
  LiouvilleConstruction out;
  const std::uint64_t first = s.first_index();

  if (s.kind() == Kind::Power || s.kind() == Kind::PowerLog) {
    const double a = s.alpha();
    const double b = s.beta();
    if (!(a > 1.0 || (a == 1.0 && b > 0.0))) {
      throw Error(ErrorKind::ScaleTooSlow, "s_n / n does not tend to infinity for " + s.to_string());
    }
    out.certified_closed_form = true;
    for (long k = 1; k <= K; ++k) {
      const Threshold t = closed_form_threshold(a, b, k, first, max_digits);
      out.N.push_back(t.N);
      out.log10_N.push_back(t.log10_N);
      out.feasible.push_back(t.feasible);
    }
  } else {
    const std::uint64_t H = s.horizon();
    if (H < first + 16) throw Error(ErrorKind::Domain, "scale horizon too short");
    // suffix minima of s_n / n over [first, H]
    std::vector<double> suffix(H + 2, std::numeric_limits<double>::infinity());
    for (std::uint64_t n = H; n >= first; --n) {
      suffix[n] = std::min(suffix[n + 1], s(n) / static_cast<double>(n));
      if (n == first) break;
    }
    if (!(suffix[H / 2] > 1.05 * suffix[std::max(first, H / 8)])) {
      throw Error(ErrorKind::ScaleTooSlow, "s_n / n is not growing up to the horizon for " + s.to_string());
    }
    for (long k = 1; k <= K; ++k) {
      const double k4 = std::pow(static_cast<double>(k), 4);
      if (suffix[H] < k4) {
        out.N.push_back(0);
        out.log10_N.push_back(std::numeric_limits<double>::quiet_NaN());
        out.feasible.push_back(false);
        continue;
      }
      const auto it = std::lower_bound(suffix.begin() + static_cast<long>(first), suffix.begin() + static_cast<long>(H) + 1, k4);
      const auto n = static_cast<unsigned long>(it - suffix.begin());
      out.N.push_back(mpz_class(n));
      out.log10_N.push_back(std::log10(static_cast<double>(n)));
      out.feasible.push_back(true);
    }
  }

  for (long k = 1; k <= K && out.feasible[k - 1]; ++k) {
    out.a.push_back(std::max(out.N[k - 1], mpz_class(3 * k * k)));
  }
  out.cf = cf_from_quotients(out.a);
  const int got = static_cast<int>(out.a.size());
  for (long k = 1; k < got; ++k) {
    const mpz_class m = out.cf.q[k + 1] / (k * k);
    out.m.push_back(m);
    out.chain_ok.push_back(out.cf.q[k + 1] >= m && m >= 3 * out.cf.q[k]);
  }
  if (got == K) out.alpha = cf_value(out.a, {1});
  return out;
}

AkcResult akc_measure(const ExactReal& alpha, const ContinuedFraction& cf, int k, const mpq_class& c,
                      const ScaleSequence& s, std::uint64_t budget) {
  if (k < 0 || k + 1 >= static_cast<int>(cf.q.size())) throw Error(ErrorKind::Domain, "convergent index out of range");
  const mpz_class& qlo = cf.q[k];
  const mpz_class& qhi = cf.q[k + 1];
  if (qhi - qlo > budget) throw Error(ErrorKind::BudgetExhausted, "ball count " + mpz_class(qhi - qlo).get_str() + " over budget");
  if (!qhi.fits_ulong_p() || qhi.get_ui() >= (std::uint64_t{1} << 40)) throw Error(ErrorKind::BudgetExhausted, "q too large");
  if (sgn(c) <= 0) throw Error(ErrorKind::Domain, "c must be positive");

  AkcResult res;
  res.bound = (4 * c + 1) / mpq_class(k * k) + (c + 1) / mpq_class(k * k * k * k);
  res.exact_radii = true;
  const std::uint64_t n0 = qlo.get_ui();
  const std::uint64_t n1 = qhi.get_ui();
  const std::size_t count = n1 - n0;
  res.balls = count;

  // r_n = c * inv[i] with inv[i] = 1/s_n
  std::vector<mpq_class> inv(count);
  std::vector<double> rad(count);
  bool full = false;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t n = n0 + i;
    if (auto e = s.exact_at(n); e && sgn(*e) > 0) {
      inv[i] = 1 / *e;
    } else {
      inv[i] = 1 / mpq_class(s(n));
      res.exact_radii = false;
    }
    const mpq_class r = c * inv[i];
    rad[i] = r.get_d();
    if (r >= mpq_class(1, 2)) full = true;
  }
  const mpq_class U = 2 * c * weighted_sum(inv, nullptr);
  res.union_bound = ExactReal(U < 1 ? U : mpq_class(1));
  if (full) {
    res.measure = ExactReal(1);
    res.within_bound = res.measure <= ExactReal(res.bound);
    return res;
  }

  // n alpha mod 1 in 128-bit fixed point
  const ExactReal a = alpha.frac();
  const mpz_class A = (a * ExactReal(mpz_class(mpz_class(1) << 128))).floor();
  const auto Ah = static_cast<unsigned __int128>(mpz_class(A >> 64).get_ui());
  const auto Al = static_cast<unsigned __int128>(mpz_class(A & ((mpz_class(1) << 64) - 1)).get_ui());
  std::vector<unsigned __int128> frac(count);
  std::vector<mpz_class> fl(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned __int128 n = n0 + i;
    const unsigned __int128 lowprod = n * Al;
    const unsigned __int128 mid = n * Ah + (lowprod >> 64);
    frac[i] = (mid << 64) | static_cast<std::uint64_t>(lowprod);
    const auto f = static_cast<std::uint64_t>(mid >> 64);
    // exact floor only when the fixed-point value sits next to an integer
    const unsigned __int128 guard = static_cast<unsigned __int128>(1) << 30;
    if (frac[i] < guard || frac[i] > ~guard) {
      fl[i] = (a * ExactReal(mpz_class(static_cast<unsigned long>(n0 + i)))).floor();
    } else {
      fl[i] = static_cast<unsigned long>(f);
    }
  }

  // W + frac(n alpha) + s r_n, or the constant W when i < 0
  struct End {
    long i;
    int s;
    int w;
  };
  const auto approx = [&](const End& e) -> long double {
    if (e.i < 0) return e.w;
    return e.w + std::ldexp(static_cast<long double>(frac[e.i]), -128) + e.s * static_cast<long double>(rad[e.i]);
  };
  const auto exact = [&](const End& e) {
    if (e.i < 0) return ExactReal(e.w);
    const mpz_class n(static_cast<unsigned long>(n0 + e.i));
    return ExactReal(e.w) + a * ExactReal(n) - ExactReal(fl[e.i]) + ExactReal(mpq_class(e.s * c * inv[e.i]));
  };
  const auto cmp = [&](const End& x, const End& y) {
    const long double dx = approx(x);
    const long double dy = approx(y);
    const long double tol = 1e-15L * ((x.i < 0 ? 0 : rad[x.i]) + (y.i < 0 ? 0 : rad[y.i])) + 1e-24L;
    if (dx - dy > tol) return 1;
    if (dy - dx > tol) return -1;
    const ExactReal ex = exact(x);
    const ExactReal ey = exact(y);
    return ex < ey ? -1 : (ey < ex ? 1 : 0);
  };

  struct Arc {
    End lo, hi;
  };
  std::vector<Arc> arcs;
  arcs.reserve(count + 16);
  for (std::size_t i = 0; i < count; ++i) {
    const long li = static_cast<long>(i);
    const End lo{li, -1, 0};
    const End hi{li, +1, 0};
    if (cmp(lo, End{-1, 0, 0}) < 0) {
      arcs.push_back({End{li, -1, 1}, End{-1, 0, 1}});
      arcs.push_back({End{-1, 0, 0}, hi});
    } else if (cmp(hi, End{-1, 0, 1}) > 0) {
      arcs.push_back({lo, End{-1, 0, 1}});
      arcs.push_back({End{-1, 0, 0}, End{li, +1, -1}});
    } else {
      arcs.push_back({lo, hi});
    }
  }
  std::sort(arcs.begin(), arcs.end(), [&](const Arc& x, const Arc& y) { return cmp(x.lo, y.lo) < 0; });

  // measure = Z + B alpha + sum of r_n over the endpoints that bound a component
  mpz_class Z = 0;
  mpz_class B = 0;
  std::vector<unsigned char> used(count, 0);
  const auto close = [&](const End& lo, const End& hi) {
    for (const auto& [e, sign] : {std::pair{hi, 1}, std::pair{lo, -1}}) {
      Z += sign * e.w;
      if (e.i >= 0) {
        Z -= sign * fl[e.i];
        B += sign * static_cast<long>(n0 + e.i);
        ++used[e.i];
      }
    }
  };
  End cur_lo = arcs.front().lo;
  End cur_hi = arcs.front().hi;
  for (std::size_t i = 1; i < arcs.size(); ++i) {
    if (cmp(cur_hi, arcs[i].lo) < 0) {
      close(cur_lo, cur_hi);
      cur_lo = arcs[i].lo;
      cur_hi = arcs[i].hi;
    } else if (cmp(arcs[i].hi, cur_hi) > 0) {
      cur_hi = arcs[i].hi;
    }
  }
  close(cur_lo, cur_hi);

  std::vector<long> missing(count);
  for (std::size_t i = 0; i < count; ++i) missing[i] = 2 - used[i];
  const mpq_class D = c * weighted_sum(inv, &missing);
  res.measure = ExactReal(mpq_class(Z)) + ExactReal(B) * a + ExactReal(mpq_class(U - D));
  res.within_bound = res.measure <= ExactReal(res.bound);
  return res;
}

namespace {

// frac(c - i*alpha) in double together with a bound on its error, valid when
// the double value is not within the bound of 0 or 1 (the floor may differ there).
struct AffineOrbit {
  explicit AffineOrbit(const ExactReal& alpha) : a(alpha.to_double()) {}
  double at(double c, long i) const {
    const double v = c - static_cast<double>(i) * a;
    return v - std::floor(v);
  }
  static double error(long i) { return (4.0 * static_cast<double>(i) + 8.0) * 0x1.0p-52; }
  double a;
};

}  // namespace

bool three_distance_check(const ExactReal& alpha, int m) {
  const ContinuedFraction cf = cf_expand(alpha.frac(), std::max(m, 1));
  const mpz_class& q = cf.q[m];
  if (!q.fits_slong_p()) throw Error(ErrorKind::BudgetExhausted, "q_m too large");
  const long qm = q.get_si();
  std::vector<char> seen(qm, 0);
  const ExactReal step = alpha.frac();
  const ExactReal qq(q);
  const AffineOrbit orbit(step);
  const double qd = static_cast<double>(qm);
  for (long k = 1; k <= qm; ++k) {
    // cell index r = floor(q {k alpha}); exact only when the double is ambiguous
    const double err = qd * AffineOrbit::error(k) + qd * 0x1.0p-52;
    const double y = qd * orbit.at(0.0, -k);
    double r = std::floor(y);
    if (y - r <= err || r + 1 - y <= err) {
      const mpz_class rz = ((ExactReal(k) * step).frac() * qq).floor();
      if (rz < 0 || rz >= q) return false;
      r = rz.get_d();
    }
    if (r < 0 || r >= qd) return false;
    // an irrational point never sits on r/q_m, so it lies in the open cell
    char& slot = seen[static_cast<long>(r)];
    if (slot) return false;
    slot = 1;
  }
  return true;
}

KestenCounts kesten_window_counts(const ExactReal& alpha, const Interval& J, int m) {
  if (!(ExactReal(0) <= J.lo && J.lo < J.hi && J.hi <= ExactReal(1))) throw Error(ErrorKind::Domain, "J must be a subinterval of [0,1)");
  const ContinuedFraction cf = cf_expand(alpha.frac(), std::max(m, 1));
  KestenCounts out;
  out.q = cf.q[m];
  if (!out.q.fits_slong_p()) throw Error(ErrorKind::BudgetExhausted, "q_m too large");
  const long q = out.q.get_si();
  const ExactReal step = alpha.frac();
  const AffineOrbit orbit(step);
  const double lo_d = J.lo.to_double(), hi_d = J.hi.to_double();
  const double max_err = AffineOrbit::error(q) + 0x1.0p-50;

  // count(x) jumps +1 at J.lo - i alpha and -1 at J.hi - i alpha (mod 1).
  // Positions are doubles; the exact value is computed for events near 0 or 1
  // and for clusters of events closer than the error bound.
  struct Event {
    double at;
    long i;
    int delta;
    std::optional<ExactReal> exact;
  };
  auto exact_of = [&](const Event& e) { return ((e.delta > 0 ? J.lo : J.hi) - ExactReal(e.i) * step).frac(); };
  std::vector<Event> events;
  events.reserve(2 * static_cast<std::size_t>(q));
  long count0 = 0;
  for (long i = 0; i < q; ++i) {
    const double s = orbit.at(0.0, -i);
    const double err = AffineOrbit::error(i) + 0x1.0p-50;
    const bool near = s <= err || s >= 1 - err || std::abs(s - lo_d) <= err || std::abs(s - hi_d) <= err;
    if (near ? J.contains((ExactReal(i) * step).frac()) : (lo_d <= s && s < hi_d)) ++count0;
    for (int delta : {+1, -1}) {
      Event e{orbit.at(delta > 0 ? lo_d : hi_d, i), i, delta, std::nullopt};
      if (e.at <= max_err || e.at >= 1 - max_err) {
        e.exact = exact_of(e);
        e.at = e.exact->to_double();
      }
      events.push_back(std::move(e));
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.at < b.at; });
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i + 1;
    while (j < events.size() && events[j].at - events[j - 1].at <= 2 * max_err) ++j;
    if (j - i > 1) {
      for (std::size_t k = i; k < j; ++k) {
        if (!events[k].exact) events[k].exact = exact_of(events[k]);
      }
      std::sort(events.begin() + i, events.begin() + j, [](const Event& a, const Event& b) { return *a.exact < *b.exact; });
    }
    i = j;
  }
  auto same = [](const Event& a, const Event& b) { return a.exact && b.exact && *a.exact == *b.exact; };

  long cur = count0;
  std::size_t i = 0;
  // events at 0 were already accounted for by count0
  while (i < events.size() && events[i].exact && events[i].exact->is_zero()) ++i;
  out.counts.insert(cur);
  while (i < events.size()) {
    std::size_t j = i;
    cur += events[j++].delta;
    while (j < events.size() && same(events[j], events[i])) cur += events[j++].delta;
    out.counts.insert(cur);
    i = j;
  }
  out.b = *out.counts.rbegin();
  const long lo = *out.counts.begin();
  out.consecutive = out.counts.size() <= 4 && out.b - lo + 1 == static_cast<long>(out.counts.size());
  const mpz_class f = (J.length() * ExactReal(out.q)).floor();
  out.within_window = mpz_class(lo) >= f - 1 && mpz_class(out.b) <= f + 2;
  return out;
}

MixingReport mixing_falsifier(const ExactReal& alpha, const ExactReal& t, int m_lo, int m_hi, int cells) {
  if (!(ExactReal(0) < t && t < ExactReal(1))) throw Error(ErrorKind::Domain, "t must lie in (0,1)");
  if (alpha.is_rational()) throw Error(ErrorKind::NotIrrational, "rotation number is rational");
  if (cells < 1 || m_lo < 1 || m_hi < m_lo) throw Error(ErrorKind::Domain, "bad cell count or m range");

  MixingReport rep;
  rep.cell_count = cells;
  rep.alpha = alpha.frac();
  rep.t = t;
  const Interval J{ExactReal(1) - t, ExactReal(1)};
  const FirstReturn fr = first_return(Iet::rotation(rep.alpha), J);
  rep.iet = fr.induced;

  // the pieces in T's coordinates
  struct Piece {
    ExactReal lo, hi, shift;
    long time;
  };
  std::vector<Piece> tp;
  for (const auto& p : fr.pieces) {
    tp.push_back({(p.domain.lo - J.lo) / t, (p.domain.hi - J.lo) / t, p.translation / t, static_cast<long>(p.time)});
  }
  const auto piece_at = [&](const ExactReal& x) {
    auto it = std::upper_bound(tp.begin(), tp.end(), x, [](const ExactReal& v, const Piece& p) { return v < p.lo; });
    return static_cast<std::size_t>(it - tp.begin()) - 1;
  };

  const ExactReal n_cells(static_cast<long>(cells));
  for (int m = m_lo; m <= m_hi; ++m) {
    MixingTime mt;
    mt.m = m;
    // counting visits to the complement makes T^tau(x) = R^j(x) with j just below q_m
    const KestenCounts kc = kesten_window_counts(rep.alpha, {ExactReal(0), J.lo}, m);
    mt.q = kc.q;
    mt.b = kc.b;
    mt.tau = std::max(0L, kc.q.get_si() - 1 - kc.b);

    struct Walk {
      ExactReal lo, hi, disp;
      long steps;
    };
    int min_missed = cells;
    for (int c = 0; c < cells; ++c) {
      std::vector<Walk> cur{{ExactReal(c) / n_cells, ExactReal(c + 1) / n_cells, ExactReal(0), 0}};
      for (long s = 0; s < mt.tau; ++s) {
        std::vector<Walk> next;
        for (const auto& w : cur) {
          ExactReal lo = w.lo;
          std::size_t i = piece_at(lo);
          while (lo < w.hi) {
            const ExactReal hi = min(w.hi, tp[i].hi);
            next.push_back({lo + tp[i].shift, hi + tp[i].shift, w.disp + tp[i].shift, w.steps + tp[i].time});
            lo = hi;
            ++i;
          }
        }
        cur = std::move(next);
      }
      std::set<int> hit;
      for (const auto& w : cur) {
        const long a = (w.lo * n_cells).floor().get_si();
        const long b = (w.hi * n_cells).ceil().get_si();
        for (long j = a; j < b; ++j) hit.insert(static_cast<int>(j));
        mt.rotation_steps.insert(w.steps);
        mt.displacements.insert(w.disp);
      }
      mt.hit.emplace_back(hit.begin(), hit.end());
      mt.missed.push_back(cells - static_cast<int>(hit.size()));
      min_missed = std::min(min_missed, mt.missed.back());
    }
    mt.min_missed = min_missed;
    mt.at_most_seven = mt.displacements.size() <= 7;
    rep.times.push_back(std::move(mt));
  }
  return rep;
}

}  // namespace ietlab
