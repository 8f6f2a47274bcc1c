#include "ietlab/induce.hpp"

#include <algorithm>
#include <cmath>

namespace ietlab {

namespace {

struct Walk {
  ExactReal lo;
  ExactReal hi;
  ExactReal h;  // T^time(x) = x + h on [lo, hi)
  std::uint64_t time = 0;
};

double log_mpz(const mpz_class& x) {
  long exp = 0;
  const double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

mpz_class pow_mpz(const mpz_class& x, unsigned long e) {
  mpz_class out;
  mpz_pow_ui(out.get_mpz_t(), x.get_mpz_t(), e);
  return out;
}

}  // namespace

FirstReturn first_return(const Iet& t, const Interval& base, std::uint64_t max_steps) {
  const ExactReal& a = base.lo;
  const ExactReal& b = base.hi;
  if (a.sign() < 0 || b > ExactReal(1) || !(a < b)) {
    throw Error(ErrorKind::Domain, "base interval must satisfy 0 <= a < b <= 1");
  }
  const auto& tb = t.breakpoints();
  const auto& th = t.translations();

  FirstReturn fr;
  fr.base = base;
  std::vector<Walk> stack{{a, b, ExactReal(0), 0}};
  while (!stack.empty()) {
    Walk w = std::move(stack.back());
    stack.pop_back();
    for (;;) {
      const ExactReal img_lo = w.lo + w.h;
      const int k = t.interval_of(img_lo);
      if (w.hi + w.h > tb[k + 1]) {
        const ExactReal cut = tb[k + 1] - w.h;
        stack.push_back({cut, w.hi, w.h, w.time});
        w.hi = cut;
      }
      w.h += th[k];
      ++w.time;
      const ExactReal lo = w.lo + w.h;
      const ExactReal hi = w.hi + w.h;
      if (hi <= a || lo >= b) {
        if (w.time >= max_steps) throw Error(ErrorKind::BudgetExhausted, "no return within step budget");
        continue;
      }
      if (lo < a) {
        stack.push_back({w.lo, a - w.h, w.h, w.time});
        w.lo = a - w.h;
      }
      if (hi > b) {
        stack.push_back({b - w.h, w.hi, w.h, w.time});
        w.hi = b - w.h;
      }
      fr.pieces.push_back({{w.lo, w.hi}, w.time, w.h});
      break;
    }
  }
  std::sort(fr.pieces.begin(), fr.pieces.end(),
            [](const ReturnPiece& x, const ReturnPiece& y) { return x.domain.lo < y.domain.lo; });

  const ExactReal len = b - a;
  std::vector<ExactReal> bps;
  std::vector<ExactReal> hs;
  for (const auto& p : fr.pieces) {
    bps.push_back((p.domain.lo - a) / len);
    hs.push_back(p.translation / len);
    fr.return_times.push_back(p.time);
  }
  bps.push_back(ExactReal(1));
  fr.induced = Iet::from_pieces(bps, hs);
  return fr;
}

std::vector<Interval> piece_floors(const Iet& t, const ReturnPiece& piece) {
  std::vector<Interval> floors;
  floors.reserve(piece.time);
  Interval cur = piece.domain;
  for (std::uint64_t i = 0; i < piece.time; ++i) {
    floors.push_back(cur);
    const ExactReal& h = t.translations()[t.interval_of(cur.lo)];
    cur.lo += h;
    cur.hi += h;
  }
  return floors;
}

std::vector<Interval> all_floors(const Iet& t, const FirstReturn& fr) {
  std::vector<Interval> out;
  for (const auto& p : fr.pieces) {
    auto f = piece_floors(t, p);
    out.insert(out.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  return out;
}

Tower find_tower(const Iet& t, const ExactReal& eps, std::uint64_t max_steps) {
  if (eps.sign() <= 0 || eps >= ExactReal(1)) throw Error(ErrorKind::Domain, "eps must lie in (0,1)");
  if (t.canonical().size() < 2) throw Error(ErrorKind::NotMinimal, "identity has no towers below measure 1/r");

  Iet s = t;
  ExactReal b(1);
  for (int step = 0; !(b < eps); ++step) {
    if (step > 100000) throw Error(ErrorKind::BudgetExhausted, "Rauzy steps did not shrink the base");
    const int r = s.size();
    const int last = r - 1;
    const int top = static_cast<int>(std::find(s.perm().begin(), s.perm().end(), r) - s.perm().begin());
    if (top == last) throw Error(ErrorKind::NotMinimal, "reducible permutation");
    const ExactReal& l_last = s.lengths()[last];
    const ExactReal& l_top = s.lengths()[top];
    if (l_last == l_top) throw Error(ErrorKind::NotMinimal, "saddle connection at a Rauzy step");
    const ExactReal cut = ExactReal(1) - min(l_last, l_top);
    s = first_return(s, {ExactReal(0), cut}, max_steps).induced.canonical();
    b *= cut;
  }

  FirstReturn fr = first_return(t, {ExactReal(0), b}, max_steps);
  std::size_t best = 0;
  ExactReal best_mass(-1);
  for (std::size_t i = 0; i < fr.pieces.size(); ++i) {
    const ExactReal mass = ExactReal(static_cast<long>(fr.pieces[i].time)) * fr.pieces[i].domain.length();
    if (mass > best_mass) {
      best_mass = mass;
      best = i;
    }
  }
  Tower tower;
  tower.base = fr.pieces[best].domain;
  tower.height = fr.pieces[best].time;
  tower.floors = piece_floors(t, fr.pieces[best]);
  tower.columns = static_cast<int>(fr.pieces.size());
  return tower;
}

Iet iet3_from_rotation(const ExactReal& alpha, const ExactReal& b) {
  if (alpha.is_rational()) throw Error(ErrorKind::NotIrrational, "alpha must be irrational");
  if (b.sign() <= 0 || b > ExactReal(1)) throw Error(ErrorKind::Domain, "b must lie in (0,1]");
  const Iet rot = Iet::rotation(alpha);
  if (b == ExactReal(1)) return rot;
  return first_return(rot, {ExactReal(0), b}).induced.canonical();
}

TowerRule default_tower_rule() {
  return [](const TowerRow& prev, const mpz_class& m_next, const mpz_class& n_next, TowerRow& next) {
    next[3] = prev[4] + n_next * prev[2] + m_next * prev[3];
    next[4] = prev[2] + prev[3] + prev[4];
  };
}

bool TowerBook::all_conditions() const {
  return std::all_of(flags.begin(), flags.end(), [](const TowerFlags& f) {
    return f.cond1 && f.cond2.value_or(true) && f.cond3.value_or(true);
  });
}

bool TowerBook::all_consequences() const {
  return std::all_of(flags.begin(), flags.end(),
                     [](const TowerFlags& f) { return f.cons1 && f.cons2.value_or(true); });
}

TowerBook tower_book(const std::vector<mpz_class>& m, const std::vector<mpz_class>& n, const TowerRow& seed,
                     const TowerRule& rule, int r) {
  const int K = static_cast<int>(m.size());
  if (K < 2 || n.size() != m.size()) throw Error(ErrorKind::Domain, "m and n need equal length K >= 2");
  for (int i = 0; i < K; ++i) {
    if (sgn(m[i]) <= 0 || sgn(n[i]) <= 0) throw Error(ErrorKind::Domain, "m and n must be positive");
  }
  TowerBook book;
  book.K = K;
  book.m = m;
  book.n = n;
  book.b.push_back(seed);
  for (int k = 1; k < K; ++k) {
    const TowerRow& prev = book.b.back();
    TowerRow next = prev;
    next[2] = prev[4] + m[k] * prev[2] + n[k] * prev[3];
    rule(prev, m[k], n[k], next);
    book.b.push_back(next);
  }

  // B(k) = b_{k,2}, 1-based
  auto B2 = [&](int k) -> const mpz_class& { return book.b[k - 1][2]; };
  for (int k = 1; k <= K; ++k) {
    TowerFlags f;
    f.k = k;
    f.cond1 = pow_mpz(n[k - 1], 3) < m[k - 1];
    if (k >= 2) f.cond2 = pow_mpz(B2(k - 1), 2) < m[k - 1] && m[k - 1] < pow_mpz(B2(k - 1), 5);
    if (k < K) {
      mpz_class lhs = pow_mpz(B2(k), 2) * m[k - 1];
      mpz_mul_2exp(lhs.get_mpz_t(), lhs.get_mpz_t(), 2UL * k);
      f.cond3 = lhs < n[k];
    }
    const TowerRow& row = book.b[k - 1];
    f.cons1 = row[2] >= row[3] && row[2] >= row[4] && row[2] >= row[1];
    if (k >= 2 && k < K) {
      f.cons2 = pow_mpz(B2(k - 1), 3) < B2(k + 1) && B2(k + 1) < 4 * pow_mpz(B2(k - 1), 6);
    }
    book.flags.push_back(f);
  }

  for (int k = 1; k < K; ++k) {
    mpq_class term(n[k] * book.b[k - 1][3], B2(k + 1));
    term.canonicalize();
    book.series_a_terms.push_back(term);
  }
  for (int k = 1; k <= K; ++k) {
    mpq_class term(n[k - 1], m[k - 1]);
    term.canonicalize();
    book.series_b_terms.push_back(term);
  }
  for (int k = 2; k < K; ++k) {
    const TowerRow& row = book.b[k - 1];
    const TowerRow& prev = book.b[k - 2];
    const mpz_class nb3 = n[k] * row[3];
    mpq_class exact = (sgn(nb3) > 0 ? mpq_class(4, 1) / mpq_class(nb3) : mpq_class(0)) +
                      mpq_class(2, 1) / mpq_class(row[2] * row[2]) +
                      mpq_class(mpz_class(2 * r) * prev[2], row[2]);
    mpq_class ratio(n[k - 1] * prev[3] + prev[4], row[2]);
    ratio.canonicalize();
    exact.canonicalize();
    book.conv_bound_terms.push_back(exact.get_d() + 7.0 * log_mpz(row[2]) * ratio.get_d());
  }
  return book;
}

std::pair<std::vector<mpz_class>, std::vector<mpz_class>> tower_sequence_greedy(int K, const TowerRow& seed,
                                                                                const TowerRule& rule) {
  if (K < 2) throw Error(ErrorKind::Domain, "K must be at least 2");
  std::vector<mpz_class> m(K);
  std::vector<mpz_class> n(K);
  n[0] = 2;
  m[0] = pow_mpz(n[0], 3) + 1;
  TowerRow row = seed;
  for (int k = 1; k < K; ++k) {
    // condition 3 at k, then condition 1 and the lower half of condition 2 at k+1
    mpz_class lower = pow_mpz(row[2], 2) * m[k - 1];
    mpz_mul_2exp(lower.get_mpz_t(), lower.get_mpz_t(), 2UL * k);
    n[k] = lower + 1;
    m[k] = std::max(mpz_class(pow_mpz(n[k], 3) + 1), mpz_class(pow_mpz(row[2], 2) + 1));
    TowerRow next = row;
    next[2] = row[4] + m[k] * row[2] + n[k] * row[3];
    rule(row, m[k], n[k], next);
    row = next;
  }
  return {m, n};
}

std::array<ExactReal, 4> renormalized_lengths(const std::array<ExactReal, 4>& leb,
                                              const std::array<ExactReal, 4>& sing, const ExactReal& p) {
  if (p.sign() < 0 || p > ExactReal(1)) throw Error(ErrorKind::Domain, "p must lie in [0,1]");
  ExactReal sl(0);
  ExactReal ss(0);
  for (int i = 0; i < 4; ++i) {
    if (leb[i].sign() < 0 || sing[i].sign() < 0) throw Error(ErrorKind::BadLengths, "negative length");
    sl += leb[i];
    ss += sing[i];
  }
  if (sl != ExactReal(1) || ss != ExactReal(1)) throw Error(ErrorKind::BadLengths, "vectors must sum to 1");
  std::array<ExactReal, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = p * leb[i] + (ExactReal(1) - p) * sing[i];
  return out;
}

}  // namespace ietlab
