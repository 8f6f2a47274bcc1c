#pragma once

// Random generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ietlab/exact_real.hpp"
#include "ietlab/iet.hpp"

namespace ietlab::testing {

inline ExactReal random_rational(std::mt19937_64& rng, long max_den = 1000) {
  std::uniform_int_distribution<long> den(1, max_den);
  const long q = den(rng);
  std::uniform_int_distribution<long> num(0, q - 1);
  return ExactReal::rational(num(rng), q);
}

/// a + b*sqrt(d) in (0,1) with small rational coefficients.
inline ExactReal random_quadratic(std::mt19937_64& rng, std::int64_t d) {
  std::uniform_int_distribution<long> small(-40, 40);
  std::uniform_int_distribution<long> den(1, 40);
  for (;;) {
    mpq_class b(small(rng), den(rng));
    b.canonicalize();
    if (sgn(b) == 0) continue;
    mpq_class a(small(rng), den(rng));
    a.canonicalize();
    ExactReal x = ExactReal::quadratic(a, b, d).frac();
    if (!x.is_zero()) return x;
  }
}

inline std::vector<int> random_perm(std::mt19937_64& rng, int r) {
  std::vector<int> p(r);
  std::iota(p.begin(), p.end(), 1);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// r-IET with positive rational lengths of common denominator den.
inline Iet random_rational_iet(std::mt19937_64& rng, int r, long den = 997) {
  std::vector<long> cuts;
  std::uniform_int_distribution<long> pick(1, den - 1);
  while (static_cast<int>(cuts.size()) < r - 1) {
    const long c = pick(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<ExactReal> lengths;
  long prev = 0;
  for (long c : cuts) {
    lengths.push_back(ExactReal::rational(c - prev, den));
    prev = c;
  }
  lengths.push_back(ExactReal::rational(den - prev, den));
  return Iet::build(std::move(lengths), random_perm(rng, r));
}

/// r-IET whose lengths mix in sqrt(d) so that they are rationally independent-looking.
inline Iet random_quadratic_iet(std::mt19937_64& rng, int r, std::int64_t d = 2) {
  for (;;) {
    std::vector<ExactReal> cuts;
    for (int i = 0; i < r - 1; ++i) cuts.push_back(random_quadratic(rng, d));
    std::sort(cuts.begin(), cuts.end());
    if (std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end()) continue;
    std::vector<ExactReal> lengths;
    ExactReal prev(0);
    for (const auto& c : cuts) {
      lengths.push_back(c - prev);
      prev = c;
    }
    lengths.push_back(ExactReal(1) - prev);
    return Iet::build(std::move(lengths), random_perm(rng, r));
  }
}

}  // namespace ietlab::testing
