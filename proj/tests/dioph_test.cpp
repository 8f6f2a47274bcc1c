#include <cmath>
#include <random>

#include "doctest.h"
#include "ietlab/dioph.hpp"
#include "ietlab/error.hpp"

using namespace ietlab;

namespace {

ExactReal q(const char* s) { return ExactReal::parse(s); }

// Brute-force count of {x + i alpha} in J for i < n.
long orbit_hits(const ExactReal& alpha, const Interval& J, ExactReal x, long n) {
  long c = 0;
  for (long i = 0; i < n; ++i) {
    if (J.contains(x)) ++c;
    x = (x + alpha).frac();
  }
  return c;
}

// Measure of a union of arcs by a fine rational grid: the union contains every
// grid cell it covers, so the count of cell midpoints inside brackets the measure.
double union_measure_by_sampling(const ExactReal& alpha, long n0, long n1, double c, int grid) {
  std::vector<char> in(grid, 0);
  const double a = alpha.to_double();
  for (long n = n0; n < n1; ++n) {
    const double center = std::fmod(n * a, 1.0);
    const double r = c / (static_cast<double>(n) * n);
    for (int g = 0; g < grid; ++g) {
      const double x = (g + 0.5) / grid;
      double d = std::abs(x - center);
      d = std::min(d, 1.0 - d);
      if (d < r) in[g] = 1;
    }
  }
  long cnt = 0;
  for (char v : in) cnt += v;
  return static_cast<double>(cnt) / grid;
}

// Exact union measure by direct sort and merge of ExactReal arcs.
ExactReal naive_union(const ExactReal& alpha, long n0, long n1, const mpq_class& c) {
  std::vector<std::pair<ExactReal, ExactReal>> arcs;
  for (long n = n0; n < n1; ++n) {
    const ExactReal x = (alpha * ExactReal(n)).frac();
    const ExactReal r(mpq_class(c / mpq_class(n * n)));
    if (!(r < ExactReal::rational(1, 2))) return ExactReal(1);
    const ExactReal a = x - r;
    const ExactReal b = x + r;
    if (a.sign() < 0) {
      arcs.emplace_back(a + ExactReal(1), ExactReal(1));
      arcs.emplace_back(ExactReal(0), b);
    } else if (ExactReal(1) < b) {
      arcs.emplace_back(a, ExactReal(1));
      arcs.emplace_back(ExactReal(0), b - ExactReal(1));
    } else {
      arcs.emplace_back(a, b);
    }
  }
  std::sort(arcs.begin(), arcs.end());
  ExactReal total(0);
  ExactReal lo = arcs[0].first;
  ExactReal hi = arcs[0].second;
  for (const auto& [a, b] : arcs) {
    if (hi < a) {
      total += hi - lo;
      lo = a;
      hi = b;
    } else {
      hi = max(hi, b);
    }
  }
  return total + (hi - lo);
}

}  // namespace

TEST_CASE("cf_expand") {
  SUBCASE("golden") {
    const ContinuedFraction cf = cf_expand(q("golden"), 12);
    for (const auto& a : cf.a) CHECK(a == 1);
    const std::vector<long> fib{1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233};
    REQUIRE(cf.q.size() == fib.size());
    for (std::size_t i = 0; i < fib.size(); ++i) CHECK(cf.q[i] == fib[i]);
    REQUIRE(cf.period);
    CHECK(cf.period->second == 1);
  }
  SUBCASE("silver") {
    const ContinuedFraction cf = cf_expand(q("sqrt(2)-1"), 20);
    for (const auto& a : cf.a) CHECK(a == 2);
    REQUIRE(cf.period);
    CHECK(cf.period->second == 1);
  }
  SUBCASE("longer period") {
    // sqrt(7) = [2; (1, 1, 1, 4)]
    const ContinuedFraction cf = cf_expand(q("sqrt(7)-2"), 10);
    const std::vector<long> want{1, 1, 1, 4, 1, 1, 1, 4, 1, 1};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(cf.a[i] == want[i]);
    REQUIRE(cf.period);
    CHECK(cf.period->second == 4);
  }
  SUBCASE("preperiod") {
    // sqrt(2)/3 = [0; 2, (8, 4)]
    const ContinuedFraction cf = cf_expand(q("sqrt(2)/3"), 7);
    const std::vector<long> want{2, 8, 4, 8, 4, 8, 4};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(cf.a[i] == want[i]);
    REQUIRE(cf.period);
    CHECK(cf.period->first == 1);
    CHECK(cf.period->second == 2);
  }
  SUBCASE("rational and out of range") {
    try {
      cf_expand(q("1/3"), 5);
      FAIL("rational accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::RationalInput);
    }
    CHECK_THROWS_AS(cf_expand(q("sqrt(2)"), 5), Error);
  }
}

TEST_CASE("property: convergent identities") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<mpz_class> pre;
    std::vector<long> period;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 3); ++i) pre.push_back(1 + rng() % 3);
    for (int i = 0; i < 1 + static_cast<int>(rng() % 3); ++i) period.push_back(1 + static_cast<long>(rng() % 3));
    const ExactReal alpha = cf_value(pre, period);
    const ContinuedFraction cf = cf_expand(alpha, 25);
    for (std::size_t i = 0; i < pre.size(); ++i) CHECK(cf.a[i] == pre[i]);
    for (std::size_t i = pre.size(); i < 25; ++i) CHECK(cf.a[i] == period[(i - pre.size()) % period.size()]);
    for (std::size_t k = 1; k + 1 < cf.q.size(); ++k) {
      // p_k q_{k-1} - p_{k-1} q_k = (-1)^{k-1}
      CHECK(cf.p[k] * cf.q[k - 1] - cf.p[k - 1] * cf.q[k] == (k % 2 == 1 ? 1 : -1));
      CHECK(gcd(cf.p[k], cf.q[k]) == 1);
      const ExactReal err = (alpha - ExactReal(mpq_class(cf.p[k], cf.q[k]))).abs();
      CHECK(err < ExactReal(mpq_class(mpz_class(1), cf.q[k] * cf.q[k + 1])));
    }
    for (bool ok : check_convergent_ineq(cf, alpha)) CHECK(ok);
  }
}

TEST_CASE("check_convergent_ineq") {
  for (const char* a : {"golden", "sqrt(2)-1"}) {
    const ExactReal alpha = q(a);
    const auto ok = check_convergent_ineq(cf_expand(alpha, 21), alpha);
    CHECK(ok.size() == 21);
    for (bool v : ok) CHECK(v);
  }
  // corrupted quotients fail somewhere
  ContinuedFraction bad = cf_expand(q("golden"), 10);
  std::vector<mpz_class> a = bad.a;
  a[4] = 7;
  const auto ok = check_convergent_ineq(cf_from_quotients(a), q("golden"));
  CHECK(std::count(ok.begin(), ok.end(), false) > 0);
}

TEST_CASE("type_estimate") {
  CHECK(type_estimate(q("golden"), mpz_class(1000000)).nu == doctest::Approx(1.0).epsilon(0.1));
  CHECK(type_estimate(q("sqrt(2)-1"), mpz_class(1000000)).nu == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("liouville_from_scale") {
  SUBCASE("s = n^2") {
    const LiouvilleConstruction lc = liouville_from_scale(ScaleSequence::power(2), 4);
    const std::vector<long> N{1, 16, 81, 256};
    const std::vector<long> a{3, 16, 81, 256};
    for (int k = 0; k < 4; ++k) {
      CHECK(lc.N[k] == N[k]);
      CHECK(lc.a[k] == a[k]);
      CHECK(lc.feasible[k]);
    }
    const std::vector<long> qs{1, 3, 49, 3972, 1016881};
    for (int k = 0; k < 5; ++k) CHECK(lc.cf.q[k] == qs[k]);
    for (bool ok : lc.chain_ok) CHECK(ok);
    REQUIRE(lc.alpha);
    const ContinuedFraction back = cf_expand(*lc.alpha, 8);
    for (int k = 0; k < 4; ++k) CHECK(back.a[k] == a[k]);
    for (int k = 4; k < 8; ++k) CHECK(back.a[k] == 1);
  }
  SUBCASE("oracle: N_k by scanning s_n / n") {
    for (double alpha : {1.5, 2.5, 3.0}) {
      const LiouvilleConstruction lc = liouville_from_scale(ScaleSequence::power(alpha), 3);
      for (int k = 1; k <= 3; ++k) {
        const double k4 = std::pow(k, 4);
        long n = 1;
        while (std::pow(n, alpha - 1) < k4 * (1 - 1e-12)) ++n;
        CHECK(lc.N[k - 1] == n);
      }
    }
  }
  SUBCASE("s = n ln n") {
    const LiouvilleConstruction lc = liouville_from_scale(ScaleSequence::power_log(1, 1), 4);
    CHECK(lc.N[0] == 3);  // ln n >= 1 first at n = 3
    // N_2 = ceil(e^16) = 8886111
    CHECK(lc.N[1] == 8886111);
    CHECK(lc.log10_N[3] == doctest::Approx(256 / std::log(10.0)));
    CHECK(lc.N[3] > mpz_class("10") * mpz_class("1000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000"));
    for (bool ok : lc.chain_ok) CHECK(ok);
  }
  SUBCASE("infeasible digits are flagged, not computed") {
    const LiouvilleConstruction lc = liouville_from_scale(ScaleSequence::power_log(1, 1), 6, 200);
    CHECK(lc.feasible[3] == true);
    CHECK(lc.feasible[4] == false);
    CHECK(lc.a.size() == 4);
    CHECK_FALSE(lc.alpha);
  }
  SUBCASE("table matches the closed form") {
    std::vector<double> v;
    for (int n = 1; n <= 4096; ++n) v.push_back(static_cast<double>(n) * n);
    const LiouvilleConstruction lc = liouville_from_scale(ScaleSequence::table(v), 4);
    for (int k = 0; k < 4; ++k) CHECK(lc.N[k] == std::pow(k + 1, 4));
  }
  SUBCASE("too slow") {
    for (const char* s : {"pow:1", "pow:0.5", "powlog:1,-1", "powlog:0.9,3"}) {
      try {
        liouville_from_scale(ScaleSequence::parse(s), 3);
        FAIL("accepted " << s);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ScaleTooSlow);
      }
    }
    std::vector<double> v;
    for (int n = 1; n <= 4096; ++n) v.push_back(n);
    CHECK_THROWS_AS(liouville_from_scale(ScaleSequence::table(v), 3), Error);
  }
}

TEST_CASE("akc_measure") {
  const ScaleSequence s2 = ScaleSequence::power(2);
  SUBCASE("golden, k = 5, c = 1") {
    const ExactReal phi = q("golden");
    const ContinuedFraction cf = cf_expand(phi, 10);
    const AkcResult r = akc_measure(phi, cf, 5, 1, s2);
    CHECK(r.exact_radii);
    CHECK(r.balls == 5);
    CHECK(r.within_bound);
    CHECK(r.measure <= ExactReal(mpq_class(5, 25) + mpq_class(2, 625)));
    CHECK(r.measure <= r.union_bound);
    // balls of radius 1/n^2 around n phi, n = 8..12, are disjoint here
    CHECK(r.measure == r.union_bound);
    CHECK(r.measure.to_double() == doctest::Approx(union_measure_by_sampling(phi, 8, 13, 1.0, 200000)).epsilon(0.01));
  }
  SUBCASE("overlapping balls against sampling") {
    const ExactReal phi = q("golden");
    const ContinuedFraction cf = cf_expand(phi, 10);
    const AkcResult r = akc_measure(phi, cf, 6, 20, s2);
    CHECK(r.measure < r.union_bound);
    CHECK(r.measure < ExactReal(1));
    CHECK(r.measure.to_double() == doctest::Approx(union_measure_by_sampling(phi, 13, 21, 20.0, 400000)).epsilon(0.01));
  }
  SUBCASE("oracle: direct exact merge") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 12; ++trial) {
      const ExactReal alpha = cf_value({1 + rng() % 4}, {1 + static_cast<long>(rng() % 3), 1 + static_cast<long>(rng() % 3)});
      const ContinuedFraction cf = cf_expand(alpha, 12);
      const int k = 3 + static_cast<int>(rng() % 5);
      const mpq_class c(1 + static_cast<long>(rng() % 30), 1 + static_cast<long>(rng() % 3));
      const AkcResult r = akc_measure(alpha, cf, k, c, s2);
      CHECK(r.measure == naive_union(alpha, cf.q[k].get_si(), cf.q[k + 1].get_si(), c));
      CHECK(r.measure <= r.union_bound);
    }
  }
  SUBCASE("saturation") {
    const ExactReal phi = q("golden");
    const AkcResult r = akc_measure(phi, cf_expand(phi, 5), 1, 1, s2);  // n = 1, radius 1
    CHECK(r.measure == ExactReal(1));
  }
  SUBCASE("Liouville alpha from n^2, k = 2") {
    const LiouvilleConstruction lc = liouville_from_scale(s2, 4);
    const AkcResult r = akc_measure(*lc.alpha, lc.cf, 2, 1, s2);
    CHECK(r.balls == 3972 - 49);
    CHECK(r.within_bound);
    CHECK(r.measure <= r.union_bound);
  }
  SUBCASE("budget") {
    const ExactReal phi = q("golden");
    CHECK_THROWS_AS(akc_measure(phi, cf_expand(phi, 30), 25, 1, s2, 1000), Error);
  }
}

TEST_CASE("three_distance_check") {
  CHECK(three_distance_check(q("golden"), 9));
  CHECK(three_distance_check(q("golden"), 10));
  CHECK(three_distance_check(q("sqrt(2)-1"), 8));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const ExactReal alpha = cf_value({}, {1 + static_cast<long>(rng() % 4), 1 + static_cast<long>(rng() % 4)});
    for (int m = 1; m <= 8; ++m) CHECK(three_distance_check(alpha, m));
  }
  CHECK_THROWS_AS(three_distance_check(q("2/5"), 3), Error);
}

TEST_CASE("kesten_window_counts") {
  const ExactReal phi = q("golden");
  SUBCASE("full circle") {
    const KestenCounts kc = kesten_window_counts(phi, {ExactReal(0), ExactReal(1)}, 8);
    CHECK(kc.counts == std::set<long>{34});
    CHECK(kc.b == 34);
  }
  SUBCASE("oracle: sampled starting points") {
    const Interval J{ExactReal(0), q("1/3")};
    const KestenCounts kc = kesten_window_counts(phi, J, 8);
    CHECK(kc.consecutive);
    CHECK(kc.within_window);
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<long> pick(0, 99999);
    std::set<long> sampled;
    for (int i = 0; i < 3000; ++i) {
      const ExactReal x = ExactReal::rational(pick(rng), 100000);
      const long c = orbit_hits(phi, J, x, 34);
      CHECK(kc.counts.count(c) == 1);
      sampled.insert(c);
    }
    // starting points just right of every event realize every value
    CHECK(sampled.size() <= kc.counts.size());
  }
  SUBCASE("property: consecutive values inside the window") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 15; ++i) {
      const ExactReal alpha = cf_value({1 + rng() % 3}, {1 + static_cast<long>(rng() % 3), 1 + static_cast<long>(rng() % 3)});
      ExactReal a = ExactReal::rational(static_cast<long>(rng() % 50), 100);
      ExactReal b = a + ExactReal::rational(1 + static_cast<long>(rng() % 50), 100);
      for (int m = 2; m <= 9; ++m) {
        const KestenCounts kc = kesten_window_counts(alpha, {a, b}, m);
        CHECK(kc.consecutive);
        CHECK(kc.within_window);
      }
    }
  }
}

// All-exact event sweep: the count values of sum_{i<q} 1_J(x + i alpha).
std::set<long> kesten_counts_exact(const ExactReal& alpha, const Interval& J, long q) {
  std::vector<std::pair<ExactReal, int>> ev;
  ExactReal shift(0);
  long c = 0;
  for (long i = 0; i < q; ++i) {
    if (J.contains(shift)) ++c;
    ev.emplace_back((J.lo - shift).frac(), +1);
    ev.emplace_back((J.hi - shift).frac(), -1);
    shift = (shift + alpha).frac();
  }
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::set<long> out{c};
  std::size_t i = 0;
  while (i < ev.size() && ev[i].first.is_zero()) ++i;
  while (i < ev.size()) {
    std::size_t j = i;
    while (j < ev.size() && ev[j].first == ev[i].first) c += ev[j++].second;
    out.insert(c);
    i = j;
  }
  return out;
}

TEST_CASE("property: Kesten counts agree with an all-exact sweep") {
  std::mt19937_64 rng(12);
  std::vector<ExactReal> alphas{q("golden"), q("sqrt(2)-1"), q("sqrt(3)-1")};
  for (int i = 0; i < 4; ++i) alphas.push_back(cf_value({1 + rng() % 4}, {1 + static_cast<long>(rng() % 4)}));
  for (const auto& alpha : alphas) {
    // endpoints at 0 and 1, quadratic endpoints, and J.hi - J.lo a multiple of alpha
    const std::vector<Interval> Js{{ExactReal(0), q("1/3")},
                                   {q("2/7"), ExactReal(1)},
                                   {q("1/2") - alpha / ExactReal(4), q("1/2") + alpha / ExactReal(4)},
                                   {q("1/10"), (q("1/10") + ExactReal(2) * alpha).frac()}};
    for (const auto& J : Js) {
      if (!(J.lo < J.hi)) continue;
      for (int m = 2; m <= 7; ++m) {
        const KestenCounts kc = kesten_window_counts(alpha, J, m);
        CHECK(kc.counts == kesten_counts_exact(alpha, J, kc.q.get_si()));
      }
    }
  }
}

TEST_CASE("mixing_falsifier") {
  const ExactReal phi = q("golden");
  SUBCASE("one cell") {
    const MixingReport rep = mixing_falsifier(phi, q("1/3"), 6, 8, 1);
    for (const auto& t : rep.times) CHECK(t.min_missed == 0);
  }
  SUBCASE("golden, t = 2/5") {
    const MixingReport rep = mixing_falsifier(phi, q("2/5"), 6, 14);
    CHECK(rep.iet.size() == 3);
    for (const auto& mt : rep.times) {
      CHECK(mt.min_missed >= 6);
      CHECK(mt.at_most_seven);
      CHECK(mt.tau == mt.q.get_si() - 1 - mt.b);
      for (long j : mt.rotation_steps) CHECK(j < mt.q.get_si());
    }
  }
  SUBCASE("oracle: pointwise walk") {
    const ExactReal t = q("1/3");
    const MixingReport rep = mixing_falsifier(phi, t, 6, 7);
    CHECK(rep.iet.size() == 3);
    for (const auto& mt : rep.times) {
      std::mt19937_64 rng(9);
      for (int i = 0; i < 40; ++i) {
        const ExactReal x = ExactReal::rational(static_cast<long>(rng() % 9973), 9973);
        const ExactReal y = iterate(rep.iet, x, static_cast<std::uint64_t>(mt.tau));
        const int from = static_cast<int>((x * ExactReal(20)).floor().get_si());
        const int to = static_cast<int>((y * ExactReal(20)).floor().get_si());
        const auto& hit = mt.hit[from];
        CHECK(std::find(hit.begin(), hit.end(), to) != hit.end());
        CHECK(mt.displacements.count(y - x) == 1);
      }
    }
  }
}
