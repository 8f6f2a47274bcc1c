#include <random>
#include <set>

#include "doctest.h"
#include "ietlab/iet.hpp"
#include "support.hpp"

using namespace ietlab;

namespace {

ExactReal q(const char* s) { return ExactReal::parse(s); }

Iet three_iet() { return Iet::parse("iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]"); }

// Independent oracle for Delta'_n: power by repeated composition, then every
// ordered pair of translations differenced with circle arithmetic.
std::set<ExactReal> delta_prime_by_enumeration(const Iet& t, int n) {
  std::set<ExactReal> out;
  Iet tk = Iet::identity();
  for (int k = 1; k <= n; ++k) {
    tk = compose(t, tk);
    const DeltaSet d = delta_set(tk);
    for (const auto& x : d.points) {
      for (const auto& y : d.points) out.insert(circle_sub(CirclePoint(x), CirclePoint(y)).value());
    }
  }
  return out;
}

// Exact measure check that the images T(I_k) tile [0,1).
bool images_partition(const Iet& t) {
  std::vector<std::pair<ExactReal, ExactReal>> images;
  for (int k = 0; k < t.size(); ++k) {
    const ExactReal lo = t.breakpoints()[k] + t.translations()[k];
    images.emplace_back(lo, lo + t.lengths()[k]);
  }
  std::sort(images.begin(), images.end());
  ExactReal cursor(0);
  for (const auto& [lo, hi] : images) {
    if (lo != cursor) return false;
    cursor = hi;
  }
  return cursor == ExactReal(1);
}

}  // namespace

TEST_CASE("build_iet: rotation") {
  const ExactReal alpha = q("sqrt(2)-1");
  const Iet r = Iet::build({ExactReal(1) - alpha, alpha}, {2, 1});
  CHECK(r.translations()[0] == alpha);
  CHECK(r.translations()[1] == alpha - 1);
  CHECK(r == Iet::rotation(alpha));
}

TEST_CASE("build_iet: 3-IET breakpoints and translations") {
  // Images come out in the order I3, I2, I1, so I1 -> [1/2,1), I2 -> [1/4,1/2),
  // I3 -> [0,1/4) and h = (1/2, -1/4, -3/4).
  const Iet t = three_iet();
  const std::vector<ExactReal> bps{q("0"), q("1/2"), q("3/4"), q("1")};
  CHECK(t.breakpoints() == bps);
  CHECK(t.translations()[0] == q("1/2"));
  CHECK(t.translations()[1] == q("-1/4"));
  CHECK(t.translations()[2] == q("-3/4"));
}

TEST_CASE("build_iet: identity permutation is accepted") {
  const Iet t = Iet::parse("iet: lengths=[1/2,1/2] perm=[1,2]");
  CHECK(t.is_identity());
  CHECK(t == Iet::identity());
  CHECK(t.canonical().size() == 1);
}

TEST_CASE("build_iet: errors") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Domain;
  };
  CHECK(kind_of([] { Iet::parse("iet: lengths=[1/2,1/3] perm=[2,1]"); }) == ErrorKind::BadLengths);
  CHECK(kind_of([] { Iet::parse("iet: lengths=[3/2,-1/2] perm=[2,1]"); }) == ErrorKind::BadLengths);
  CHECK(kind_of([] { Iet::parse("iet: lengths=[1/2,1/2] perm=[1,1]"); }) == ErrorKind::BadPermutation);
  CHECK(kind_of([] { Iet::parse("iet: lengths=[1/2,1/2] perm=[1,2,3]"); }) == ErrorKind::BadPermutation);
  CHECK(kind_of([] { Iet::parse("foo"); }) == ErrorKind::Parse);
}

TEST_CASE("evaluate") {
  CHECK(three_iet()(q("0.1")) == q("0.6"));
  CHECK(Iet::rotation(q("silver"))(q("0")) == q("silver"));
  CHECK(Iet::identity()(q("0.3")) == q("0.3"));
  CHECK(three_iet().evaluate(CirclePoint(q("0.8"))).value() == q("0.05"));
}

TEST_CASE("invert") {
  const ExactReal alpha = q("golden");
  CHECK(invert(Iet::rotation(alpha)) == Iet::rotation(ExactReal(1) - alpha));
  CHECK(invert(Iet::identity()) == Iet::identity());

  const Iet inv = invert(three_iet());
  CHECK(inv == Iet::parse("iet: lengths=[1/4,1/4,1/2] perm=[3,2,1]"));
  std::mt19937_64 rng(3);
  const Iet t = three_iet();
  for (int i = 0; i < 100; ++i) {
    const ExactReal x = testing::random_rational(rng, 10000);
    CHECK(inv(t(x)) == x);
    CHECK(t(inv(x)) == x);
  }
}

TEST_CASE("compose") {
  const ExactReal a = q("sqrt(2)-1");
  const ExactReal b = q("3*sqrt(2)-4");
  CHECK(compose(Iet::rotation(a), Iet::rotation(b)) == Iet::rotation((a + b).frac()));

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Iet t = testing::random_quadratic_iet(rng, 2 + i % 4);
    CHECK(compose(t, invert(t)).is_identity());
    CHECK(compose(t, invert(t)).size() == 1);
  }

  // (r-1)k+1 interval bound for powers of a 3-IET
  const Iet t = Iet::parse("iet: lengths=[2-sqrt(2), sqrt(2)/2-1/2, sqrt(2)/2-1/2] perm=[3,2,1]");
  Iet tk = t;
  for (int n = 2; n <= 50; ++n) {
    tk = compose(t, tk);
    CHECK(tk.size() <= 2 * n + 1);
  }
}

TEST_CASE("property: compose is associative and preserves the partition") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 40; ++i) {
    const Iet a = testing::random_quadratic_iet(rng, 2 + i % 4);
    const Iet b = testing::random_quadratic_iet(rng, 2 + (i + 1) % 4);
    const Iet c = testing::random_rational_iet(rng, 2 + (i + 2) % 4);
    const Iet left = compose(compose(a, b), c);
    const Iet right = compose(a, compose(b, c));
    CHECK(left == right);
    CHECK(left.breakpoints() == right.breakpoints());
    CHECK(images_partition(left));
    CHECK(images_partition(a));
  }
}

TEST_CASE("power") {
  CHECK(power(three_iet(), 0).is_identity());
  const ExactReal alpha = q("golden");
  CHECK(power(Iet::rotation(alpha), 9) == Iet::rotation((ExactReal(9) * alpha).frac()));

  // Iteration oracle for power(T, 7).
  const Iet t = Iet::parse("iet: lengths=[sqrt(2)-1, 1/2, 3/2-sqrt(2)] perm=[3,2,1]");
  const Iet t7 = power(t, 7);
  CHECK(t7 == power(t, 7, PowerMode::Iterative));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    ExactReal x = testing::random_quadratic(rng, 2);
    ExactReal y = x;
    for (int k = 0; k < 7; ++k) y = t(y);
    CHECK(t7(x) == y);
    CHECK(iterate(t, x, 7) == y);
  }
}

TEST_CASE("delta_set") {
  const DeltaSet rot = delta_set(Iet::rotation(q("silver")));
  REQUIRE(rot.size() == 1);
  CHECK(rot.points[0] == q("silver"));
  CHECK(delta_set(Iet::identity()).points == std::vector<ExactReal>{ExactReal(0)});
  const std::vector<ExactReal> expected{q("1/4"), q("1/2"), q("3/4")};
  CHECK(delta_set(three_iet()).points == expected);
}

TEST_CASE("delta_prime_n") {
  for (int n : {1, 3, 10}) {
    CHECK(delta_prime_n(Iet::rotation(q("silver")), n).points == std::vector<ExactReal>{ExactReal(0)});
  }
  CHECK(delta_prime_n(Iet::identity(), 5).points == std::vector<ExactReal>{ExactReal(0)});

  const Iet t = three_iet();
  const auto oracle = delta_prime_by_enumeration(t, 2);
  const DeltaSet d = delta_prime_n(t, 2);
  CHECK(d.points == std::vector<ExactReal>(oracle.begin(), oracle.end()));
  CHECK(d.size() < 9 * 8);
  CHECK(d.contains(ExactReal(0)));
}

TEST_CASE("property: delta_prime_n matches enumeration, is monotone and bounded") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 12; ++i) {
    const int r = 2 + i % 4;
    const Iet t = (i % 2 == 0) ? testing::random_quadratic_iet(rng, r) : testing::random_rational_iet(rng, r, 60);
    DeltaSet prev = delta_prime_n(t, 1);
    for (int n = 2; n <= 8; ++n) {
      const DeltaSet cur = delta_prime_n(t, n);
      CHECK(prev.subset_of(cur));
      CHECK(cur.size() < static_cast<std::size_t>(r * r * n * n * n));
      prev = cur;
    }
    const auto oracle = delta_prime_by_enumeration(t, 8);
    CHECK(prev.points == std::vector<ExactReal>(oracle.begin(), oracle.end()));
  }
}

TEST_CASE("keane_certificate") {
  CHECK(std::holds_alternative<CertifiedMinimal>(keane_certificate(Iet::rotation(q("sqrt(2)-1")), 1000)));

  const KeaneVerdict third = keane_certificate(Iet::rotation(q("1/3")), 5);
  REQUIRE(std::holds_alternative<Violated>(third));
  CHECK(std::get<Violated>(third).k == 3);

  // Oracle: exact orbit collision search by hand: T(1/2) = 1/2 + h2 = 1/4 (not a
  // discontinuity), T(3/4) = 3/4 + h3 = 0, T(1/4) = 3/4 -> collision at k = 2.
  const KeaneVerdict dep = keane_certificate(three_iet(), 10);
  REQUIRE(std::holds_alternative<Violated>(dep));
  CHECK(std::get<Violated>(dep).k == 2);
  CHECK(std::holds_alternative<Inconclusive>(keane_certificate(Iet::identity(), 10)));
}

TEST_CASE("parse and print IET literals") {
  const Iet t = Iet::parse("iet: lengths=[1/2, 1/4, 1/4] perm=[3,2,1]");
  CHECK(t.to_string() == "iet: lengths=[1/2,1/4,1/4] perm=[3,2,1]");
  CHECK(Iet::parse(t.to_string()) == t);
  CHECK(Iet::parse("rot: alpha=sqrt(2)-1") == Iet::rotation(q("sqrt(2)-1")));
}
