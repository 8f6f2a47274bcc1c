#include <cmath>

#include "doctest.h"
#include "ietlab/error.hpp"
#include "ietlab/scale.hpp"

using namespace ietlab;

namespace {

ScaleSequence table_of(std::uint64_t H, double (*f)(double)) {
  std::vector<double> v;
  for (std::uint64_t n = 1; n <= H; ++n) v.push_back(f(static_cast<double>(n)));
  return ScaleSequence::table(std::move(v));
}

}  // namespace

TEST_CASE("classify_scale: power sequences are all of the above") {
  for (double a : {0.25, 0.5, 1.0, 2.0, 3.5}) {
    const ScaleFlags f = classify_scale(ScaleSequence::power(a));
    CHECK(f.monotone);
    CHECK(f.steady);
    CHECK(f.two_jumpy);
    CHECK(f.bounded_ratio);
    CHECK(f.nice);
    CHECK(f.certified_closed_form);
  }
}

TEST_CASE("classify_scale: 2^n is nice but not steady") {
  const ScaleFlags f = classify_scale(table_of(512, [](double n) { return std::pow(2.0, n); }));
  CHECK(f.monotone);
  CHECK_FALSE(f.steady);
  CHECK(f.two_jumpy);
  CHECK(f.bounded_ratio);
  CHECK(f.nice);
  CHECK_FALSE(f.certified_closed_form);
}

TEST_CASE("classify_scale: log(n+1) is not two-jumpy") {
  const ScaleFlags f = classify_scale(table_of(1 << 16, [](double n) { return std::log(n + 1.0); }));
  CHECK(f.monotone);
  CHECK(f.steady);
  CHECK_FALSE(f.two_jumpy);
  CHECK_FALSE(f.nice);
}

TEST_CASE("classify_scale: finite-horizon rules agree with the closed form on power tables") {
  for (double a : {0.5, 1.0, 2.0}) {
    std::vector<double> v;
    for (int n = 1; n <= 1 << 14; ++n) v.push_back(std::pow(n, a));
    const ScaleFlags f = classify_scale(ScaleSequence::table(v));
    CHECK(f.monotone);
    CHECK(f.steady);
    CHECK(f.two_jumpy);
    CHECK(f.nice);
  }
}

TEST_CASE("ScaleSequence parsing and evaluation") {
  const ScaleSequence p = ScaleSequence::parse("pow:2");
  CHECK(p(3) == doctest::Approx(9.0));
  CHECK(*p.exact_at(7) == mpq_class(49));
  const ScaleSequence pl = ScaleSequence::parse("powlog:1,1");
  CHECK(pl.kind() == ScaleSequence::Kind::PowerLog);
  CHECK(pl.first_index() == 2);
  CHECK(pl(10) == doctest::Approx(10 * std::log(10.0)));
  CHECK(pl.log_at(1000) == doctest::Approx(std::log(1000 * std::log(1000.0))));
  const ScaleSequence e = ScaleSequence::parse("expr:n^2*ln(n) + 2*(n-1)/3");
  CHECK(e(5) == doctest::Approx(25 * std::log(5.0) + 8.0 / 3.0));
  CHECK(ScaleSequence::parse("expr:-n^2")(3) == doctest::Approx(-9.0));
  CHECK(ScaleSequence::parse("table:1,2,4")(3) == doctest::Approx(4.0));
  CHECK(ScaleSequence::parse(p.to_string()).to_string() == p.to_string());
  CHECK_THROWS_AS(ScaleSequence::parse("expr:n+"), Error);
  CHECK_THROWS_AS(ScaleSequence::parse("expr:foo(n)"), Error);
  CHECK_THROWS_AS(ScaleSequence::parse("quux:1"), Error);
  CHECK_THROWS_AS(ScaleSequence::table({1.0, -2.0}), Error);
}

TEST_CASE("classify_scale on an expression") {
  const ScaleFlags f = classify_scale(ScaleSequence::expr("n*ln(n)", 1 << 16));
  CHECK(f.monotone);
  CHECK(f.two_jumpy);
  CHECK(f.nice);
}
