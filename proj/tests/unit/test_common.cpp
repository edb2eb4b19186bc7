#include <doctest.h>

#include <cmath>
#include <sstream>

#include "torsel/common/csv.hpp"
#include "torsel/common/error.hpp"
#include "torsel/common/rng.hpp"
#include "torsel/common/stats.hpp"

using namespace torsel;

TEST_CASE("rng is reproducible and seeds separate streams") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= x != c.next();
  }
  CHECK(differs);
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
}

TEST_CASE("rng distributions stay in range") {
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.below(7) < 7u);
    sum += r.normal();
  }
  CHECK(std::abs(sum / 20000.0) < 0.03);
  const std::vector<double> w = {0.0, 1.0, 0.0};
  CHECK(r.weighted_index(w) == 1u);
  const std::vector<double> none = {0.0, 0.0};
  CHECK(r.weighted_index(none) == 2u);
}

TEST_CASE("quantiles use linear interpolation") {
  // numpy.quantile defaults
  std::vector<double> y = {3.1, 0.2, 7.7, 4.4, 4.4, 9.0, 1.5};
  CHECK(stats::quantile(y, 0.3) == doctest::Approx(2.78).epsilon(1e-12));
  CHECK(stats::quantile(y, 0.9) == doctest::Approx(8.22).epsilon(1e-12));
  CHECK(stats::median({1.0, 2.0, 3.0, 4.0}) == 2.5);
  CHECK_THROWS_AS(stats::quantile({}, 0.5), Error);
}

TEST_CASE("student t interval matches a reference implementation") {
  // scipy.stats.t over 1..10
  std::vector<double> x;
  for (int i = 1; i <= 10; ++i) x.push_back(i);
  const auto [lo, hi] = stats::t_interval(x, 0.95);
  CHECK(lo == doctest::Approx(3.33414941027832).epsilon(1e-10));
  CHECK(hi == doctest::Approx(7.66585058972168).epsilon(1e-10));
}

TEST_CASE("spearman correlation with and without ties") {
  // scipy.stats.spearmanr
  const std::vector<double> a = {1, 2, 3, 4, 5, 6, 7}, b = {2, 1, 4, 3, 7, 5, 6};
  CHECK(stats::spearman(a, b) == doctest::Approx(0.821428571428572).epsilon(1e-12));
  const std::vector<double> c = {1, 2, 2, 3}, d = {1, 3, 2, 4};
  CHECK(stats::spearman(c, d) == doctest::Approx(0.948683298050514).epsilon(1e-12));
}

TEST_CASE("csv helpers") {
  CHECK(csv::split("a,,b") == std::vector<std::string>{"a", "", "b"});
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) CHECK(std::stod(csv::fmt(v)) == v);
  CHECK(csv::fmt(0.5) == "0.5");
  CHECK_THROWS_AS(csv::to_int("12x", 4), ParseError);
  try {
    csv::to_double("nope", 9);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 9);
  }
  std::istringstream in("x\r\ny\n");
  CHECK(csv::read_lines(in) == std::vector<std::string>{"x", "y"});
}
