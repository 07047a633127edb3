#include <cmath>
#include <random>

#include "doctest.h"
#include "nhflow/expr.hpp"

using namespace nhflow;

namespace {

Chart chart21() { return Chart(2, 1, {"x1", "x2", "y3"}); }

// 4th-order central difference in coordinate k.
double fd4(const ExprPtr& f, std::vector<double> u, int k, double h = 1e-2) {
  auto at = [&](double s) {
    auto v = u;
    v[k] += s;
    return evaluate(f, std::span<const double>(v));
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

// Random bounded trig-polynomial field over the chart symbols.
ExprPtr random_field(std::mt19937_64& rng, int nsym) {
  std::uniform_real_distribution<double> amp(-0.8, 0.8);
  std::uniform_int_distribution<int> wave(1, 2);
  std::uniform_int_distribution<int> pick(0, nsym - 1);
  std::vector<ExprPtr> terms{constant(amp(rng))};
  for (int t = 0; t < 3; ++t) {
    ExprPtr arg = add2(mul2(constant(double(wave(rng))), coordinate(pick(rng))),
                       constant(amp(rng)));
    ExprPtr osc = (t % 2 == 0) ? sin_(arg) : cos_(arg);
    terms.push_back(mul2(constant(amp(rng)), mul2(osc, coordinate(pick(rng)))));
  }
  return add(std::move(terms));
}

}  // namespace

TEST_CASE("parse builds expected trees") {
  Chart ch = chart21();
  ExprPtr f = parse_scalar_field("x1^2*y3", ch);
  CHECK(evaluate(f, std::vector<double>{2.0, 0.0, 5.0}) == doctest::Approx(20.0));

  ExprPtr g = parse_scalar_field("1/2*(y3^2)", ch);
  CHECK(evaluate(g, std::vector<double>{0.0, 0.0, 3.0}) == doctest::Approx(4.5));
}

TEST_CASE("parse reports unknown identifiers with location") {
  Chart ch = chart21();
  try {
    parse_scalar_field("sin(x1)+q", ch);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'q'") != std::string::npos);
    CHECK(e.line == 1);
    CHECK(e.col == 9);
  }
}

TEST_CASE("parse reports arity errors") {
  Chart ch = chart21();
  CHECK_THROWS_AS(parse_scalar_field("sin(x1, x2)", ch), ParseError);
  CHECK_THROWS_AS(parse_scalar_field("x1^x2", ch), ParseError);
  CHECK_THROWS_AS(parse_scalar_field("x1+", ch), ParseError);
}

TEST_CASE("evaluate basics and domain errors") {
  Chart ch = chart21();
  CHECK(evaluate(parse_scalar_field("x1+x2", ch),
                 std::vector<double>{1.0, 2.0, 0.0}) == doctest::Approx(3.0));
  CHECK(evaluate(parse_scalar_field("sqrt(x1^2+x2^2)", ch),
                 std::vector<double>{3.0, 4.0, 0.0}) == doctest::Approx(5.0));
  CHECK_THROWS_AS(evaluate(parse_scalar_field("log(x1)", ch),
                           std::vector<double>{-1.0, 0.0, 0.0}),
                  EvalError);
  CHECK_THROWS_AS(evaluate(parse_scalar_field("1/x1", ch),
                           std::vector<double>{0.0, 0.0, 0.0}),
                  EvalError);
}

TEST_CASE("derivative closed forms") {
  Chart ch = chart21();
  ExprPtr f = parse_scalar_field("x1^2*y3", ch);
  ExprPtr dy = differentiate(f, 2);
  std::vector<double> u{1.7, 0.0, 9.0};
  CHECK(evaluate(dy, u) == doctest::Approx(1.7 * 1.7));

  ExprPtr c = parse_scalar_field("7", ch);
  CHECK(is_zero(differentiate(c, 0)));

  ExprPtr s = parse_scalar_field("sin(x1*y3)", ch);
  std::vector<double> p{1.0, 0.0, 3.0};
  double expect = 3.0 * std::cos(3.0);
  CHECK(evaluate(differentiate(s, 0), p) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(fd4(s, p, 0, 1e-3) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("derivative matches finite differences on random fields") {
  std::mt19937_64 rng(20240811);
  Chart ch = chart21();
  std::uniform_real_distribution<double> pt(0.5, 5.5);
  for (int trial = 0; trial < 40; ++trial) {
    ExprPtr f = random_field(rng, 3);
    std::vector<double> u{pt(rng), pt(rng), pt(rng)};
    for (int k = 0; k < 3; ++k) {
      double sym = evaluate(differentiate(f, k), u);
      double fd = fd4(f, u, k);
      double scale = std::max(1.0, std::fabs(sym));
      CHECK(std::fabs(sym - fd) / scale < 1e-7);
    }
  }
}

TEST_CASE("mixed partials commute") {
  std::mt19937_64 rng(7);
  Chart ch = chart21();
  std::uniform_real_distribution<double> pt(0.5, 5.5);
  for (int trial = 0; trial < 20; ++trial) {
    ExprPtr f = random_field(rng, 3);
    ExprPtr dab = differentiate(differentiate(f, 0), 2);
    ExprPtr dba = differentiate(differentiate(f, 2), 0);
    for (int s = 0; s < 5; ++s) {
      std::vector<double> u{pt(rng), pt(rng), pt(rng)};
      CHECK(std::fabs(evaluate(dab, u) - evaluate(dba, u)) < 1e-10);
    }
  }
}

TEST_CASE("print then parse is evaluation-equivalent") {
  std::mt19937_64 rng(99);
  Chart ch = chart21();
  std::uniform_real_distribution<double> pt(0.5, 5.5);
  std::vector<std::string> hand = {
      "x1^2*y3 + sin(x1*x2) - 1/2*(y3^2)",
      "sqrt(x1^2+x2^2) * exp(-x1) + abs(x2-3)",
      "((x1)^4 + (x2)^4)^(1/4)",
      "log(x1+10)/x2 - cos(y3)^2",
  };
  for (const auto& src : hand) {
    ExprPtr f = parse_scalar_field(src, ch);
    ExprPtr g = parse_scalar_field(to_string(f, ch), ch);
    for (int s = 0; s < 8; ++s) {
      std::vector<double> u{pt(rng), pt(rng), pt(rng)};
      double a = evaluate(f, u), b = evaluate(g, u);
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    ExprPtr f = random_field(rng, 3);
    ExprPtr g = parse_scalar_field(to_string(f, ch), ch);
    std::vector<double> u{pt(rng), pt(rng), pt(rng)};
    CHECK(evaluate(f, u) == doctest::Approx(evaluate(g, u)).epsilon(1e-12));
  }
}

TEST_CASE("derivatives are stable under renormalization") {
  std::mt19937_64 rng(5150);
  Chart ch = chart21();
  for (int trial = 0; trial < 10; ++trial) {
    ExprPtr f = random_field(rng, 3);
    ExprPtr d1 = differentiate(f, 0);
    // re-normalizing an already normal tree must be the identity
    ExprPtr renorm = add({d1});
    CHECK(compare(d1, renorm) == 0);
  }
}

TEST_CASE("rational powers evaluate through exp log with domain checks") {
  Chart ch = chart21();
  ExprPtr f = parse_scalar_field("x1^(3/2)", ch);
  CHECK(evaluate(f, std::vector<double>{4.0, 0.0, 0.0}) == doctest::Approx(8.0));
  CHECK_THROWS_AS(evaluate(f, std::vector<double>{-4.0, 0.0, 0.0}), EvalError);
  ExprPtr quartic = parse_scalar_field("(x1^4+x2^4)^(1/4)", ch);
  CHECK(evaluate(quartic, std::vector<double>{1.0, 1.0, 0.0}) ==
        doctest::Approx(std::pow(2.0, 0.25)));
}
