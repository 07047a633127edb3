#include <cmath>
#include <random>

#include "doctest.h"
#include "nhflow/nconn.hpp"

using namespace nhflow;

namespace {

ChartPtr chart21() {
  return std::make_shared<Chart>(2, 1,
                                 std::vector<std::string>{"x1", "x2", "y3"});
}

ChartPtr chart22() {
  return std::make_shared<Chart>(
      2, 2, std::vector<std::string>{"x1", "x2", "y1", "y2"});
}

ExprPtr random_field(std::mt19937_64& rng, int nsym) {
  std::uniform_real_distribution<double> amp(-0.5, 0.5);
  std::uniform_int_distribution<int> pick(0, nsym - 1);
  std::vector<ExprPtr> terms{constant(amp(rng))};
  for (int t = 0; t < 2; ++t) {
    ExprPtr arg = add2(coordinate(pick(rng)), constant(amp(rng)));
    terms.push_back(mul2(constant(amp(rng)),
                         t % 2 ? cos_(arg) : mul2(sin_(arg), coordinate(pick(rng)))));
  }
  return add(std::move(terms));
}

NConnection random_nconn(ChartPtr ch, std::mt19937_64& rng) {
  int n = ch->n(), m = ch->m();
  ExprMatrix N(std::vector<int>{m, n});
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) N(a, i) = random_field(rng, ch->dim());
  return NConnection{ch, N};
}

// Example connection used across the suite: N^3_1 = x1^2, N^3_2 = x1*y3.
NConnection example_nconn(ChartPtr ch) {
  ExprMatrix N(std::vector<int>{1, 2});
  N(0, 0) = parse_scalar_field("x1^2", *ch);
  N(0, 1) = parse_scalar_field("x1*y3", *ch);
  return NConnection{ch, N};
}

double eval_at(const NConnection& nc, int a, int i,
               std::vector<double> u) {
  return evaluate(nc.coeff(a, i), std::span<const double>(u));
}

// Anholonomy coefficients from nested finite-difference frame commutators,
// fully independent of the symbolic derivative path.
NDArray<double> anholonomy_fd(const NConnection& nc, const Point& p) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  double h = 1e-3;

  // frame matrix entry E(alpha, mu) as a function of position
  auto E = [&](int alpha, int mu, const std::vector<double>& u) -> double {
    if (alpha == mu) return 1.0;
    if (alpha < n && mu >= n) return -eval_at(nc, mu - n, alpha, u);
    return 0.0;
  };
  auto fd4 = [&](auto&& f, std::vector<double> u, int k) {
    auto at = [&](double s) {
      auto v = u;
      v[k] += s;
      return f(v);
    };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  };
  auto frame_deriv = [&](int alpha, auto&& f, const std::vector<double>& u) {
    double s = 0.0;
    for (int mu = 0; mu < d; ++mu) {
      double c = E(alpha, mu, u);
      if (c != 0.0) s += c * fd4(f, u, mu);
    }
    return s;
  };

  NDArray<double> w(std::vector<int>{d, d, d});
  for (int al = 0; al < d; ++al) {
    for (int be = 0; be < d; ++be) {
      std::vector<double> cvec(d);
      for (int nu = 0; nu < d; ++nu) {
        auto fb = [&](const std::vector<double>& u) { return E(be, nu, u); };
        auto fa = [&](const std::vector<double>& u) { return E(al, nu, u); };
        cvec[nu] = frame_deriv(al, fb, p.u) - frame_deriv(be, fa, p.u);
      }
      // expand in the frame basis through the coframe
      for (int ga = 0; ga < d; ++ga) {
        double s = cvec[ga];
        if (ga >= n)
          for (int i = 0; i < n; ++i)
            s += eval_at(nc, ga - n, i, p.u) * cvec[i];
        w(ga, al, be) = s;
      }
    }
  }
  return w;
}

}  // namespace

TEST_CASE("zero N-connection gives identity frames") {
  auto ch = chart21();
  NConnection nc = NConnection::zero(ch);
  Point p{ch.get(), {1.0, 2.0, 3.0}};
  FrameMatrices fm = adapted_frames(nc, p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(fm.e(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
      CHECK(fm.e_inv(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    }
}

TEST_CASE("coframe row of the example connection") {
  auto ch = chart21();
  NConnection nc = example_nconn(ch);
  Point p{ch.get(), {1.0, 2.0, 3.0}};
  auto row = coframe_row(nc, p, 2);
  CHECK(row[0] == doctest::Approx(1.0));
  CHECK(row[1] == doctest::Approx(3.0));
  CHECK(row[2] == doctest::Approx(1.0));
}

TEST_CASE("frame times inverse is identity for random connections") {
  std::mt19937_64 rng(42);
  auto ch = chart21();
  std::uniform_real_distribution<double> pt(0.3, 5.9);
  for (int trial = 0; trial < 20; ++trial) {
    NConnection nc = random_nconn(ch, rng);
    Point p{ch.get(), {pt(rng), pt(rng), pt(rng)}};
    FrameMatrices fm = adapted_frames(nc, p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += fm.e(i, k) * fm.e_inv(k, j);
        CHECK(std::fabs(s - (i == j ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("N-curvature vanishes for symmetric gradients in x") {
  auto ch = chart21();
  ExprMatrix N(std::vector<int>{1, 2});
  N(0, 0) = parse_scalar_field("2*x2 + 1", *ch);
  N(0, 1) = parse_scalar_field("2*x1 - 3", *ch);
  NConnection nc{ch, N};
  Point p{ch.get(), {1.3, 0.4, 2.0}};
  auto om = n_curvature(nc, p);
  CHECK(std::fabs(om(0, 0, 1)) < 1e-14);
}

TEST_CASE("N-curvature of the example connection, against the commutator") {
  auto ch = chart21();
  NConnection nc = example_nconn(ch);
  Point p{ch.get(), {1.0, 2.0, 3.0}};
  auto om = n_curvature(nc, p);
  // x1^3 - y3 at (1,2,3)
  CHECK(om(0, 0, 1) == doctest::Approx(-2.0));
  CHECK(om(0, 1, 0) == doctest::Approx(2.0));
  auto wfd = anholonomy_fd(nc, p);
  CHECK(std::fabs(wfd(2, 0, 1) - om(0, 0, 1)) < 1e-7);
}

TEST_CASE("N-curvature is antisymmetric for random connections") {
  std::mt19937_64 rng(4242);
  auto ch = chart21();
  std::uniform_real_distribution<double> pt(0.3, 5.9);
  for (int trial = 0; trial < 10; ++trial) {
    NConnection nc = random_nconn(ch, rng);
    Point p{ch.get(), {pt(rng), pt(rng), pt(rng)}};
    auto om = n_curvature(nc, p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(std::fabs(om(0, i, j) + om(0, j, i)) < 1e-14);
  }
}

TEST_CASE("anholonomy coefficients") {
  auto ch = chart21();

  SUBCASE("constant N gives zero") {
    ExprMatrix N(std::vector<int>{1, 2});
    N(0, 0) = constant(0.7);
    N(0, 1) = constant(-1.2);
    NConnection nc{ch, N};
    Point p{ch.get(), {1.0, 1.0, 1.0}};
    auto w = anholonomy(nc, p);
    for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::fabs(w[k]) < 1e-14);
  }

  SUBCASE("vertical derivative entry of the example") {
    NConnection nc = example_nconn(ch);
    Point p{ch.get(), {1.0, 2.0, 3.0}};
    auto w = anholonomy(nc, p);
    CHECK(w(2, 1, 2) == doctest::Approx(1.0));   // d/dy3 of N^3_2 = x1
    CHECK(w(2, 2, 1) == doctest::Approx(-1.0));
  }

  SUBCASE("matches finite-difference commutators") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pt(0.5, 5.5);
    for (int trial = 0; trial < 6; ++trial) {
      NConnection nc = random_nconn(ch, rng);
      Point p{ch.get(), {pt(rng), pt(rng), pt(rng)}};
      auto w = anholonomy(nc, p);
      auto wfd = anholonomy_fd(nc, p);
      for (int g = 0; g < 3; ++g)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            CHECK(std::fabs(w(g, a, b) - wfd(g, a, b)) < 1e-7);
    }
  }
}

TEST_CASE("off-diagonal assembly") {
  auto ch = chart21();

  SUBCASE("zero N is block diagonal") {
    DMetric dm(ch, identity_exprs(2), identity_exprs(1),
               NConnection::zero(ch));
    Point p{ch.get(), {0.5, 0.5, 0.5}};
    auto A = assemble_offdiag_metric(dm, p);
    CHECK(A(0, 2) == doctest::Approx(0.0));
    CHECK(A(0, 0) == doctest::Approx(1.0));
  }

  SUBCASE("hand-evaluated entries") {
    ExprMatrix N(std::vector<int>{1, 2});
    N(0, 0) = constant(0.7);
    N(0, 1) = constant(0.0);
    DMetric dm(ch, identity_exprs(2), identity_exprs(1), NConnection{ch, N});
    Point p{ch.get(), {1.0, 1.0, 1.0}};
    auto A = assemble_offdiag_metric(dm, p);
    CHECK(A(0, 0) == doctest::Approx(1.49));
    CHECK(A(0, 2) == doctest::Approx(0.7));
    CHECK(A(2, 0) == doctest::Approx(0.7));
  }

  SUBCASE("matches the coframe congruence") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pt(0.3, 5.9);
    for (int trial = 0; trial < 8; ++trial) {
      NConnection nc = random_nconn(ch, rng);
      ExprMatrix g = identity_exprs(2);
      g(0, 0) = add2(constant(1.5), mul2(constant(0.3), sin_(coordinate(0))));
      g(0, 1) = g(1, 0) = mul2(constant(0.2), cos_(coordinate(1)));
      ExprMatrix h = identity_exprs(1);
      h(0, 0) = add2(constant(2.0), mul2(constant(0.4), sin_(coordinate(2))));
      DMetric dm(ch, g, h, nc);
      Point p{ch.get(), {pt(rng), pt(rng), pt(rng)}};
      auto A = assemble_offdiag_metric(dm, p);
      FrameMatrices fm = adapted_frames(nc, p);
      auto D = eval_tensor(dm.full(), p.u);
      // A = e_inv * diag(g,h) * e_inv^T
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = 0; nu < 3; ++nu) {
          double s = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              s += fm.e_inv(mu, a) * D(a, b) * fm.e_inv(nu, b);
          CHECK(std::fabs(A(mu, nu) - s) < 1e-11);
        }
    }
  }
}

TEST_CASE("N-connection extraction") {
  auto ch = chart21();

  SUBCASE("block diagonal gives zero") {
    ExprMatrix gbar = identity_exprs(3);
    NConnection nc = extract_nconnection(gbar, ch);
    Point p{ch.get(), {1.0, 1.0, 1.0}};
    CHECK(evaluate(nc.coeff(0, 0), p.u) == doctest::Approx(0.0));
    CHECK(evaluate(nc.coeff(0, 1), p.u) == doctest::Approx(0.0));
  }

  SUBCASE("identity v-block forces N = gbar_13") {
    ExprMatrix gbar = identity_exprs(3);
    gbar(0, 2) = gbar(2, 0) = constant(0.7);
    NConnection nc = extract_nconnection(gbar, ch);
    Point p{ch.get(), {1.0, 1.0, 1.0}};
    CHECK(evaluate(nc.coeff(0, 0), p.u) == doctest::Approx(0.7));
  }

  SUBCASE("assemble then extract round-trips") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> pt(0.3, 5.9);
    for (int trial = 0; trial < 5; ++trial) {
      NConnection nc = random_nconn(ch, rng);
      ExprMatrix g = identity_exprs(2);
      g(0, 0) = add2(constant(1.4), mul2(constant(0.2), cos_(coordinate(2))));
      ExprMatrix h = identity_exprs(1);
      h(0, 0) = add2(constant(1.1), mul2(constant(0.3), sin_(coordinate(0))));
      DMetric dm(ch, g, h, nc);
      ExprMatrix gbar = assemble_offdiag_fields(dm);
      NConnection back = extract_nconnection(gbar, ch);
      DMetric dm2 = dmetric_from_offdiag(gbar, ch);
      for (int s = 0; s < 100; ++s) {
        std::vector<double> u{pt(rng), pt(rng), pt(rng)};
        for (int a = 0; a < 1; ++a)
          for (int i = 0; i < 2; ++i)
            CHECK(std::fabs(evaluate(back.coeff(a, i), u) -
                            evaluate(nc.coeff(a, i), u)) < 1e-10);
        auto A1 = eval_tensor(gbar, u);
        auto A2 = eval_tensor(assemble_offdiag_fields(dm2), u);
        for (std::size_t k = 0; k < A1.size(); ++k)
          CHECK(std::fabs(A1[k] - A2[k]) < 1e-9);
      }
    }
  }
}

TEST_CASE("almost complex structure") {
  auto ch = chart22();

  SUBCASE("zero N block form") {
    NConnection nc = NConnection::zero(ch);
    Point p{ch.get(), {1.0, 1.0, 1.0, 1.0}};
    auto F = almost_complex(nc, p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(F(i, j) == doctest::Approx(0.0));
        CHECK(F(i, 2 + j) == doctest::Approx(i == j ? 1.0 : 0.0));
        CHECK(F(2 + i, j) == doctest::Approx(i == j ? -1.0 : 0.0));
        CHECK(F(2 + i, 2 + j) == doctest::Approx(0.0));
      }
  }

  SUBCASE("F squared is minus identity") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pt(0.3, 5.9);
    for (int trial = 0; trial < 20; ++trial) {
      NConnection nc = random_nconn(ch, rng);
      Point p{ch.get(), {pt(rng), pt(rng), pt(rng), pt(rng)}};
      auto F = almost_complex(nc, p);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double s = 0.0;
          for (int k = 0; k < 4; ++k) s += F(i, k) * F(k, j);
          CHECK(std::fabs(s + (i == j ? 1.0 : 0.0)) < 1e-10);
        }
    }
  }

  SUBCASE("applying twice negates a vector") {
    std::mt19937_64 rng(32);
    NConnection nc = random_nconn(ch, rng);
    Point p{ch.get(), {1.1, 0.9, 2.0, 0.4}};
    auto F = almost_complex(nc, p);
    std::vector<double> v{0.3, -1.2, 0.8, 2.5}, w(4, 0.0), z(4, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) w[i] += F(i, j) * v[j];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) z[i] += F(i, j) * w[j];
    for (int i = 0; i < 4; ++i) CHECK(z[i] == doctest::Approx(-v[i]));
  }

  SUBCASE("rejects n != m") {
    auto bad = chart21();
    NConnection nc = NConnection::zero(bad);
    Point p{bad.get(), {1.0, 1.0, 1.0}};
    CHECK_THROWS_AS(almost_complex(nc, p), std::invalid_argument);
  }
}
