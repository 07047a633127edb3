#include "nhflow/randchart.hpp"

#include <cmath>

namespace nhflow {

ExprPtr random_trig_field(std::mt19937_64& rng, const Chart& chart, double amp,
                          int terms, int max_wave) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> wave(1, max_wave);
  std::uniform_int_distribution<int> pick(0, chart.dim() - 1);
  std::uniform_int_distribution<int> kind(0, 1);
  double per_term = amp / (terms + 1);
  std::vector<ExprPtr> out{constant(per_term * coeff(rng))};
  for (int t = 0; t < terms; ++t) {
    std::vector<ExprPtr> factors{constant(per_term * coeff(rng))};
    int nfac = 1 + (t % 2);
    for (int f = 0; f < nfac; ++f) {
      ExprPtr arg =
          mul2(constant(double(wave(rng))), coordinate(pick(rng)));
      factors.push_back(kind(rng) ? sin_(arg) : cos_(arg));
    }
    out.push_back(mul(std::move(factors)));
  }
  return add(std::move(out));
}

NConnection random_nconnection(ChartPtr chart, std::mt19937_64& rng,
                               double amp) {
  int n = chart->n(), m = chart->m();
  ExprMatrix N(std::vector<int>{m, n});
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      N(a, i) = random_trig_field(rng, *chart, amp);
  return NConnection{std::move(chart), std::move(N)};
}

Point random_point(const Chart& chart, std::mt19937_64& rng) {
  Point p;
  p.chart = &chart;
  p.u.resize(chart.num_symbols());
  for (int k = 0; k < chart.num_symbols(); ++k) {
    const Interval& iv = chart.domain(k);
    std::uniform_real_distribution<double> dist(iv.lo + 0.05 * (iv.hi - iv.lo),
                                                iv.hi - 0.05 * (iv.hi - iv.lo));
    p.u[k] = dist(rng);
  }
  return p;
}

namespace {

ExprMatrix random_block(std::mt19937_64& rng, const Chart& chart, int size,
                        double offdiag, double wobble) {
  ExprMatrix b(std::vector<int>{size, size});
  for (int i = 0; i < size; ++i)
    b(i, i) = add2(constant(1.5), random_trig_field(rng, chart, wobble));
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j) {
      ExprPtr off = random_trig_field(rng, chart, offdiag);
      b(i, j) = off;
      b(j, i) = off;
    }
  return b;
}

}  // namespace

DMetric random_dmetric(ChartPtr chart, std::mt19937_64& rng, double offdiag,
                       double wobble, int check_samples) {
  int n = chart->n(), m = chart->m();
  ExprMatrix g = random_block(rng, *chart, n, offdiag, wobble);
  ExprMatrix h = random_block(rng, *chart, m, offdiag, wobble);
  NConnection nc = random_nconnection(chart, rng);
  DMetric dm(chart, std::move(g), std::move(h), std::move(nc));

  ExprPtr dg = sym_det(dm.g());
  ExprPtr dh = sym_det(dm.h());
  std::mt19937_64 probe(rng());
  for (int s = 0; s < 10 * check_samples; ++s) {
    Point p = random_point(*chart, probe);
    if (std::fabs(evaluate(dg, p.u)) < 1e-6 ||
        std::fabs(evaluate(dh, p.u)) < 1e-6)
      throw std::runtime_error("random_dmetric: degenerate block sample");
  }
  return dm;
}

}  // namespace nhflow
