#include "nhflow/nconn.hpp"

#include <cmath>

namespace nhflow {

NConnection NConnection::zero(ChartPtr chart) {
  int n = chart->n(), m = chart->m();
  return NConnection{std::move(chart), zero_exprs(m, n)};
}

ExprPtr adapted_deriv(const NConnection& nc, const ExprPtr& f, int alpha) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m();
  if (alpha >= n) return differentiate(f, alpha);
  ExprPtr d = differentiate(f, alpha);
  std::vector<ExprPtr> terms{d};
  for (int a = 0; a < m; ++a) {
    ExprPtr da = differentiate(f, n + a);
    if (is_zero(da)) continue;
    terms.push_back(negate(mul2(nc.coeff(a, alpha), da)));
  }
  return add(std::move(terms));
}

ExprTensor n_curvature_fields(const NConnection& nc) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m();
  ExprTensor omega = zero_exprs({m, n, n});
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::vector<ExprPtr> terms;
        terms.push_back(differentiate(nc.coeff(a, i), j));
        terms.push_back(negate(differentiate(nc.coeff(a, j), i)));
        for (int b = 0; b < m; ++b) {
          terms.push_back(
              mul2(nc.coeff(b, i), differentiate(nc.coeff(a, j), n + b)));
          terms.push_back(negate(
              mul2(nc.coeff(b, j), differentiate(nc.coeff(a, i), n + b))));
        }
        ExprPtr v = add(std::move(terms));
        omega(a, i, j) = v;
        omega(a, j, i) = negate(v);
      }
    }
  }
  return omega;
}

NDArray<double> n_curvature(const NConnection& nc, const Point& p) {
  return eval_tensor(n_curvature_fields(nc), p.u);
}

ExprTensor anholonomy_fields(const NConnection& nc) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  ExprTensor w = zero_exprs({d, d, d});
  ExprTensor omega = n_curvature_fields(nc);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(n + a, i, j) = omega(a, i, j);
  for (int b = 0; b < m; ++b) {
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) {
        ExprPtr dv = differentiate(nc.coeff(b, i), n + a);
        w(n + b, i, n + a) = dv;
        w(n + b, n + a, i) = negate(dv);
      }
    }
  }
  return w;
}

NDArray<double> anholonomy(const NConnection& nc, const Point& p) {
  return eval_tensor(anholonomy_fields(nc), p.u);
}

ExprMatrix frame_fields(const NConnection& nc) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  ExprMatrix e = identity_exprs(d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) e(i, n + a) = negate(nc.coeff(a, i));
  return e;
}

ExprMatrix coframe_fields(const NConnection& nc) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  ExprMatrix th = identity_exprs(d);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) th(n + a, i) = nc.coeff(a, i);
  return th;
}

FrameMatrices adapted_frames(const NConnection& nc, const Point& p) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  FrameMatrices fm;
  fm.point = p;
  fm.e = Matrix(std::vector<int>{d, d});
  fm.e_inv = Matrix(std::vector<int>{d, d});
  Evaluator ev(p.u);
  for (int k = 0; k < d; ++k) {
    fm.e(k, k) = 1.0;
    fm.e_inv(k, k) = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      double v = ev(nc.coeff(a, i));
      fm.e(i, n + a) = -v;
      fm.e_inv(i, n + a) = v;
    }
  }
  return fm;
}

std::vector<double> coframe_row(const NConnection& nc, const Point& p,
                                int alpha) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  std::vector<double> row(d, 0.0);
  row[alpha] = 1.0;
  if (alpha >= n) {
    Evaluator ev(p.u);
    for (int i = 0; i < n; ++i) row[i] = ev(nc.coeff(alpha - n, i));
  }
  return row;
}

DMetric::DMetric(ChartPtr chart, ExprMatrix g, ExprMatrix h, NConnection nc)
    : chart_(std::move(chart)),
      g_(std::move(g)),
      h_(std::move(h)),
      nc_(std::move(nc)) {
  int n = chart_->n(), m = chart_->m();
  if (g_.dims() != std::vector<int>{n, n} ||
      h_.dims() != std::vector<int>{m, m})
    throw std::invalid_argument("DMetric: block shape mismatch");
  g_inv_ = sym_inverse(g_);
  h_inv_ = sym_inverse(h_);
}

ExprMatrix DMetric::full() const {
  int n = chart_->n(), m = chart_->m(), d = n + m;
  ExprMatrix f = zero_exprs(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = g_(i, j);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) f(n + a, n + b) = h_(a, b);
  return f;
}

ExprMatrix DMetric::full_inv() const {
  int n = chart_->n(), m = chart_->m(), d = n + m;
  ExprMatrix f = zero_exprs(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = g_inv_(i, j);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) f(n + a, n + b) = h_inv_(a, b);
  return f;
}

ExprMatrix assemble_offdiag_fields(const DMetric& dm) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m(), d = n + m;
  const ExprMatrix& N = dm.nc().coeff;
  ExprMatrix a = zero_exprs(d, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<ExprPtr> terms{dm.g()(i, j)};
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q)
          terms.push_back(mul({N(p, i), N(q, j), dm.h()(p, q)}));
      a(i, j) = add(std::move(terms));
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < m; ++b) {
      std::vector<ExprPtr> terms;
      for (int p = 0; p < m; ++p)
        terms.push_back(mul2(N(p, i), dm.h()(p, b)));
      ExprPtr v = add(std::move(terms));
      a(i, n + b) = v;
      a(n + b, i) = v;
    }
  }
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) a(n + p, n + q) = dm.h()(p, q);
  return a;
}

Matrix assemble_offdiag_metric(const DMetric& dm, const Point& p) {
  return eval_tensor(assemble_offdiag_fields(dm), p.u);
}

ExprMatrix assembled_inverse_fields(const DMetric& dm) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m(), d = n + m;
  const ExprMatrix& N = dm.nc().coeff;
  const ExprMatrix& gi = dm.g_inv();
  const ExprMatrix& hi = dm.h_inv();
  ExprMatrix r = zero_exprs(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = gi(i, j);
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < m; ++b) {
      std::vector<ExprPtr> terms;
      for (int k = 0; k < n; ++k)
        terms.push_back(negate(mul2(gi(i, k), N(b, k))));
      ExprPtr v = add(std::move(terms));
      r(i, n + b) = v;
      r(n + b, i) = v;
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      std::vector<ExprPtr> terms{hi(a, b)};
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          terms.push_back(mul({N(a, k), gi(k, l), N(b, l)}));
      r(n + a, n + b) = add(std::move(terms));
    }
  }
  return r;
}

NConnection extract_nconnection(const ExprMatrix& gbar, ChartPtr chart) {
  int n = chart->n(), m = chart->m(), d = n + m;
  if (gbar.dims() != std::vector<int>{d, d})
    throw std::invalid_argument("extract_nconnection: shape mismatch");
  ExprMatrix h(std::vector<int>{m, m});
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) h(a, b) = gbar(n + a, n + b);
  ExprMatrix hinv = sym_inverse(h);
  ExprMatrix N(std::vector<int>{m, n});
  for (int b = 0; b < m; ++b) {
    for (int i = 0; i < n; ++i) {
      std::vector<ExprPtr> terms;
      for (int a = 0; a < m; ++a)
        terms.push_back(mul2(hinv(b, a), gbar(i, n + a)));
      N(b, i) = add(std::move(terms));
    }
  }
  return NConnection{std::move(chart), std::move(N)};
}

DMetric dmetric_from_offdiag(const ExprMatrix& gbar, ChartPtr chart) {
  int n = chart->n(), m = chart->m();
  NConnection nc = extract_nconnection(gbar, chart);
  ExprMatrix h(std::vector<int>{m, m});
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) h(a, b) = gbar(n + a, n + b);
  ExprMatrix g(std::vector<int>{n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<ExprPtr> terms{gbar(i, j)};
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          terms.push_back(
              negate(mul({nc.coeff(a, i), nc.coeff(b, j), h(a, b)})));
      g(i, j) = add(std::move(terms));
    }
  }
  return DMetric(chart, std::move(g), std::move(h), std::move(nc));
}

Matrix almost_complex(const NConnection& nc, const Point& p) {
  const Chart& ch = *nc.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  if (n != m)
    throw std::invalid_argument("almost_complex requires n == m");
  FrameMatrices fm = adapted_frames(nc, p);
  // adapted-frame action: F(e_i) = -e_{n+i}, F(e_{n+i}) = e_i
  Matrix fad(std::vector<int>{d, d});
  for (int i = 0; i < n; ++i) {
    fad(n + i, i) = -1.0;
    fad(i, n + i) = 1.0;
  }
  Matrix theta(std::vector<int>{d, d});
  for (int k = 0; k < d; ++k) theta(k, k) = 1.0;
  Evaluator ev(p.u);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) theta(n + a, i) = ev(nc.coeff(a, i));
  // F_coord = E^T * F_adapted * Theta
  Matrix out(std::vector<int>{d, d});
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double s = 0.0;
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be)
          s += fm.e(al, mu) * fad(al, be) * theta(be, nu);
      out(mu, nu) = s;
    }
  return out;
}

}  // namespace nhflow
