#include "nhflow/dconn.hpp"

#include <cmath>

namespace nhflow {

DConnectionCoeffs DConnectionCoeffs::zero(ChartPtr chart, NConnection nc) {
  int n = chart->n(), m = chart->m();
  return DConnectionCoeffs{chart,
                           std::move(nc),
                           zero_exprs({n, n, n}),
                           zero_exprs({m, m, n}),
                           zero_exprs({n, n, m}),
                           zero_exprs({m, m, m})};
}

FullConnectionCoeffs to_full(const DConnectionCoeffs& c) {
  int n = c.chart->n(), m = c.chart->m(), d = n + m;
  ExprTensor g = zero_exprs({d, d, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) g(i, j, k) = c.Lh(i, j, k);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) g(n + a, n + b, k) = c.Lv(a, b, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int cc = 0; cc < m; ++cc) g(i, j, n + cc) = c.Ch(i, j, cc);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc) g(n + a, n + b, n + cc) = c.Cv(a, b, cc);
  return FullConnectionCoeffs{c.chart, c.nc, std::move(g)};
}

DConnectionCoeffs canonical_dconnection(const DMetric& dm) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m();
  const NConnection& nc = dm.nc();
  const ExprMatrix& g = dm.g();
  const ExprMatrix& h = dm.h();
  const ExprMatrix& gi = dm.g_inv();
  const ExprMatrix& hi = dm.h_inv();

  DConnectionCoeffs out = DConnectionCoeffs::zero(dm.chart_ptr(), nc);

  // e_k g_jr cached across the (i,j,k) loops
  NDArray<ExprPtr> eg(std::vector<int>{n, n, n});  // (j,r,k)
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) eg(j, r, k) = adapted_deriv(nc, g(j, r), k);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::vector<ExprPtr> terms;
        for (int r = 0; r < n; ++r) {
          ExprPtr s = add({eg(j, r, k), eg(k, r, j), negate(eg(j, k, r))});
          terms.push_back(mul2(gi(i, r), s));
        }
        out.Lh(i, j, k) = mul2(constant(0.5), add(std::move(terms)));
      }

  NDArray<ExprPtr> dN(std::vector<int>{m, n, m});  // (a,k,b) = d/dy^b N^a_k
  for (int a = 0; a < m; ++a)
    for (int k = 0; k < n; ++k)
      for (int b = 0; b < m; ++b)
        dN(a, k, b) = differentiate(nc.coeff(a, k), n + b);

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        std::vector<ExprPtr> terms{dN(a, k, b)};
        for (int c = 0; c < m; ++c) {
          std::vector<ExprPtr> inner{adapted_deriv(nc, h(b, c), k)};
          for (int dd = 0; dd < m; ++dd) {
            inner.push_back(negate(mul2(h(dd, c), dN(dd, k, b))));
            inner.push_back(negate(mul2(h(dd, b), dN(dd, k, c))));
          }
          terms.push_back(
              mul({constant(0.5), hi(a, c), add(std::move(inner))}));
        }
        out.Lv(a, b, k) = add(std::move(terms));
      }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < m; ++c) {
        std::vector<ExprPtr> terms;
        for (int k = 0; k < n; ++k)
          terms.push_back(mul2(gi(i, k), differentiate(g(j, k), n + c)));
        out.Ch(i, j, c) = mul2(constant(0.5), add(std::move(terms)));
      }

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c) {
        std::vector<ExprPtr> terms;
        for (int dd = 0; dd < m; ++dd) {
          ExprPtr s = add({differentiate(h(b, dd), n + c),
                           differentiate(h(c, dd), n + b),
                           negate(differentiate(h(b, c), n + dd))});
          terms.push_back(mul2(hi(a, dd), s));
        }
        out.Cv(a, b, c) = mul2(constant(0.5), add(std::move(terms)));
      }
  return out;
}

ExprTensor covariant_derivative(const ExprTensor& t,
                                const std::vector<Variance>& variance,
                                const FullConnectionCoeffs& conn) {
  const Chart& ch = *conn.chart;
  int d = ch.dim();
  if (static_cast<int>(variance.size()) != t.rank())
    throw std::invalid_argument("covariant_derivative: variance rank");
  std::vector<int> odims = t.dims();
  odims.push_back(d);
  ExprTensor out = zero_exprs(odims);
  for_each_index(t.dims(), [&](const std::vector<int>& idx) {
    for (int dir = 0; dir < d; ++dir) {
      std::vector<ExprPtr> terms{adapted_deriv(conn.nc, t.at(idx), dir)};
      for (std::size_t s = 0; s < variance.size(); ++s) {
        for (int mu = 0; mu < d; ++mu) {
          std::vector<int> jdx = idx;
          jdx[s] = mu;
          const ExprPtr& tv = t.at(jdx);
          if (is_zero(tv)) continue;
          if (variance[s] == Variance::Up)
            terms.push_back(mul2(conn.gamma(idx[s], mu, dir), tv));
          else
            terms.push_back(negate(mul2(conn.gamma(mu, idx[s], dir), tv)));
        }
      }
      std::vector<int> odx = idx;
      odx.push_back(dir);
      out.at(odx) = add(std::move(terms));
    }
  });
  return out;
}

ExprTensor metric_compatibility(const DMetric& dm,
                                const FullConnectionCoeffs& conn) {
  return covariant_derivative(dm.full(), {Variance::Down, Variance::Down},
                              conn);
}

TorsionBlocks dtorsion(const DConnectionCoeffs& c, const Point& p) {
  const Chart& ch = *c.chart;
  int n = ch.n(), m = ch.m();
  Evaluator ev(p.u);
  TorsionBlocks tb{NDArray<double>({n, n, n}), NDArray<double>({n, n, m}),
                   NDArray<double>({m, n, n}), NDArray<double>({m, m, n}),
                   NDArray<double>({m, m, m})};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        tb.hhh(i, j, k) = ev(c.Lh(i, j, k)) - ev(c.Lh(i, k, j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < m; ++a) tb.hhv(i, j, a) = ev(c.Ch(i, j, a));
  auto om = n_curvature(c.nc, p);
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) tb.vhh(a, j, i) = om(a, j, i);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < n; ++i)
        tb.vvh(a, b, i) =
            ev(differentiate(c.nc.coeff(a, i), n + b)) - ev(c.Lv(a, b, i));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        tb.vvv(a, b, cc) = ev(c.Cv(a, b, cc)) - ev(c.Cv(a, cc, b));
  return tb;
}

NDArray<double> full_torsion(const FullConnectionCoeffs& conn,
                             const Point& p) {
  const Chart& ch = *conn.chart;
  int d = ch.dim();
  auto g = eval_tensor(conn.gamma, p.u);
  auto w = anholonomy(conn.nc, p);
  NDArray<double> t(std::vector<int>{d, d, d});
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be)
      for (int ga = 0; ga < d; ++ga)
        t(al, be, ga) = g(al, ga, be) - g(al, be, ga) - w(al, be, ga);
  return t;
}

CurvatureFields dcurvature_fields(const DConnectionCoeffs& c) {
  const Chart& ch = *c.chart;
  int n = ch.n(), m = ch.m();
  const NConnection& nc = c.nc;
  ExprTensor om = n_curvature_fields(nc);

  CurvatureFields f{zero_exprs({n, n, n, n}), zero_exprs({m, m, n, n}),
                    zero_exprs({n, n, n, m}), zero_exprs({m, m, n, m}),
                    zero_exprs({n, n, m, m}), zero_exprs({m, m, m, m})};

  for (int i = 0; i < n; ++i)
    for (int hh = 0; hh < n; ++hh)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::vector<ExprPtr> terms{
              adapted_deriv(nc, c.Lh(i, hh, j), k),
              negate(adapted_deriv(nc, c.Lh(i, hh, k), j))};
          for (int q = 0; q < n; ++q) {
            terms.push_back(mul2(c.Lh(q, hh, j), c.Lh(i, q, k)));
            terms.push_back(negate(mul2(c.Lh(q, hh, k), c.Lh(i, q, j))));
          }
          for (int a = 0; a < m; ++a)
            terms.push_back(negate(mul2(c.Ch(i, hh, a), om(a, k, j))));
          f.hh_h(i, hh, j, k) = add(std::move(terms));
        }

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::vector<ExprPtr> terms{
              adapted_deriv(nc, c.Lv(a, b, j), k),
              negate(adapted_deriv(nc, c.Lv(a, b, k), j))};
          for (int cc = 0; cc < m; ++cc) {
            terms.push_back(mul2(c.Lv(cc, b, j), c.Lv(a, cc, k)));
            terms.push_back(negate(mul2(c.Lv(cc, b, k), c.Lv(a, cc, j))));
            terms.push_back(negate(mul2(c.Cv(a, b, cc), om(cc, k, j))));
          }
          f.vv_h(a, b, j, k) = add(std::move(terms));
        }

  // torsion factor T^b_{ka} = e_a(N^b_k) - L^b_{ak}
  NDArray<ExprPtr> tt(std::vector<int>{m, n, m});
  for (int b = 0; b < m; ++b)
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < m; ++a)
        tt(b, k, a) =
            sub(differentiate(nc.coeff(b, k), n + a), c.Lv(b, a, k));

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          std::vector<ExprPtr> terms{differentiate(c.Lh(i, j, k), n + a)};
          // h-covariant derivative D_k C^i_{ja}
          std::vector<ExprPtr> dk{adapted_deriv(nc, c.Ch(i, j, a), k)};
          for (int q = 0; q < n; ++q) {
            dk.push_back(mul2(c.Lh(i, q, k), c.Ch(q, j, a)));
            dk.push_back(negate(mul2(c.Lh(q, j, k), c.Ch(i, q, a))));
          }
          for (int b = 0; b < m; ++b)
            dk.push_back(negate(mul2(c.Lv(b, a, k), c.Ch(i, j, b))));
          terms.push_back(negate(add(std::move(dk))));
          for (int b = 0; b < m; ++b)
            terms.push_back(mul2(c.Ch(i, j, b), tt(b, k, a)));
          f.h_mx(i, j, k, a) = add(std::move(terms));
        }

  for (int cc = 0; cc < m; ++cc)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          std::vector<ExprPtr> terms{differentiate(c.Lv(cc, b, k), n + a)};
          std::vector<ExprPtr> dk{adapted_deriv(nc, c.Cv(cc, b, a), k)};
          for (int dd = 0; dd < m; ++dd) {
            dk.push_back(mul2(c.Lv(cc, dd, k), c.Cv(dd, b, a)));
            dk.push_back(negate(mul2(c.Lv(dd, b, k), c.Cv(cc, dd, a))));
            dk.push_back(negate(mul2(c.Lv(dd, a, k), c.Cv(cc, b, dd))));
          }
          terms.push_back(negate(add(std::move(dk))));
          for (int dd = 0; dd < m; ++dd)
            terms.push_back(mul2(c.Cv(cc, b, dd), tt(dd, k, a)));
          f.v_mx(cc, b, k, a) = add(std::move(terms));
        }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < m; ++b)
        for (int cc = 0; cc < m; ++cc) {
          std::vector<ExprPtr> terms{
              differentiate(c.Ch(i, j, b), n + cc),
              negate(differentiate(c.Ch(i, j, cc), n + b))};
          for (int q = 0; q < n; ++q) {
            terms.push_back(mul2(c.Ch(q, j, b), c.Ch(i, q, cc)));
            terms.push_back(negate(mul2(c.Ch(q, j, cc), c.Ch(i, q, b))));
          }
          f.h_vv(i, j, b, cc) = add(std::move(terms));
        }

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        for (int dd = 0; dd < m; ++dd) {
          std::vector<ExprPtr> terms{
              differentiate(c.Cv(a, b, cc), n + dd),
              negate(differentiate(c.Cv(a, b, dd), n + cc))};
          for (int ee = 0; ee < m; ++ee) {
            terms.push_back(mul2(c.Cv(ee, b, cc), c.Cv(a, ee, dd)));
            terms.push_back(negate(mul2(c.Cv(ee, b, dd), c.Cv(a, ee, cc))));
          }
          f.v_vv(a, b, cc, dd) = add(std::move(terms));
        }
  return f;
}

NDArray<double> dcurvature(const DConnectionCoeffs& c, const Point& p) {
  const Chart& ch = *c.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  CurvatureFields f = dcurvature_fields(c);
  Evaluator ev(p.u);
  NDArray<double> r(std::vector<int>{d, d, d, d});
  for (int i = 0; i < n; ++i)
    for (int hh = 0; hh < n; ++hh)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r(i, hh, j, k) = ev(f.hh_h(i, hh, j, k));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r(n + a, n + b, j, k) = ev(f.vv_h(a, b, j, k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          double v = ev(f.h_mx(i, j, k, a));
          r(i, j, k, n + a) = v;
          r(i, j, n + a, k) = -v;
        }
  for (int cc = 0; cc < m; ++cc)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k)
        for (int a = 0; a < m; ++a) {
          double v = ev(f.v_mx(cc, b, k, a));
          r(n + cc, n + b, k, n + a) = v;
          r(n + cc, n + b, n + a, k) = -v;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < m; ++b)
        for (int cc = 0; cc < m; ++cc)
          r(i, j, n + b, n + cc) = ev(f.h_vv(i, j, b, cc));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        for (int dd = 0; dd < m; ++dd)
          r(n + a, n + b, n + cc, n + dd) = ev(f.v_vv(a, b, cc, dd));
  return r;
}

CommutatorCurvature::CommutatorCurvature(FullConnectionCoeffs conn)
    : conn_(std::move(conn)) {
  const Chart& ch = *conn_.chart;
  int d = ch.dim();
  dgamma_ = zero_exprs({d, d, d, d});
  for (int de = 0; de < d; ++de)
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int ga = 0; ga < d; ++ga)
          dgamma_(de, al, be, ga) =
              adapted_deriv(conn_.nc, conn_.gamma(al, be, ga), de);
  w_ = anholonomy_fields(conn_.nc);
}

NDArray<double> CommutatorCurvature::at(const Point& p) const {
  const Chart& ch = *conn_.chart;
  int d = ch.dim();
  auto g = eval_tensor(conn_.gamma, p.u);
  auto dg = eval_tensor(dgamma_, p.u);
  auto w = eval_tensor(w_, p.u);
  NDArray<double> r(std::vector<int>{d, d, d, d});
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be)
      for (int ga = 0; ga < d; ++ga)
        for (int de = 0; de < d; ++de) {
          double s = dg(de, al, be, ga) - dg(ga, al, be, de);
          for (int mu = 0; mu < d; ++mu) {
            s += g(mu, be, ga) * g(al, mu, de) - g(mu, be, de) * g(al, mu, ga);
            s -= w(mu, de, ga) * g(al, be, mu);
          }
          r(al, be, ga, de) = s;
        }
  return r;
}

ExprMatrix ricci_fields(const DConnectionCoeffs& c) {
  const Chart& ch = *c.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  CurvatureFields f = dcurvature_fields(c);
  ExprMatrix ric = zero_exprs(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<ExprPtr> terms;
      for (int k = 0; k < n; ++k) terms.push_back(f.hh_h(k, i, j, k));
      ric(i, j) = add(std::move(terms));
    }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) {
      std::vector<ExprPtr> terms;
      for (int k = 0; k < n; ++k)
        terms.push_back(negate(f.h_mx(k, i, k, a)));
      ric(i, n + a) = add(std::move(terms));
    }
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) {
      std::vector<ExprPtr> terms;
      for (int b = 0; b < m; ++b) terms.push_back(f.v_mx(b, a, i, b));
      ric(n + a, i) = add(std::move(terms));
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      std::vector<ExprPtr> terms;
      for (int cc = 0; cc < m; ++cc) terms.push_back(f.v_vv(cc, a, b, cc));
      ric(n + a, n + b) = add(std::move(terms));
    }
  return ric;
}

RicciBlocks ricci_dtensor(const DConnectionCoeffs& c, const Point& p) {
  const Chart& ch = *c.chart;
  int n = ch.n(), m = ch.m(), d = n + m;
  auto ricf = ricci_fields(c);
  auto full = eval_tensor(ricf, p.u);
  RicciBlocks rb{full, NDArray<double>({n, n}), NDArray<double>({n, m}),
                 NDArray<double>({m, n}), NDArray<double>({m, m})};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rb.hh(i, j) = full(i, j);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a) rb.hv(i, a) = full(i, n + a);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) rb.vh(a, i) = full(n + a, i);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) rb.vv(a, b) = full(n + a, n + b);
  return rb;
}

Matrix ricci_full(const CommutatorCurvature& cc, const Point& p) {
  const Chart& ch = *cc.conn().chart;
  int d = ch.dim();
  auto r = cc.at(p);
  Matrix ric(std::vector<int>{d, d});
  for (int be = 0; be < d; ++be)
    for (int ga = 0; ga < d; ++ga) {
      double s = 0.0;
      for (int al = 0; al < d; ++al) s += r(al, be, ga, al);
      ric(be, ga) = s;
    }
  return ric;
}

ScalarEinstein scalar_einstein(const DMetric& dm, const DConnectionCoeffs& c,
                               const Point& p, const ExprMatrix* source) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m(), d = n + m;
  RicciBlocks ric = ricci_dtensor(c, p);
  auto gv = eval_tensor(dm.g(), p.u);
  auto hv = eval_tensor(dm.h(), p.u);
  auto giv = eval_tensor(dm.g_inv(), p.u);
  auto hiv = eval_tensor(dm.h_inv(), p.u);
  double sR = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sR += giv(i, j) * ric.hh(i, j);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) sR += hiv(a, b) * ric.vv(a, b);
  Matrix G(std::vector<int>{d, d});
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be) {
      double met = 0.0;
      if (al < n && be < n) met = gv(al, be);
      if (al >= n && be >= n) met = hv(al - n, be - n);
      G(al, be) = ric.full(al, be) - 0.5 * met * sR;
    }
  ScalarEinstein se{sR, G, std::nullopt};
  if (source) {
    auto sv = eval_tensor(*source, p.u);
    Matrix res(std::vector<int>{d, d});
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be) res(al, be) = G(al, be) - sv(al, be);
    se.residual = res;
  }
  return se;
}

ExprTensor coordinate_christoffels(const ExprMatrix& metric,
                                   const ExprMatrix& metric_inv,
                                   const Chart& chart) {
  int d = chart.dim();
  NDArray<ExprPtr> dmet(std::vector<int>{d, d, d});  // (mu,nu,k) = d_k g_{mu nu}
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      for (int k = 0; k < d; ++k)
        dmet(mu, nu, k) = differentiate(metric(mu, nu), k);
  ExprTensor gc = zero_exprs({d, d, d});
  for (int ga = 0; ga < d; ++ga)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = mu; nu < d; ++nu) {
        std::vector<ExprPtr> terms;
        for (int si = 0; si < d; ++si) {
          ExprPtr s = add({dmet(si, nu, mu), dmet(si, mu, nu),
                           negate(dmet(mu, nu, si))});
          if (is_zero(s)) continue;
          terms.push_back(mul2(metric_inv(ga, si), s));
        }
        ExprPtr v = mul2(constant(0.5), add(std::move(terms)));
        gc(ga, mu, nu) = v;
        gc(ga, nu, mu) = v;
      }
  return gc;
}

ExprMatrix coordinate_ricci_fields(const ExprMatrix& metric,
                                   const ExprMatrix& metric_inv,
                                   const Chart& chart) {
  int d = chart.dim();
  ExprTensor gc = coordinate_christoffels(metric, metric_inv, chart);
  ExprMatrix ric = zero_exprs(d, d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu; nu < d; ++nu) {
      std::vector<ExprPtr> terms;
      for (int la = 0; la < d; ++la) {
        terms.push_back(differentiate(gc(la, mu, nu), la));
        terms.push_back(negate(differentiate(gc(la, mu, la), nu)));
        for (int si = 0; si < d; ++si) {
          terms.push_back(mul2(gc(la, la, si), gc(si, mu, nu)));
          terms.push_back(negate(mul2(gc(la, nu, si), gc(si, mu, la))));
        }
      }
      ExprPtr v = add(std::move(terms));
      ric(mu, nu) = v;
      ric(nu, mu) = v;
    }
  return ric;
}

ExprPtr coordinate_scalar_curvature(const ExprMatrix& metric,
                                    const ExprMatrix& metric_inv,
                                    const Chart& chart) {
  int d = chart.dim();
  ExprMatrix ric = coordinate_ricci_fields(metric, metric_inv, chart);
  std::vector<ExprPtr> terms;
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      terms.push_back(mul2(metric_inv(mu, nu), ric(mu, nu)));
  return add(std::move(terms));
}

FullConnectionCoeffs levi_civita_adapted(const DMetric& dm) {
  const Chart& ch = dm.chart();
  int d = ch.dim();
  ExprMatrix A = assemble_offdiag_fields(dm);
  ExprMatrix Ai = assembled_inverse_fields(dm);
  ExprTensor gc = coordinate_christoffels(A, Ai, ch);
  ExprMatrix E = frame_fields(dm.nc());
  ExprMatrix Th = coframe_fields(dm.nc());

  ExprTensor rho = zero_exprs({d, d, d});
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be)
      for (int de = 0; de < d; ++de) {
        std::vector<ExprPtr> terms;
        for (int ug = 0; ug < d; ++ug) {
          if (is_zero(Th(al, ug))) continue;
          std::vector<ExprPtr> inner;
          ExprPtr dE = adapted_deriv(dm.nc(), E(be, ug), de);
          if (!is_zero(dE)) inner.push_back(dE);
          for (int ud = 0; ud < d; ++ud) {
            if (is_zero(E(de, ud))) continue;
            for (int um = 0; um < d; ++um) {
              if (is_zero(E(be, um))) continue;
              inner.push_back(mul({E(de, ud), E(be, um), gc(ug, um, ud)}));
            }
          }
          if (inner.empty()) continue;
          terms.push_back(mul2(Th(al, ug), add(std::move(inner))));
        }
        rho(al, be, de) = add(std::move(terms));
      }
  return FullConnectionCoeffs{dm.chart_ptr(), dm.nc(), std::move(rho)};
}

TensorValue distortion(const DMetric& dm, const Point& p) {
  const Chart& ch = dm.chart();
  int d = ch.dim();
  auto lc = levi_civita_adapted(dm);
  auto can = to_full(canonical_dconnection(dm));
  auto lcv = eval_tensor(lc.gamma, p.u);
  auto cav = eval_tensor(can.gamma, p.u);
  TensorValue tv;
  tv.point = p;
  tv.data = NDArray<double>(std::vector<int>{d, d, d});
  tv.variance = {Variance::Up, Variance::Down, Variance::Down};
  tv.frame = FrameTag::Adapted;
  for (std::size_t k = 0; k < lcv.size(); ++k) tv.data[k] = lcv[k] - cav[k];
  return tv;
}

const std::array<const char*, 8>& DistortionReport::block_names() {
  static const std::array<const char*, 8> names = {
      "Z^i_jk", "Z^a_jk", "Z^i_bk", "Z^a_bk",
      "Z^i_kb", "Z^a_jb", "Z^a_bc", "Z^i_ab"};
  return names;
}

DistortionReport distortion_report(const DMetric& dm, const Point& p) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m();
  DistortionReport rep;
  rep.z = distortion(dm, p);
  const auto& z = rep.z.data;

  DConnectionCoeffs can = canonical_dconnection(dm);
  Evaluator ev(p.u);
  auto gv = eval_tensor(dm.g(), p.u);
  auto hv = eval_tensor(dm.h(), p.u);
  auto giv = eval_tensor(dm.g_inv(), p.u);
  auto hiv = eval_tensor(dm.h_inv(), p.u);
  auto om = n_curvature(dm.nc(), p);
  auto Lh = eval_tensor(can.Lh, p.u);
  auto Lv = eval_tensor(can.Lv, p.u);
  auto Ch = eval_tensor(can.Ch, p.u);

  // S(c,d,k) = L^c_{dk} - d/dy^d N^c_k
  NDArray<double> S(std::vector<int>{m, m, n});
  for (int c = 0; c < m; ++c)
    for (int dd = 0; dd < m; ++dd)
      for (int k = 0; k < n; ++k)
        S(c, dd, k) =
            Lv(c, dd, k) - ev(differentiate(dm.nc().coeff(c, k), n + dd));

  auto maxd = [](double a, double b) { return std::max(a, std::fabs(b)); };
  std::array<double, 8> diff{};

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        diff[0] = maxd(diff[0], 0.0 - z(i, j, k));

  for (int a = 0; a < m; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = -0.5 * om(a, j, k);
        for (int i = 0; i < n; ++i)
          for (int b = 0; b < m; ++b)
            s -= Ch(i, j, b) * gv(i, k) * hiv(a, b);
        diff[1] = maxd(diff[1], s - z(n + a, j, k));
      }

  for (int i = 0; i < n; ++i)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < m; ++c)
            s += 0.5 * om(c, j, k) * hv(c, b) * giv(j, i);
        double obata = Ch(i, k, b);
        for (int j = 0; j < n; ++j)
          for (int hh = 0; hh < n; ++hh)
            obata -= gv(j, k) * giv(i, hh) * Ch(j, hh, b);
        s -= 0.5 * obata;
        diff[2] = maxd(diff[2], s - z(i, n + b, k));
      }

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int c = 0; c < m; ++c)
          for (int dd = 0; dd < m; ++dd) {
            double op = (a == c && dd == b ? 1.0 : 0.0) + hv(c, dd) * hiv(a, b);
            s += 0.5 * op * S(c, dd, k);
          }
        diff[3] = maxd(diff[3], s - z(n + a, n + b, k));
      }

  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < m; ++c)
            s += 0.5 * om(c, j, k) * hv(c, b) * giv(j, i);
        double obata = Ch(i, k, b);
        for (int j = 0; j < n; ++j)
          for (int hh = 0; hh < n; ++hh)
            obata -= gv(j, k) * giv(i, hh) * Ch(j, hh, b);
        s += 0.5 * obata;
        diff[4] = maxd(diff[4], s - z(i, k, n + b));
      }

  for (int a = 0; a < m; ++a)
    for (int j = 0; j < n; ++j)
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int c = 0; c < m; ++c)
          for (int dd = 0; dd < m; ++dd) {
            double op = (a == c && dd == b ? 1.0 : 0.0) - hv(c, b) * hiv(a, dd);
            s -= 0.5 * op * S(c, dd, j);
          }
        diff[5] = maxd(diff[5], s - z(n + a, j, n + b));
      }

  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        diff[6] = maxd(diff[6], 0.0 - z(n + a, n + b, n + c));

  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
          double inner = 0.0;
          for (int c = 0; c < m; ++c)
            inner += S(c, a, j) * hv(c, b) + S(c, b, j) * hv(c, a);
          s -= 0.5 * giv(i, j) * inner;
        }
        diff[7] = maxd(diff[7], s - z(i, n + a, n + b));
      }

  rep.printed_block_diff = diff;
  return rep;
}

DConnectionCoeffs kawaguchi_metrize(const DConnectionCoeffs& c,
                                    const DMetric& dm) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m();
  auto full = to_full(c);
  ExprTensor dg = metric_compatibility(dm, full);  // (d,d,direction)
  const ExprMatrix& gi = dm.g_inv();
  const ExprMatrix& hi = dm.h_inv();

  DConnectionCoeffs out = c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::vector<ExprPtr> terms{c.Lh(i, j, k)};
        for (int p = 0; p < n; ++p)
          terms.push_back(mul({constant(0.5), gi(i, p), dg(p, j, k)}));
        out.Lh(i, j, k) = add(std::move(terms));
      }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        std::vector<ExprPtr> terms{c.Lv(a, b, k)};
        for (int cc = 0; cc < m; ++cc)
          terms.push_back(
              mul({constant(0.5), hi(a, cc), dg(n + cc, n + b, k)}));
        out.Lv(a, b, k) = add(std::move(terms));
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int cc = 0; cc < m; ++cc) {
        std::vector<ExprPtr> terms{c.Ch(i, j, cc)};
        for (int p = 0; p < n; ++p)
          terms.push_back(mul({constant(0.5), gi(i, p), dg(p, j, n + cc)}));
        out.Ch(i, j, cc) = add(std::move(terms));
      }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc) {
        std::vector<ExprPtr> terms{c.Cv(a, b, cc)};
        for (int dd = 0; dd < m; ++dd)
          terms.push_back(
              mul({constant(0.5), hi(a, dd), dg(n + dd, n + b, n + cc)}));
        out.Cv(a, b, cc) = add(std::move(terms));
      }
  return out;
}

ObataOperators obata_operators(const DMetric& dm, const Point& p) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m();
  auto gv = eval_tensor(dm.g(), p.u);
  auto giv = eval_tensor(dm.g_inv(), p.u);
  auto hv = eval_tensor(dm.h(), p.u);
  auto hiv = eval_tensor(dm.h_inv(), p.u);
  ObataOperators ob{
      NDArray<double>({n, n, n, n}), NDArray<double>({n, n, n, n}),
      NDArray<double>({m, m, m, m}), NDArray<double>({m, m, m, m})};
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int mm = 0; mm < n; ++mm) {
          double del = (l == k && i == mm) ? 1.0 : 0.0;
          double gg = gv(k, mm) * giv(l, i);
          ob.h_plus(l, i, k, mm) = 0.5 * (del + gg);
          ob.h_minus(l, i, k, mm) = 0.5 * (del - gg);
        }
  for (int e = 0; e < m; ++e)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int dd = 0; dd < m; ++dd) {
          double del = (e == b && a == dd) ? 1.0 : 0.0;
          double hh = hv(b, dd) * hiv(e, a);
          ob.v_plus(e, a, b, dd) = 0.5 * (del + hh);
          ob.v_minus(e, a, b, dd) = 0.5 * (del - hh);
        }
  return ob;
}

DConnectionCoeffs miron_connection(const DMetric& dm, const ExprTensor& y1,
                                   const ExprTensor& y2, const ExprTensor& y3,
                                   const ExprTensor& y4) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m();
  DConnectionCoeffs out = canonical_dconnection(dm);
  const ExprMatrix& g = dm.g();
  const ExprMatrix& gi = dm.g_inv();
  const ExprMatrix& h = dm.h();
  const ExprMatrix& hi = dm.h_inv();

  auto minus_g = [&](const ExprTensor& y, int i, int j, int k) {
    // (O-)^{li}_{jm} Y^m_{lk} = 1/2 (Y^i_{jk} - g_{jm} g^{li} Y^m_{lk})
    std::vector<ExprPtr> terms{y(i, j, k)};
    for (int l = 0; l < n; ++l)
      for (int mm = 0; mm < n; ++mm)
        terms.push_back(negate(mul({g(j, mm), gi(l, i), y(mm, l, k)})));
    return mul2(constant(0.5), add(std::move(terms)));
  };
  auto minus_h = [&](const ExprTensor& y, int a, int b, int k) {
    std::vector<ExprPtr> terms{y(a, b, k)};
    for (int e = 0; e < m; ++e)
      for (int dd = 0; dd < m; ++dd)
        terms.push_back(negate(mul({h(b, dd), hi(e, a), y(dd, e, k)})));
    return mul2(constant(0.5), add(std::move(terms)));
  };

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out.Lh(i, j, k) = add2(out.Lh(i, j, k), minus_g(y1, i, j, k));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k)
        out.Lv(a, b, k) = add2(out.Lv(a, b, k), minus_h(y2, a, b, k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int cc = 0; cc < m; ++cc)
        out.Ch(i, j, cc) = add2(out.Ch(i, j, cc), minus_g(y3, i, j, cc));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        out.Cv(a, b, cc) = add2(out.Cv(a, b, cc), minus_h(y4, a, b, cc));
  return out;
}

TensorValue connection_laplacian(const FullConnectionCoeffs& conn,
                                 const ExprTensor& field,
                                 const std::vector<Variance>& variance,
                                 const DMetric& dm, const Point& p) {
  const Chart& ch = dm.chart();
  int d = ch.dim();
  ExprTensor d1 = covariant_derivative(field, variance, conn);
  auto var2 = variance;
  var2.push_back(Variance::Down);
  ExprTensor d2 = covariant_derivative(d1, var2, conn);
  auto d2v = eval_tensor(d2, p.u);
  auto ginv = eval_tensor(dm.full_inv(), p.u);

  TensorValue tv;
  tv.point = p;
  tv.variance = variance;
  tv.frame = FrameTag::Adapted;
  tv.data = NDArray<double>(field.dims().empty() ? std::vector<int>{}
                                                 : field.dims());
  for_each_index(field.dims(), [&](const std::vector<int>& idx) {
    double s = 0.0;
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be) {
        std::vector<int> jdx = idx;
        jdx.push_back(be);
        jdx.push_back(al);
        s += ginv(al, be) * d2v.at(jdx);
      }
    tv.data.at(idx) = s;
  });
  return tv;
}

CurvatureDistortionReport curvature_distortion(const DMetric& dm,
                                               const Point& p) {
  const Chart& ch = dm.chart();
  int n = ch.n(), m = ch.m(), d = n + m;
  CommutatorCurvature lc_curv(levi_civita_adapted(dm));
  Matrix ric_lc = ricci_full(lc_curv, p);
  DConnectionCoeffs can = canonical_dconnection(dm);
  RicciBlocks hat = ricci_dtensor(can, p);

  CurvatureDistortionReport rep;
  rep.ric_lc = ric_lc;
  rep.ric_hat = hat.full;
  rep.ric_dist = Matrix(std::vector<int>{d, d});
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      rep.ric_dist(a, b) = ric_lc(a, b) - hat.full(a, b);

  auto ginv = eval_tensor(dm.full_inv(), p.u);
  auto scal = [&](const Matrix& r) {
    double s = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) s += ginv(a, b) * r(a, b);
    return s;
  };
  rep.sc_lc = scal(ric_lc);
  rep.sc_hat = scal(hat.full);
  rep.sc_dist = scal(rep.ric_dist);

  ExprMatrix A = assemble_offdiag_fields(dm);
  ExprMatrix Ai = assembled_inverse_fields(dm);
  rep.sc_coordinate =
      evaluate(coordinate_scalar_curvature(A, Ai, ch), p.u);
  return rep;
}

BTensors quadratic_b_tensors(const DMetric& dm, ConnChoice which,
                             const Point& p) {
  const Chart& ch = dm.chart();
  int d = ch.dim();

  FullConnectionCoeffs conn = (which == ConnChoice::LeviCivita)
                                  ? levi_civita_adapted(dm)
                                  : to_full(canonical_dconnection(dm));
  NDArray<double> r = (which == ConnChoice::LeviCivita)
                          ? CommutatorCurvature(conn).at(p)
                          : dcurvature(canonical_dconnection(dm), p);
  auto met = eval_tensor(dm.full(), p.u);
  auto ginv = eval_tensor(dm.full_inv(), p.u);

  NDArray<double> rlow(std::vector<int>{d, d, d, d});
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be)
      for (int ga = 0; ga < d; ++ga)
        for (int de = 0; de < d; ++de) {
          double s = 0.0;
          for (int mu = 0; mu < d; ++mu)
            s += met(al, mu) * r(mu, be, ga, de);
          rlow(al, be, ga, de) = s;
        }

  BTensors bt{NDArray<double>({d, d, d, d}), NDArray<double>({d, d, d, d}),
              Matrix(std::vector<int>{d, d})};
  for (int al = 0; al < d; ++al)
    for (int ga = 0; ga < d; ++ga)
      for (int ap = 0; ap < d; ++ap)
        for (int gp = 0; gp < d; ++gp) {
          double s = 0.0;
          for (int be = 0; be < d; ++be)
            for (int bp = 0; bp < d; ++bp)
              for (int de = 0; de < d; ++de)
                for (int dp = 0; dp < d; ++dp)
                  s += ginv(be, bp) * ginv(de, dp) * rlow(al, be, ga, de) *
                       rlow(ap, bp, gp, dp);
          bt.b4(al, ga, ap, gp) = s;
        }

  // literal second display: two of the four terms cancel pairwise
  for (int al = 0; al < d; ++al)
    for (int ga = 0; ga < d; ++ga)
      for (int ap = 0; ap < d; ++ap)
        for (int gp = 0; gp < d; ++gp)
          bt.bbar4(al, ga, ap, gp) = bt.b4(al, ga, ap, gp) -
                                     bt.b4(al, ga, ap, gp) -
                                     bt.b4(al, gp, ga, ap) +
                                     bt.b4(al, ga, ap, gp);

  // second covariant derivatives of the Ricci tensor and curvature scalar
  ExprMatrix ricf = (which == ConnChoice::LeviCivita)
                        ? ExprMatrix()
                        : ricci_fields(canonical_dconnection(dm));
  if (which == ConnChoice::LeviCivita) {
    // symbolic Ricci of the Levi-Civita connection in the adapted frame
    ExprMatrix out = zero_exprs(d, d);
    // contract the symbolic curvature coefficient formula directly
    ExprTensor w = anholonomy_fields(conn.nc);
    for (int be = 0; be < d; ++be)
      for (int ga = 0; ga < d; ++ga) {
        std::vector<ExprPtr> terms;
        for (int al = 0; al < d; ++al) {
          terms.push_back(adapted_deriv(conn.nc, conn.gamma(al, be, ga), al));
          terms.push_back(
              negate(adapted_deriv(conn.nc, conn.gamma(al, be, al), ga)));
          for (int mu = 0; mu < d; ++mu) {
            terms.push_back(
                mul2(conn.gamma(mu, be, ga), conn.gamma(al, mu, al)));
            terms.push_back(negate(
                mul2(conn.gamma(mu, be, al), conn.gamma(al, mu, ga))));
            terms.push_back(
                negate(mul2(w(mu, al, ga), conn.gamma(al, be, mu))));
          }
        }
        out(be, ga) = add(std::move(terms));
      }
    ricf = out;
  }

  ExprTensor ric_t(std::vector<int>{d, d});
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) ric_t(a, b) = ricf(a, b);
  ExprMatrix ginv_f = dm.full_inv();
  std::vector<ExprPtr> sterms;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      sterms.push_back(mul2(ginv_f(a, b), ricf(a, b)));
  ExprPtr srf = add(std::move(sterms));

  ExprTensor scal0(std::vector<int>{});
  scal0[0] = srf;
  ExprTensor ds = covariant_derivative(scal0, {}, conn);
  ExprTensor dds = covariant_derivative(ds, {Variance::Down}, conn);
  ExprTensor dric =
      covariant_derivative(ric_t, {Variance::Down, Variance::Down}, conn);
  ExprTensor ddric = covariant_derivative(
      dric, {Variance::Down, Variance::Down, Variance::Down}, conn);
  auto ddsv = eval_tensor(dds, p.u);
  auto ddricv = eval_tensor(ddric, p.u);

  for (int al = 0; al < d; ++al)
    for (int gp = 0; gp < d; ++gp) {
      double s = ddsv(gp, al);
      for (int be = 0; be < d; ++be)
        for (int bp = 0; bp < d; ++bp)
          s -= ginv(be, bp) *
               (ddricv(gp, be, al, bp) + ddricv(al, be, gp, bp));
      bt.bbar2(al, gp) = s;
    }
  return bt;
}

}  // namespace nhflow
