#include "nhflow/tensor.hpp"

#include <cmath>

namespace nhflow {

namespace {

ExprMatrix minor_of(const ExprMatrix& a, int row, int col) {
  int d = a.dims()[0];
  ExprMatrix m(std::vector<int>{d - 1, d - 1});
  for (int i = 0, mi = 0; i < d; ++i) {
    if (i == row) continue;
    for (int j = 0, mj = 0; j < d; ++j) {
      if (j == col) continue;
      m(mi, mj) = a(i, j);
      ++mj;
    }
    ++mi;
  }
  return m;
}

}  // namespace

ExprPtr sym_det(const ExprMatrix& a) {
  int d = a.dims()[0];
  if (a.dims()[1] != d) throw std::invalid_argument("sym_det: square only");
  if (d == 1) return a(0, 0);
  if (d == 2)
    return sub(mul2(a(0, 0), a(1, 1)), mul2(a(0, 1), a(1, 0)));
  std::vector<ExprPtr> terms;
  for (int j = 0; j < d; ++j) {
    ExprPtr c = mul2(a(0, j), sym_det(minor_of(a, 0, j)));
    terms.push_back(j % 2 == 0 ? c : negate(c));
  }
  return add(std::move(terms));
}

ExprMatrix sym_inverse(const ExprMatrix& a) {
  int d = a.dims()[0];
  ExprPtr det = sym_det(a);
  ExprPtr inv_det = pow_rational(det, -1, 1);
  ExprMatrix r(std::vector<int>{d, d});
  if (d == 1) {
    r(0, 0) = inv_det;
    return r;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      ExprPtr cof = sym_det(minor_of(a, j, i));
      if ((i + j) % 2 == 1) cof = negate(cof);
      r(i, j) = mul2(cof, inv_det);
    }
  }
  return r;
}

NDArray<double> eval_tensor(const ExprTensor& t, std::span<const double> u) {
  NDArray<double> out(t.dims());
  Evaluator ev(u);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = ev(t[i]);
  return out;
}

Matrix num_inverse(const Matrix& a) {
  int d = a.dims()[0];
  Matrix work = a;
  Matrix inv(std::vector<int>{d, d});
  for (int i = 0; i < d; ++i) inv(i, i) = 1.0;
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::fabs(work(r, col)) > std::fabs(work(piv, col))) piv = r;
    if (work(piv, col) == 0.0)
      throw std::runtime_error("num_inverse: singular matrix");
    if (piv != col) {
      for (int j = 0; j < d; ++j) {
        std::swap(work(piv, j), work(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    }
    double p = work(col, col);
    for (int j = 0; j < d; ++j) {
      work(col, j) /= p;
      inv(col, j) /= p;
    }
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      double f = work(r, col);
      if (f == 0.0) continue;
      for (int j = 0; j < d; ++j) {
        work(r, j) -= f * work(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

double num_det(const Matrix& a) {
  int d = a.dims()[0];
  Matrix work = a;
  double det = 1.0;
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::fabs(work(r, col)) > std::fabs(work(piv, col))) piv = r;
    if (work(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int j = 0; j < d; ++j) std::swap(work(piv, j), work(col, j));
      det = -det;
    }
    det *= work(col, col);
    for (int r = col + 1; r < d; ++r) {
      double f = work(r, col) / work(col, col);
      for (int j = col; j < d; ++j) work(r, j) -= f * work(col, j);
    }
  }
  return det;
}

}  // namespace nhflow
