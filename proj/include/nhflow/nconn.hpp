#ifndef NHFLOW_NCONN_HPP
#define NHFLOW_NCONN_HPP

#include <memory>

#include "nhflow/expr.hpp"
#include "nhflow/tensor.hpp"

namespace nhflow {

using ChartPtr = std::shared_ptr<const Chart>;

/// Nonlinear connection, stored as its m x n coefficient fields N^a_i.
struct NConnection {
  ChartPtr chart;
  ExprMatrix coeff;  // coeff(a, i) = N^a_i

  static NConnection zero(ChartPtr chart);
};

/// Derivative along the adapted frame vector e_alpha:
/// e_i = d/dx^i - N^a_i d/dy^a for i < n, e_a = d/dy^a otherwise.
ExprPtr adapted_deriv(const NConnection& nc, const ExprPtr& f, int alpha);

/// N-connection curvature fields Omega^a_ij, antisymmetric in (i, j).
ExprTensor n_curvature_fields(const NConnection& nc);
NDArray<double> n_curvature(const NConnection& nc, const Point& p);

/// Anholonomy coefficients W^gamma_{alpha beta} of the adapted frame,
/// [e_alpha, e_beta] = W^gamma_{alpha beta} e_gamma.
ExprTensor anholonomy_fields(const NConnection& nc);
NDArray<double> anholonomy(const NConnection& nc, const Point& p);

/// Frame (rows = frame index, e_alpha = e(alpha, mu) d/du^mu) and its
/// inverse at a point. Both are upper block triangular.
struct FrameMatrices {
  Point point;
  Matrix e;      // (d, d)
  Matrix e_inv;  // (d, d)
};

FrameMatrices adapted_frames(const NConnection& nc, const Point& p);

/// Components of the coframe 1-form e^alpha in the coordinate basis.
std::vector<double> coframe_row(const NConnection& nc, const Point& p,
                                int alpha);

/// Symbolic coframe/frame matrices (theta(alpha,mu) = <e^alpha, d/du^mu>).
ExprMatrix coframe_fields(const NConnection& nc);
ExprMatrix frame_fields(const NConnection& nc);

/// Metric split into horizontal and vertical blocks tied to an
/// N-connection. Block inverses are computed once at construction.
class DMetric {
public:
  DMetric(ChartPtr chart, ExprMatrix g, ExprMatrix h, NConnection nc);

  const Chart& chart() const { return *chart_; }
  ChartPtr chart_ptr() const { return chart_; }
  const ExprMatrix& g() const { return g_; }
  const ExprMatrix& h() const { return h_; }
  const ExprMatrix& g_inv() const { return g_inv_; }
  const ExprMatrix& h_inv() const { return h_inv_; }
  const NConnection& nc() const { return nc_; }

  /// Full d x d adapted-frame metric, diag(g, h).
  ExprMatrix full() const;
  ExprMatrix full_inv() const;

private:
  ChartPtr chart_;
  ExprMatrix g_, h_;
  ExprMatrix g_inv_, h_inv_;
  NConnection nc_;
};

/// Coordinate-frame matrix of the metric: upper-left g + N N h coupling,
/// mixed N h blocks, lower-right h.
ExprMatrix assemble_offdiag_fields(const DMetric& dm);
Matrix assemble_offdiag_metric(const DMetric& dm, const Point& p);

/// Inverse of the assembled matrix through the block identity; only the
/// block inverses of g and h appear.
ExprMatrix assembled_inverse_fields(const DMetric& dm);

/// Reads the N-connection off a coordinate-frame metric: N^b_i = h^{ab} gbar_{ia}.
NConnection extract_nconnection(const ExprMatrix& gbar, ChartPtr chart);

/// Splits a coordinate-frame metric into a DMetric with the extracted N.
DMetric dmetric_from_offdiag(const ExprMatrix& gbar, ChartPtr chart);

/// Almost complex structure of an n = m chart, coordinate-basis matrix.
Matrix almost_complex(const NConnection& nc, const Point& p);

}  // namespace nhflow

#endif
