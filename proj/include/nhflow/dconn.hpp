#ifndef NHFLOW_DCONN_HPP
#define NHFLOW_DCONN_HPP

#include <array>
#include <optional>

#include "nhflow/nconn.hpp"

namespace nhflow {

/// d-connection given by its four adapted-frame blocks. Index convention
/// throughout: first index up, second the acted-on frame index, last the
/// direction, so D_{e_k} e_j = L(i,j,k) e_i.
struct DConnectionCoeffs {
  ChartPtr chart;
  NConnection nc;
  ExprTensor Lh;  // (n,n,n)  L^i_jk
  ExprTensor Lv;  // (m,m,n)  L^a_bk
  ExprTensor Ch;  // (n,n,m)  C^i_jc
  ExprTensor Cv;  // (m,m,m)  C^a_bc

  static DConnectionCoeffs zero(ChartPtr chart, NConnection nc);
};

/// All (n+m)^3 adapted-frame coefficients; gamma(up, acted, direction).
struct FullConnectionCoeffs {
  ChartPtr chart;
  NConnection nc;
  ExprTensor gamma;  // (d,d,d)
};

FullConnectionCoeffs to_full(const DConnectionCoeffs& c);

DConnectionCoeffs canonical_dconnection(const DMetric& dm);

/// Covariant derivative of a tensor field in adapted frames; the result
/// carries one extra Down index appended last (the direction).
ExprTensor covariant_derivative(const ExprTensor& t,
                                const std::vector<Variance>& variance,
                                const FullConnectionCoeffs& conn);

/// Adapted components of D(metric); zero exactly when the connection is
/// metric-compatible.
ExprTensor metric_compatibility(const DMetric& dm,
                                const FullConnectionCoeffs& conn);

struct TorsionBlocks {
  NDArray<double> hhh;  // (n,n,n) T^i_jk
  NDArray<double> hhv;  // (n,n,m) T^i_ja
  NDArray<double> vhh;  // (m,n,n) T^a_ji
  NDArray<double> vvh;  // (m,m,n) T^a_bi
  NDArray<double> vvv;  // (m,m,m) T^a_bc
};
TorsionBlocks dtorsion(const DConnectionCoeffs& c, const Point& p);

/// Torsion of a full connection, T^alpha_{beta gamma}, from the frame
/// formula with anholonomy coefficients.
NDArray<double> full_torsion(const FullConnectionCoeffs& conn, const Point& p);

/// The six curvature coefficient families of a d-connection.
struct CurvatureFields {
  ExprTensor hh_h;  // (n,n,n,n) R^i_hjk
  ExprTensor vv_h;  // (m,m,n,n) R^a_bjk
  ExprTensor h_mx;  // (n,n,n,m) R^i_jka
  ExprTensor v_mx;  // (m,m,n,m) R^c_bka
  ExprTensor h_vv;  // (n,n,m,m) R^i_jbc
  ExprTensor v_vv;  // (m,m,m,m) R^a_bcd
};
CurvatureFields dcurvature_fields(const DConnectionCoeffs& c);

/// Families evaluated and placed in a full (d,d,d,d) array R^al_{be ga de},
/// R(e_de, e_ga) e_be = R^al_{be ga de} e_al.
NDArray<double> dcurvature(const DConnectionCoeffs& c, const Point& p);

/// Commutator-definition curvature oracle: evaluates
/// [D_X, D_Y]Z - D_{[X,Y]}Z on frame vectors, using the anholonomy
/// coefficients for the bracket. Prepared once, cheap per point.
class CommutatorCurvature {
public:
  explicit CommutatorCurvature(FullConnectionCoeffs conn);
  NDArray<double> at(const Point& p) const;
  const FullConnectionCoeffs& conn() const { return conn_; }

private:
  FullConnectionCoeffs conn_;
  ExprTensor dgamma_;  // (d,d,d,d): e_last( gamma )
  ExprTensor w_;       // anholonomy fields
};

struct RicciBlocks {
  Matrix full;          // (d,d) adapted components, not symmetric in general
  NDArray<double> hh;   // R_ij
  NDArray<double> hv;   // R_ia
  NDArray<double> vh;   // R_ai
  NDArray<double> vv;   // R_ab
};
RicciBlocks ricci_dtensor(const DConnectionCoeffs& c, const Point& p);

/// Symbolic Ricci d-tensor (adapted frame, d x d).
ExprMatrix ricci_fields(const DConnectionCoeffs& c);

/// Ricci of a full connection through the commutator curvature.
Matrix ricci_full(const CommutatorCurvature& cc, const Point& p);

struct ScalarEinstein {
  double scalar;
  Matrix einstein;                 // (d,d) adapted
  std::optional<Matrix> residual;  // einstein - source
};
ScalarEinstein scalar_einstein(const DMetric& dm, const DConnectionCoeffs& c,
                               const Point& p,
                               const ExprMatrix* source = nullptr);

/// Coordinate-frame Christoffel symbols of a metric given by component
/// fields; plain partial derivatives, gc(up, lo1, lo2) symmetric in lo1,lo2.
ExprTensor coordinate_christoffels(const ExprMatrix& metric,
                                   const ExprMatrix& metric_inv,
                                   const Chart& chart);

/// Holonomic coordinate-frame Ricci tensor of a metric.
ExprMatrix coordinate_ricci_fields(const ExprMatrix& metric,
                                   const ExprMatrix& metric_inv,
                                   const Chart& chart);

ExprPtr coordinate_scalar_curvature(const ExprMatrix& metric,
                                    const ExprMatrix& metric_inv,
                                    const Chart& chart);

/// Levi-Civita connection in the adapted frame: coordinate Christoffels of
/// the assembled metric pushed through the frame transform, inhomogeneous
/// term included.
FullConnectionCoeffs levi_civita_adapted(const DMetric& dm);

/// Distortion of the Levi-Civita connection against the canonical
/// d-connection, Z = (LC) - (canonical), adapted frame.
TensorValue distortion(const DMetric& dm, const Point& p);

/// Cross-check of the eight displayed distortion blocks against the
/// subtraction value. Blocks in order:
/// Z^i_jk, Z^a_jk, Z^i_bk, Z^a_bk, Z^i_kb, Z^a_jb, Z^a_bc, Z^i_ab.
struct DistortionReport {
  TensorValue z;
  std::array<double, 8> printed_block_diff;
  static const std::array<const char*, 8>& block_names();
};
DistortionReport distortion_report(const DMetric& dm, const Point& p);

DConnectionCoeffs kawaguchi_metrize(const DConnectionCoeffs& c,
                                    const DMetric& dm);

struct ObataOperators {
  NDArray<double> h_plus, h_minus;  // (n,n,n,n) O^{li}_{km} at (l,i,k,m)
  NDArray<double> v_plus, v_minus;  // (m,m,m,m)
};
ObataOperators obata_operators(const DMetric& dm, const Point& p);

/// Metric d-connection generated from four arbitrary deformation fields.
DConnectionCoeffs miron_connection(const DMetric& dm, const ExprTensor& y1,
                                   const ExprTensor& y2, const ExprTensor& y3,
                                   const ExprTensor& y4);

/// Connection Laplacian of a tensor field, evaluated at a point.
TensorValue connection_laplacian(const FullConnectionCoeffs& conn,
                                 const ExprTensor& field,
                                 const std::vector<Variance>& variance,
                                 const DMetric& dm, const Point& p);

struct CurvatureDistortionReport {
  Matrix ric_lc;        // Ricci of LC, adapted components
  Matrix ric_hat;       // Ricci of canonical d-connection
  Matrix ric_dist;      // difference contraction
  double sc_lc;
  double sc_hat;
  double sc_dist;
  double sc_coordinate;  // independent coordinate-frame computation
};
CurvatureDistortionReport curvature_distortion(const DMetric& dm,
                                               const Point& p);

enum class ConnChoice { LeviCivita, Canonical };

struct BTensors {
  NDArray<double> b4;     // (d,d,d,d)
  NDArray<double> bbar4;  // (d,d,d,d) literal second display
  Matrix bbar2;           // (d,d)
};
BTensors quadratic_b_tensors(const DMetric& dm, ConnChoice which,
                             const Point& p);

}  // namespace nhflow

#endif
