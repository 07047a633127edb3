#ifndef NHFLOW_TEST_CHARTS_HPP
#define NHFLOW_TEST_CHARTS_HPP

#include "nhflow/nconn.hpp"

namespace nhflow::testing {

inline ChartPtr chart21() {
  return std::make_shared<Chart>(2, 1,
                                 std::vector<std::string>{"x1", "x2", "y3"});
}

inline ChartPtr chart22() {
  return std::make_shared<Chart>(
      2, 2, std::vector<std::string>{"x1", "x2", "y1", "y2"});
}

/// Flat chart: g = h = identity, N = 0.
inline DMetric flat_dmetric(ChartPtr ch) {
  return DMetric(ch, identity_exprs(ch->n()), identity_exprs(ch->m()),
                 NConnection::zero(ch));
}

/// g = identity, h_33 = (x1)^2, N = 0 on the (2,1) chart.
inline DMetric cone_dmetric(ChartPtr ch) {
  ExprMatrix h(std::vector<int>{1, 1});
  h(0, 0) = parse_scalar_field("x1^2", *ch);
  return DMetric(ch, identity_exprs(2), h, NConnection::zero(ch));
}

/// Unit round 2-sphere horizontal block times a flat vertical line:
/// g = diag(1, sin(x1)^2), h = 1, N = 0. x1 is the polar angle.
inline DMetric sphere_dmetric(ChartPtr ch) {
  ExprMatrix g = identity_exprs(2);
  g(1, 1) = parse_scalar_field("sin(x1)^2", *ch);
  return DMetric(ch, g, identity_exprs(1), NConnection::zero(ch));
}

}  // namespace nhflow::testing

#endif
