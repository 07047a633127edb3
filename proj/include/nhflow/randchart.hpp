#ifndef NHFLOW_RANDCHART_HPP
#define NHFLOW_RANDCHART_HPP

#include <random>

#include "nhflow/nconn.hpp"

namespace nhflow {

/// Smooth periodic trig-polynomial field over the chart box: a constant
/// plus `terms` products of sin/cos in single coordinates with integer
/// wavenumbers, total amplitude bounded by `amp`.
ExprPtr random_trig_field(std::mt19937_64& rng, const Chart& chart, double amp,
                          int terms = 2, int max_wave = 2);

NConnection random_nconnection(ChartPtr chart, std::mt19937_64& rng,
                               double amp = 0.4);

/// Random d-metric with diagonally dominant, y-dependent blocks attached to
/// a random N-connection. Nondegeneracy is verified on a sample lattice
/// 10x denser than `check_samples`; throws if a block degenerates.
DMetric random_dmetric(ChartPtr chart, std::mt19937_64& rng,
                       double offdiag = 0.15, double wobble = 0.3,
                       int check_samples = 40);

/// Uniform interior sample point of the chart box.
Point random_point(const Chart& chart, std::mt19937_64& rng);

}  // namespace nhflow

#endif
