#pragma once

#include "certrom/types.hpp"

#include <utility>

namespace certrom {

/// sqrt(sum_{k=0}^{K-2} dt * s(t_k)^2): left-endpoint rule, the same quadrature the
/// residual estimators sum with.
double l2_time_norm(const OutputSignal& s);

double linf_time_norm(const OutputSignal& s);

/// Mean of s(t_k) over the nodes inside the closed window [lo, hi].
double time_average(const OutputSignal& s, std::pair<double, double> window);

}  // namespace certrom
