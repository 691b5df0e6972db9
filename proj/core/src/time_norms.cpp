#include "certrom/time_norms.hpp"

#include <cmath>

namespace certrom {

double l2_time_norm(const OutputSignal& s) {
  const Index n = s.values.size() - 1;
  return std::sqrt(s.grid.dt() * s.values.head(n).squaredNorm());
}

double linf_time_norm(const OutputSignal& s) {
  return s.values.size() == 0 ? 0.0 : s.values.cwiseAbs().maxCoeff();
}

double time_average(const OutputSignal& s, std::pair<double, double> window) {
  const auto [lo, hi] = window;
  if (lo > hi || lo < 0.0 || hi > s.grid.t_end() * (1.0 + 1e-12))
    throw InvalidArgument("time window must be a subinterval of [0, T]");
  // Nodes are generated as k*dt, so a relative slack keeps e.g. t=0.9 inside (0.9, 1).
  const double slack = 1e-10 * s.grid.dt();
  double sum = 0.0;
  Index count = 0;
  for (Index k = 0; k < s.values.size(); ++k) {
    double t = s.grid.node(k);
    if (t >= lo - slack && t <= hi + slack) {
      sum += s.values[k];
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("empty time window");
  return sum / static_cast<double>(count);
}

}  // namespace certrom
