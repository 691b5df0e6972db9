#include "certrom/types.hpp"

#include <sstream>

namespace certrom {

Parameter::Parameter(std::initializer_list<double> values) : values_(static_cast<Index>(values.size())) {
  Index i = 0;
  for (double v : values) values_[i++] = v;
}

ParameterBox::ParameterBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw InvalidArgument("parameter box: bounds must be nonempty and of equal length");
  for (Index i = 0; i < lower_.size(); ++i)
    if (!(lower_[i] < upper_[i])) throw InvalidArgument("parameter box: lower bound must be below upper bound");
}

Parameter ParameterBox::center() const { return Parameter(0.5 * (lower_ + upper_)); }

bool ParameterBox::contains(const Parameter& mu, double tol) const {
  if (mu.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i) {
    double slack = tol * (upper_[i] - lower_[i]);
    if (mu[i] < lower_[i] - slack || mu[i] > upper_[i] + slack) return false;
  }
  return true;
}

Vector ParameterBox::clip(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

Vector ParameterBox::to_unit(const Parameter& mu) const {
  return (mu.values() - lower_).cwiseQuotient(upper_ - lower_);
}

Parameter ParameterBox::from_unit(const Vector& u) const {
  return Parameter(lower_ + u.cwiseProduct(upper_ - lower_));
}

void ParameterBox::check(const Parameter& mu) const {
  if (mu.size() != dim()) {
    std::ostringstream msg;
    msg << "parameter has dimension " << mu.size() << ", expected " << dim();
    throw InvalidArgument(msg.str());
  }
  if (!contains(mu, 1e-12)) throw InvalidArgument("parameter outside of the parameter box");
}

TimeGrid::TimeGrid(double t_end, Index count) : t_end_(t_end), count_(count) {
  if (count < 2) throw InvalidArgument("time grid needs at least two nodes");
  if (!(t_end > 0.0)) throw InvalidArgument("time grid end must be positive");
}

Vector TimeGrid::nodes() const {
  Vector t(count_);
  for (Index k = 0; k < count_; ++k) t[k] = node(k);
  return t;
}

Trajectory::Trajectory(TimeGrid g, Matrix c) : grid(g), coeffs(std::move(c)) {
  if (coeffs.rows() != grid.size()) throw InvalidArgument("trajectory row count must equal the number of time nodes");
}

OutputSignal::OutputSignal(TimeGrid g, Vector v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw InvalidArgument("output signal length must equal the number of time nodes");
}

OutputSignal operator-(const OutputSignal& a, const OutputSignal& b) {
  if (!(a.grid == b.grid)) throw InvalidArgument("output signals live on different time grids");
  return OutputSignal(a.grid, a.values - b.values);
}

}  // namespace certrom
