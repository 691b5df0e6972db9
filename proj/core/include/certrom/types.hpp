#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace certrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user input was violated (bad shapes, out-of-range values, malformed files).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure broke down (singular system, failed factorization, failed enrichment).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A point in the parameter domain.
class Parameter {
 public:
  Parameter() = default;
  explicit Parameter(Vector values) : values_(std::move(values)) {}
  Parameter(std::initializer_list<double> values);

  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  const Vector& values() const { return values_; }

  friend bool operator==(const Parameter& a, const Parameter& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

/// Axis-aligned box parameter domain.
class ParameterBox {
 public:
  ParameterBox() = default;
  ParameterBox(Vector lower, Vector upper);

  Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Parameter center() const;

  bool contains(const Parameter& mu, double tol = 0.0) const;
  /// Componentwise projection onto the box.
  Vector clip(const Vector& x) const;
  /// Affine map box -> [0,1]^p.
  Vector to_unit(const Parameter& mu) const;
  Parameter from_unit(const Vector& u) const;
  /// Throws InvalidArgument unless mu has the right dimension and lies in the box.
  void check(const Parameter& mu) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Equidistant time grid 0 = t_0 < ... < t_{K-1} = T (nodes are 0-based in code).
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double t_end, Index count);

  double t_end() const { return t_end_; }
  Index size() const { return count_; }
  double dt() const { return t_end_ / static_cast<double>(count_ - 1); }
  double node(Index k) const { return static_cast<double>(k) * dt(); }
  Vector nodes() const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_end_ == b.t_end_ && a.count_ == b.count_;
  }

 private:
  double t_end_ = 1.0;
  Index count_ = 2;
};

/// State trajectory; row k holds the coefficient vector at t_k.
struct Trajectory {
  Trajectory() = default;
  Trajectory(TimeGrid grid, Matrix coeffs);

  TimeGrid grid;
  Matrix coeffs;

  Index dim() const { return coeffs.cols(); }
};

/// Scalar quantity of interest sampled on the time grid.
struct OutputSignal {
  OutputSignal() = default;
  OutputSignal(TimeGrid grid, Vector values);

  TimeGrid grid;
  Vector values;
};

OutputSignal operator-(const OutputSignal& a, const OutputSignal& b);

using ParameterFunction = std::function<double(const Parameter&)>;

}  // namespace certrom
