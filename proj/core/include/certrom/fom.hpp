#pragma once

#include "certrom/fem.hpp"
#include "certrom/model.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace certrom {

/// Unconstrained problem data as assembled on the grid.
struct ProblemData {
  std::optional<StructuredGrid> grid;
  ParameterBox box;
  TimeGrid time;
  Parameter mu_bar;
  AffineOperator op;
  SparseMatrix mass;
  AffineFunctional rhs;
  Vector output;
  /// Nodal interpolant of the initial datum (full field). Empty means zero.
  Vector initial;
  DirichletLifting lifting;
};

/// Discrete parabolic problem on the homogeneous (lifted) space. States u live in V_0; the
/// physical field is u + lifting.
struct FomProblem {
  std::optional<StructuredGrid> grid;
  ParameterBox box;
  TimeGrid time;
  Parameter mu_bar;
  AffineOperator op;
  SparseMatrix mass;
  AffineFunctional rhs;
  Vector output;
  double output_shift = 0.0;
  Vector initial;
  Vector lifting;
  std::vector<Index> constrained;
  SparseMatrix energy;

  Index dim() const { return op.dim(); }
  void validate() const;
};

/// Applies the Dirichlet shift and builds the energy product at mu_bar.
FomProblem make_fom_problem(const ProblemData& data);

class Fom : public StateModel {
 public:
  using ChunkSink = std::function<void(Index first_step, const Matrix& columns)>;

  explicit Fom(std::shared_ptr<const FomProblem> problem);

  const FomProblem& problem() const { return *problem_; }
  std::shared_ptr<const FomProblem> problem_ptr() const { return problem_; }

  Trajectory eval_state(const Parameter& mu) const override;
  OutputSignal output(const Trajectory& state) const override;
  OutputSignal eval_output(const Parameter& mu) const override;
  /// Time stepping without storing the trajectory: columns of N_h x c snapshot blocks are
  /// handed to the sink in time order. Returns the output signal.
  OutputSignal solve_streaming(const Parameter& mu, Index chunk, const ChunkSink& sink) const;
  /// Physical field u + lifting at every time node.
  Trajectory eval_field(const Parameter& mu) const;

 private:
  std::shared_ptr<const FomProblem> problem_;
};

}  // namespace certrom
