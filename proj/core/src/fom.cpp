#include "certrom/fom.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>

namespace certrom {

void FomProblem::validate() const {
  const Index n = dim();
  if (mass.rows() != n || mass.cols() != n) throw InvalidArgument("mass matrix dimension mismatch");
  if (rhs.dim() != 0 && rhs.dim() != n) throw InvalidArgument("rhs dimension mismatch");
  if (output.size() != n) throw InvalidArgument("output functional dimension mismatch");
  if (initial.size() != n) throw InvalidArgument("initial datum dimension mismatch");
  if (lifting.size() != n) throw InvalidArgument("lifting dimension mismatch");
  if (energy.rows() != n) throw InvalidArgument("energy product dimension mismatch");
  if (mu_bar.size() != box.dim()) throw InvalidArgument("reference parameter has the wrong dimension");
}

FomProblem make_fom_problem(const ProblemData& data) {
  const Index n = data.op.dim();
  FomProblem p;
  p.grid = data.grid;
  p.box = data.box;
  p.time = data.time;
  p.mu_bar = data.mu_bar;
  p.constrained = data.lifting.constrained;
  p.lifting = data.lifting.values.size() == 0 ? Vector::Zero(n) : data.lifting.values;

  auto shifted = apply_dirichlet_shift(data.op, data.rhs, data.lifting);
  p.op = std::move(shifted.op);
  p.rhs = std::move(shifted.rhs);
  p.mass = constrain_matrix(data.mass, p.constrained, 1.0);
  if (data.output.size() != n) throw InvalidArgument("output functional dimension mismatch");
  p.output = constrain_vector(data.output, p.constrained);
  p.output_shift = data.output.dot(p.lifting);
  Vector u0 = data.initial.size() == 0 ? Vector::Zero(n) : data.initial;
  if (u0.size() != n) throw InvalidArgument("initial datum dimension mismatch");
  p.initial = constrain_vector(u0 - p.lifting, p.constrained);
  p.energy = energy_product(p.op, p.mu_bar);
  p.validate();
  return p;
}

namespace {

class StepSolver {
 public:
  StepSolver(const SparseMatrix& system, bool symmetric) : symmetric_(symmetric) {
    bool ok;
    if (symmetric_) {
      ldlt_.compute(system);
      ok = ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array().abs() > 0.0).all();
    } else {
      lu_.compute(system);
      ok = lu_.info() == Eigen::Success;
    }
    if (!ok) throw NumericalError("FOM step singular");
  }

  Vector solve(const Vector& b) const {
    Vector x = symmetric_ ? Vector(ldlt_.solve(b)) : Vector(lu_.solve(b));
    if (!x.allFinite()) throw NumericalError("FOM step singular");
    return x;
  }

 private:
  bool symmetric_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

}  // namespace

Fom::Fom(std::shared_ptr<const FomProblem> problem) : problem_(std::move(problem)) {
  if (!problem_) throw InvalidArgument("FOM needs a problem");
}

OutputSignal Fom::solve_streaming(const Parameter& mu, Index chunk, const ChunkSink& sink) const {
  const FomProblem& p = *problem_;
  p.box.check(mu);
  if (chunk < 1) throw InvalidArgument("chunk size must be positive");
  const Index steps = p.time.size();
  const double dt = p.time.dt();

  SparseMatrix system = p.mass + dt * p.op.assemble(mu);
  StepSolver solver(system, p.op.all_symmetric());

  Vector out(steps);
  Matrix block(p.dim(), std::min(chunk, steps));
  Index first = 0, filled = 0;
  auto push = [&](Index k, const Vector& u) {
    out[k] = p.output.dot(u) + p.output_shift;
    if (!sink) return;
    block.col(filled++) = u;
    if (filled == block.cols() || k == steps - 1) {
      sink(first, block.leftCols(filled));
      first = k + 1;
      filled = 0;
    }
  };

  Vector u = p.initial;
  push(0, u);
  for (Index k = 1; k < steps; ++k) {
    Vector b = p.mass * u;
    if (p.rhs.dim() != 0) b += dt * p.rhs.evaluate(mu, p.time.node(k));
    u = solver.solve(b);
    push(k, u);
  }
  return OutputSignal(p.time, out);
}

Trajectory Fom::eval_state(const Parameter& mu) const {
  Matrix coeffs(problem_->time.size(), problem_->dim());
  solve_streaming(mu, 64, [&](Index first, const Matrix& cols) {
    coeffs.middleRows(first, cols.cols()) = cols.transpose();
  });
  return Trajectory(problem_->time, std::move(coeffs));
}

OutputSignal Fom::output(const Trajectory& state) const {
  if (state.dim() != problem_->dim()) throw InvalidArgument("trajectory dimension does not match the FOM");
  Vector f = state.coeffs * problem_->output;
  f.array() += problem_->output_shift;
  return OutputSignal(state.grid, std::move(f));
}

OutputSignal Fom::eval_output(const Parameter& mu) const { return solve_streaming(mu, 1, {}); }

Trajectory Fom::eval_field(const Parameter& mu) const {
  Trajectory t = eval_state(mu);
  t.coeffs.rowwise() += problem_->lifting.transpose();
  return t;
}

}  // namespace certrom
