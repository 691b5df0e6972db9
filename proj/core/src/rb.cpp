#include "certrom/rb.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace certrom {

RieszSolver::RieszSolver(const SparseMatrix& gram) : gram_(gram) {
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) throw NumericalError("energy product not SPD");
}

Vector RieszSolver::solve(const Vector& functional) const {
  if (functional.size() != gram_.rows()) throw InvalidArgument("functional dimension does not match the Gram matrix");
  return llt_.solve(functional);
}

Matrix RieszSolver::solve(const Matrix& functionals) const {
  if (functionals.rows() != gram_.rows()) throw InvalidArgument("functional dimension does not match the Gram matrix");
  return llt_.solve(functionals);
}

double RieszSolver::dual_norm(const Vector& functional) const {
  return std::sqrt(std::max(0.0, functional.dot(solve(functional))));
}

Vector riesz_representative(const SparseMatrix& gram, const Vector& functional) {
  return RieszSolver(gram).solve(functional);
}

double min_theta_alpha(const AffineOperator& op, const Parameter& mu, const Parameter& mu_bar) {
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& c : op.components()) {
    if (!c.symmetric || !c.coercive) continue;
    double num = c.theta(mu), den = c.theta(mu_bar);
    if (!(num > 0.0) || !(den > 0.0)) throw NumericalError("min-theta inapplicable");
    alpha = std::min(alpha, num / den);
  }
  if (!std::isfinite(alpha)) throw NumericalError("min-theta inapplicable");
  return alpha;
}

RbRom::RbRom(Data data) : data_(std::move(data)) {
  if (!data_.problem) throw InvalidArgument("reduced model needs a problem");
}

void RbRom::check_state(const Trajectory& state) const {
  if (state.dim() != dim()) throw InvalidArgument("trajectory dimension does not match the reduced basis");
  if (!(state.grid == time())) throw InvalidArgument("trajectory lives on a different time grid");
}

Trajectory RbRom::eval_state(const Parameter& mu) const {
  const FomProblem& p = problem();
  p.box.check(mu);
  const Index n = dim(), steps = time().size();
  const double dt = time().dt();
  Matrix coeffs(steps, n);
  if (n == 0) return Trajectory(time(), coeffs);

  Vector theta = p.op.coefficients(mu);
  Matrix system = data_.mass;
  for (std::size_t q = 0; q < data_.op.size(); ++q) system += dt * theta[static_cast<Index>(q)] * data_.op[q];
  Eigen::PartialPivLU<Matrix> lu(system);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("RB step singular");

  Matrix rhs(n, static_cast<Index>(data_.rhs.size()));
  for (std::size_t q = 0; q < data_.rhs.size(); ++q) rhs.col(static_cast<Index>(q)) = data_.rhs[q];

  Vector c = data_.initial;
  coeffs.row(0) = c.transpose();
  for (Index k = 1; k < steps; ++k) {
    Vector b = data_.mass * c;
    if (rhs.cols() > 0) b += dt * rhs * p.rhs.coefficients(mu, time().node(k));
    c = lu.solve(b);
    coeffs.row(k) = c.transpose();
  }
  return Trajectory(time(), std::move(coeffs));
}

OutputSignal RbRom::output(const Trajectory& state) const {
  check_state(state);
  Vector f = state.coeffs * data_.output;
  f.array() += problem().output_shift;
  return OutputSignal(state.grid, std::move(f));
}

Vector RbRom::residual_dual_norms(const Trajectory& state, const Parameter& mu) const {
  check_state(state);
  const FomProblem& p = problem();
  const ResidualEstimatorData& e = data_.estimator;
  const Index steps = time().size(), n = dim();
  const double dt = time().dt();

  Matrix rhs_theta(static_cast<Index>(p.rhs.components().size()), steps - 1);
  for (Index k = 0; k + 1 < steps; ++k) rhs_theta.col(k) = p.rhs.coefficients(mu, time().node(k + 1));

  Matrix defect = e.rhs * rhs_theta;
  if (n > 0) {
    Vector theta = p.op.coefficients(mu);
    Matrix op = Matrix::Zero(e.rank(), n);
    for (std::size_t q = 0; q < e.op.size(); ++q) op += theta[static_cast<Index>(q)] * e.op[q];
    Matrix next = state.coeffs.bottomRows(steps - 1).transpose();
    Matrix diff = (next - state.coeffs.topRows(steps - 1).transpose()) / dt;
    defect.noalias() -= e.mass * diff;
    defect.noalias() -= op * next;
  }
  return defect.colwise().norm().transpose();
}

double RbRom::est_state(const Trajectory& state, const Parameter& mu) const {
  if (!data_.initial_in_space) throw NumericalError("initial datum not in the reduced space");
  check_state(state);
  const Vector& c0 = data_.initial;
  if (dim() > 0 && (state.coeffs.row(0).transpose() - c0).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + c0.cwiseAbs().maxCoeff()))
    throw InvalidArgument("trajectory does not start at the reduced initial datum");
  Vector res = residual_dual_norms(state, mu);
  double alpha = min_theta_alpha(problem().op, mu, problem().mu_bar);
  return std::sqrt(time().dt() * res.squaredNorm()) / alpha;
}

double RbRom::est_output(const Trajectory& state, const Parameter& mu) const {
  return data_.estimator.output_dual_norm * est_state(state, mu);
}

double RbRom::est_output(const Parameter& mu) const { return est_output(eval_state(mu), mu); }

Trajectory RbRom::reconstruct(const Trajectory& state) const {
  check_state(state);
  return Trajectory(state.grid, state.coeffs * data_.basis.transpose());
}

Trajectory RbRom::reconstruct_field(const Trajectory& state) const {
  Trajectory t = reconstruct(state);
  t.coeffs.rowwise() += problem().lifting.transpose();
  return t;
}

Vector rb_residual_bruteforce(const FomProblem& p, const Matrix& basis, const Trajectory& state, const Parameter& mu) {
  if (state.dim() != basis.cols()) throw InvalidArgument("trajectory dimension does not match the reduced basis");
  RieszSolver riesz(p.energy);
  SparseMatrix a = p.op.assemble(mu);
  const Index steps = state.grid.size();
  const double dt = state.grid.dt();
  Vector norms(steps - 1);
  for (Index k = 0; k + 1 < steps; ++k) {
    Vector now = basis * state.coeffs.row(k).transpose();
    Vector next = basis * state.coeffs.row(k + 1).transpose();
    Vector r = -(p.mass * (next - now)) / dt - a * next;
    if (p.rhs.dim() != 0) r += p.rhs.evaluate(mu, state.grid.node(k + 1));
    norms[k] = riesz.dual_norm(r);
  }
  return norms;
}

RbRomBuilder::RbRomBuilder(std::shared_ptr<const FomProblem> problem)
    : problem_(std::move(problem)), riesz_(problem_->energy) {
  const Index n = problem_->dim();
  basis_.resize(n, 0);
  orthonormal_.resize(n, 0);
  estimator_.mass.resize(0, 0);
  estimator_.op.assign(problem_->op.components().size(), Matrix(0, 0));
  Matrix rhs(n, static_cast<Index>(problem_->rhs.components().size()));
  for (std::size_t q = 0; q < problem_->rhs.components().size(); ++q)
    rhs.col(static_cast<Index>(q)) = problem_->rhs.components()[q].vector;
  estimator_.rhs = expand(rhs);
  estimator_.output_dual_norm = riesz_.dual_norm(problem_->output);
}

Matrix RbRomBuilder::expand(const Matrix& functionals) {
  const SparseMatrix& g = riesz_.gram();
  Matrix reps = riesz_.solve(functionals);
  Matrix coeffs = Matrix::Zero(orthonormal_.cols() + functionals.cols(), functionals.cols());
  for (Index j = 0; j < functionals.cols(); ++j) {
    Vector v = reps.col(j);
    const double norm0 = std::sqrt(std::max(0.0, v.dot(functionals.col(j))));
    if (norm0 == 0.0) continue;
    const Index r = orthonormal_.cols();
    Vector c = Vector::Zero(r);
    if (r > 0) {
      for (int pass = 0; pass < 2; ++pass) {
        Vector proj = orthonormal_.transpose() * (g * v);
        v.noalias() -= orthonormal_ * proj;
        c += proj;
      }
    }
    coeffs.col(j).head(r) = c;
    const double rest = std::sqrt(std::max(0.0, v.dot(g * v)));
    if (rest > 1e-12 * norm0) {
      orthonormal_.conservativeResize(Eigen::NoChange, r + 1);
      orthonormal_.col(r) = v / rest;
      coeffs(r, j) = rest;
    }
  }
  coeffs.conservativeResize(orthonormal_.cols(), Eigen::NoChange);
  return coeffs;
}

void RbRomBuilder::append(const Matrix& vectors) {
  const FomProblem& p = *problem_;
  if (vectors.rows() != p.dim()) throw InvalidArgument("basis vectors have the wrong dimension");
  if (vectors.cols() == 0) return;
  const Index m = vectors.cols();
  const Index qa = static_cast<Index>(p.op.components().size());

  Matrix functionals(p.dim(), m * (1 + qa));
  functionals.leftCols(m) = p.mass * vectors;
  for (Index q = 0; q < qa; ++q)
    functionals.middleCols(m * (1 + q), m) = p.op.components()[static_cast<std::size_t>(q)].matrix * vectors;
  Matrix coeffs = expand(functionals);
  const Index r = orthonormal_.cols();

  auto grow = [&](Matrix& block, const Matrix& fresh) {
    const Index old_rows = block.rows(), old_cols = basis_.cols();
    Matrix next = Matrix::Zero(r, old_cols + m);
    next.topLeftCorner(old_rows, block.cols()) = block;
    next.rightCols(m) = fresh;
    block = std::move(next);
  };
  auto pad = [&](Matrix& block) {
    Matrix next = Matrix::Zero(r, block.cols());
    next.topRows(block.rows()) = block;
    block = std::move(next);
  };
  grow(estimator_.mass, coeffs.leftCols(m));
  for (Index q = 0; q < qa; ++q) grow(estimator_.op[static_cast<std::size_t>(q)], coeffs.middleCols(m * (1 + q), m));
  pad(estimator_.rhs);

  basis_.conservativeResize(Eigen::NoChange, basis_.cols() + m);
  basis_.rightCols(m) = vectors;
}

RbRom RbRomBuilder::build() const {
  const FomProblem& p = *problem_;
  RbRom::Data d;
  d.problem = problem_;
  d.basis = basis_;
  d.estimator = estimator_;
  const Index n = basis_.cols();
  if (d.estimator.mass.rows() != orthonormal_.cols()) {
    d.estimator.mass = Matrix::Zero(orthonormal_.cols(), n);
    for (auto& b : d.estimator.op) b = Matrix::Zero(orthonormal_.cols(), n);
  }
  for (const auto& c : p.op.components()) d.op.push_back(basis_.transpose() * (c.matrix * basis_));
  d.mass = basis_.transpose() * (p.mass * basis_);
  for (const auto& c : p.rhs.components()) d.rhs.push_back(basis_.transpose() * c.vector);
  d.output = basis_.transpose() * p.output;

  Vector gu0 = p.energy * p.initial;
  d.initial = basis_.transpose() * gu0;
  const double norm0 = std::sqrt(std::max(0.0, p.initial.dot(gu0)));
  Vector rest = p.initial - basis_ * d.initial;
  const double norm_rest = std::sqrt(std::max(0.0, rest.dot(p.energy * rest)));
  d.initial_in_space = norm_rest <= 1e-10 * std::max(norm0, std::numeric_limits<double>::min());
  return RbRom(std::move(d));
}

}  // namespace certrom
