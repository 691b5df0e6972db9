#pragma once

#include "certrom/fom.hpp"
#include "certrom/model.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace certrom {

/// Solves with the Gram matrix of the V_h inner product.
class RieszSolver {
 public:
  explicit RieszSolver(const SparseMatrix& gram);

  const SparseMatrix& gram() const { return gram_; }
  Vector solve(const Vector& functional) const;
  Matrix solve(const Matrix& functionals) const;
  /// sqrt(f^T G^{-1} f)
  double dual_norm(const Vector& functional) const;

 private:
  SparseMatrix gram_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

/// r with G r = functional.
Vector riesz_representative(const SparseMatrix& gram, const Vector& functional);

/// Lower bound of the coercivity constant from the positive symmetric components.
double min_theta_alpha(const AffineOperator& op, const Parameter& mu, const Parameter& mu_bar);

/// Offline data of the residual dual norms. The Riesz representatives of all residual
/// building blocks (rhs components, M phi_n, A_q phi_n) are expanded in a G-orthonormal
/// system; a residual's dual norm is then the Euclidean norm of its coefficient vector.
struct ResidualEstimatorData {
  Matrix rhs;                  // r x Q_b
  Matrix mass;                 // r x N
  std::vector<Matrix> op;      // Q_a blocks, r x N each
  double output_dual_norm = 0.0;

  Index rank() const { return rhs.rows(); }
};

class RbRom : public CertifiedModel {
 public:
  struct Data {
    std::shared_ptr<const FomProblem> problem;
    Matrix basis;  // N_h x N_rb, G-orthonormal
    std::vector<Matrix> op;
    Matrix mass;
    std::vector<Vector> rhs;
    Vector output;
    Vector initial;
    bool initial_in_space = true;
    ResidualEstimatorData estimator;
  };

  explicit RbRom(Data data);

  Index dim() const { return data_.basis.cols(); }
  const Matrix& basis() const { return data_.basis; }
  const FomProblem& problem() const { return *data_.problem; }
  const Data& data() const { return data_; }
  const TimeGrid& time() const { return data_.problem->time; }
  const Vector& reduced_initial() const { return data_.initial; }
  bool initial_in_space() const { return data_.initial_in_space; }

  Trajectory eval_state(const Parameter& mu) const override;
  OutputSignal output(const Trajectory& state) const override;

  Vector residual_dual_norms(const Trajectory& state, const Parameter& mu) const;
  double est_state(const Trajectory& state, const Parameter& mu) const;
  /// Bounds the output error of any reduced trajectory starting at the reduced initial datum.
  double est_output(const Trajectory& state, const Parameter& mu) const;
  double est_output(const Parameter& mu) const override;

  /// Phi c(t_k) in V_0.
  Trajectory reconstruct(const Trajectory& state) const;
  /// Phi c(t_k) + lifting.
  Trajectory reconstruct_field(const Trajectory& state) const;

 private:
  void check_state(const Trajectory& state) const;
  Data data_;
};

/// Residual dual norms by full-space assembly and one Riesz solve per step.
Vector rb_residual_bruteforce(const FomProblem& problem, const Matrix& basis, const Trajectory& state,
                              const Parameter& mu);

/// Incrementally maintained offline data; new basis vectors only cost their own Riesz solves.
class RbRomBuilder {
 public:
  explicit RbRomBuilder(std::shared_ptr<const FomProblem> problem);

  const FomProblem& problem() const { return *problem_; }
  std::shared_ptr<const FomProblem> problem_ptr() const { return problem_; }
  const RieszSolver& riesz() const { return riesz_; }
  const Matrix& basis() const { return basis_; }
  Index dim() const { return basis_.cols(); }

  /// Appends already G-orthonormalized vectors.
  void append(const Matrix& vectors);
  RbRom build() const;

 private:
  /// Expands the Riesz representatives of the given functionals; returns r x m coefficients.
  Matrix expand(const Matrix& functionals);

  std::shared_ptr<const FomProblem> problem_;
  RieszSolver riesz_;
  Matrix basis_;
  Matrix orthonormal_;  // N_h x r
  ResidualEstimatorData estimator_;
};

}  // namespace certrom
