#pragma once

#include "certrom/rb.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <string>
#include <vector>

namespace certrom {

/// G-orthonormalizes `vectors` against `existing` (assumed G-orthonormal) and among themselves.
/// Two projection passes; vectors whose remainder falls below rel_tol times their original
/// G-norm are dropped.
Matrix gram_schmidt(const Matrix& vectors, const SparseMatrix& gram, const Matrix& existing = Matrix(),
                    double rel_tol = 1e-10);

struct HapodConfig {
  /// Bound on the mean-square G-projection error of the compressed vectors.
  double eps_pod = 1e-12;
  Index chunk = 50;
  double omega = 0.75;

  void validate() const;
};

/// Maps x to y = L^T P x where P G P^T = L L^T, so that the G-inner product becomes Euclidean.
class GramCoordinates {
 public:
  explicit GramCoordinates(const SparseMatrix& gram);

  Matrix to(const Matrix& x) const;
  Matrix from(const Matrix& y) const;

 private:
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

/// Incremental HaPOD: each chunk is compressed together with the current modes (weighted by
/// their singular values). Local truncations of the m - 1 intermediate nodes share omega^2 of
/// the error budget, the final node gets the rest.
class IncrementalHapod {
 public:
  /// `total` vectors will arrive in `chunks` calls to add().
  IncrementalHapod(const GramCoordinates& coords, double eps_pod, double omega, Index total, Index chunks);

  void add(const Matrix& vectors);

  struct Result {
    Matrix modes;  // G-orthonormal
    Vector singular_values;
  };
  Result finish();

  Index stored_vectors() const { return modes_.cols(); }
  Index seen() const { return seen_; }

 private:
  /// Returns the discarded squared energy.
  double compress(const Matrix& block, double eps_sq);

  const GramCoordinates& coords_;
  double eps_pod_;
  double omega_;
  Index total_;
  Index chunks_;
  Index nodes_done_ = 0;
  Index seen_ = 0;
  double spent_ = 0.0;
  Matrix modes_;  // Euclidean coordinates
  Vector sigma_;
  Matrix pending_;
};

/// Builds nested reduced bases from FOM trajectories (extend) and turns them into certified
/// reduced models (precompute).
class RbGenerator {
 public:
  RbGenerator(std::shared_ptr<const FomProblem> problem, double eps, HapodConfig config = {});

  const FomProblem& problem() const { return builder_.problem(); }
  std::shared_ptr<const FomProblem> problem_ptr() const { return builder_.problem_ptr(); }
  double tolerance() const { return eps_; }
  void set_tolerance(double eps);
  const HapodConfig& config() const { return config_; }
  const std::vector<Parameter>& training_set() const { return training_; }
  const Matrix& basis() const { return builder_.basis(); }
  Index dim() const { return builder_.dim(); }
  /// Largest number of full-order vectors held at once by extend (basis + chunk + HaPOD modes).
  Index peak_stored_vectors() const { return peak_stored_; }

  /// Returns the number of basis vectors added.
  Index extend(const Parameter& mu);
  /// Orthonormalizes and appends arbitrary vectors; returns the number added.
  Index append_vectors(const Matrix& vectors);
  /// Reduced model of the current basis. Training parameters that miss the tolerance are
  /// re-extended with a halved POD tolerance (at most max_attempts times).
  RbRom precompute(int max_attempts = 3);

  void save_basis(const std::string& path) const;
  void load_basis(const std::string& path);

 private:
  Index extend_with(const Parameter& mu, double eps_pod);

  RbRomBuilder builder_;
  GramCoordinates coords_;
  double eps_;
  HapodConfig config_;
  std::vector<Parameter> training_;
  Index peak_stored_ = 0;
};

/// Basis checkpoint: first line "N_h,N_rb", then one basis vector per line.
void write_basis_csv(const std::string& path, const Matrix& basis);
Matrix read_basis_csv(const std::string& path);

}  // namespace certrom
