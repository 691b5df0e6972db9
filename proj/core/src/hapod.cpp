#include "certrom/hapod.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace certrom {

Matrix gram_schmidt(const Matrix& vectors, const SparseMatrix& gram, const Matrix& existing, double rel_tol) {
  const Index n = gram.rows();
  if (vectors.rows() != n) throw InvalidArgument("vectors have the wrong dimension");
  if (existing.size() != 0 && existing.rows() != n) throw InvalidArgument("existing basis has the wrong dimension");
  const Index base = existing.size() == 0 ? 0 : existing.cols();
  Matrix all(n, base + vectors.cols());
  if (base > 0) all.leftCols(base) = existing;
  Index count = base;
  for (Index j = 0; j < vectors.cols(); ++j) {
    Vector v = vectors.col(j);
    const double norm0 = std::sqrt(std::max(0.0, v.dot(gram * v)));
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (count == 0) break;
      Vector proj = all.leftCols(count).transpose() * (gram * v);
      v.noalias() -= all.leftCols(count) * proj;
    }
    const double norm = std::sqrt(std::max(0.0, v.dot(gram * v)));
    if (norm < rel_tol * norm0) continue;
    all.col(count++) = v / norm;
  }
  return all.middleCols(base, count - base);
}

void HapodConfig::validate() const {
  if (!(eps_pod > 0.0)) throw InvalidArgument("HaPOD tolerance must be positive");
  if (chunk < 1) throw InvalidArgument("HaPOD chunk size must be positive");
  if (!(omega > 0.0 && omega < 1.0)) throw InvalidArgument("HaPOD omega must lie in (0, 1)");
}

GramCoordinates::GramCoordinates(const SparseMatrix& gram) {
  llt_.compute(gram);
  if (llt_.info() != Eigen::Success) throw NumericalError("energy product not SPD");
}

Matrix GramCoordinates::to(const Matrix& x) const {
  Matrix px = llt_.permutationP() * x;
  return llt_.matrixU() * px;
}

Matrix GramCoordinates::from(const Matrix& y) const {
  Matrix z = llt_.matrixU().solve(y);
  return llt_.permutationPinv() * z;
}

IncrementalHapod::IncrementalHapod(const GramCoordinates& coords, double eps_pod, double omega, Index total,
                                   Index chunks)
    : coords_(coords), eps_pod_(eps_pod), omega_(omega), total_(total), chunks_(std::max<Index>(chunks, 1)) {}

double IncrementalHapod::compress(const Matrix& block, double eps_sq) {
  Matrix stacked(block.rows(), modes_.cols() + block.cols());
  stacked << modes_ * sigma_.asDiagonal(), block;
  if (stacked.cols() == 0) return 0.0;
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Index m = std::min(stacked.rows(), stacked.cols());
  Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index keep = s.size();
  double tail = 0.0;
  while (keep > 0 && (s[keep - 1] == 0.0 || tail + s[keep - 1] * s[keep - 1] <= eps_sq)) {
    tail += s[keep - 1] * s[keep - 1];
    --keep;
  }
  Matrix q = qr.householderQ() * Matrix::Identity(stacked.rows(), m);
  modes_ = q * svd.matrixU().leftCols(keep);
  sigma_ = s.head(keep);
  return tail;
}

void IncrementalHapod::add(const Matrix& vectors) {
  if (pending_.size() != 0) {
    double eps_sq = 0.0;
    if (nodes_done_ < chunks_ - 1)
      eps_sq = omega_ * omega_ * eps_pod_ * eps_pod_ * static_cast<double>(total_) / static_cast<double>(chunks_ - 1);
    // charge what was actually discarded; the final node gets the rest
    spent_ += compress(pending_, eps_sq);
    ++nodes_done_;
  }
  pending_ = coords_.to(vectors);
  seen_ += vectors.cols();
}

IncrementalHapod::Result IncrementalHapod::finish() {
  const double budget = eps_pod_ * eps_pod_ * static_cast<double>(std::min(seen_, total_));
  compress(pending_, std::max(0.0, budget - spent_));
  pending_.resize(0, 0);
  return {coords_.from(modes_), sigma_};
}

RbGenerator::RbGenerator(std::shared_ptr<const FomProblem> problem, double eps, HapodConfig config)
    : builder_(problem), coords_(problem->energy), eps_(eps), config_(config) {
  config_.validate();
  if (!(eps >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
}

void RbGenerator::set_tolerance(double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
  eps_ = eps;
}

Index RbGenerator::append_vectors(const Matrix& vectors) {
  Matrix fresh = gram_schmidt(vectors, problem().energy, basis());
  builder_.append(fresh);
  return fresh.cols();
}

Index RbGenerator::extend_with(const Parameter& mu, double eps_pod) {
  const FomProblem& p = problem();
  Index added = 0;
  if (dim() == 0 && !p.initial.isZero(0.0)) added += append_vectors(p.initial);

  const Index steps = p.time.size();
  const Index chunks = (steps + config_.chunk - 1) / config_.chunk;
  IncrementalHapod hapod(coords_, eps_pod, config_.omega, steps, chunks);
  const SparseMatrix& g = p.energy;
  Fom fom(problem_ptr());
  fom.solve_streaming(mu, config_.chunk, [&](Index, const Matrix& cols) {
    Matrix x = cols;
    const Matrix& phi = basis();
    if (phi.cols() > 0)
      for (int pass = 0; pass < 2; ++pass) x.noalias() -= phi * (phi.transpose() * (g * x));
    peak_stored_ = std::max(peak_stored_, phi.cols() + 2 * x.cols() + hapod.stored_vectors());
    hapod.add(x);
  });
  auto modes = hapod.finish();
  added += append_vectors(modes.modes);
  return added;
}

Index RbGenerator::extend(const Parameter& mu) {
  problem().box.check(mu);
  if (std::find(training_.begin(), training_.end(), mu) == training_.end()) training_.push_back(mu);
  return extend_with(mu, config_.eps_pod);
}

RbRom RbGenerator::precompute(int max_attempts) {
  RbRom rom = builder_.build();
  double eps_pod = config_.eps_pod;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Parameter> failing;
    for (const auto& mu : training_)
      if (rom.est_output(mu) > eps_) failing.push_back(mu);
    if (failing.empty()) break;
    eps_pod *= 0.5;
    Index added = 0;
    for (const auto& mu : failing) added += extend_with(mu, eps_pod);
    if (added == 0) break;
    rom = builder_.build();
  }
  return rom;
}

void write_basis_csv(const std::string& path, const Matrix& basis) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write basis file '" + path + "'");
  out.precision(17);
  out << basis.rows() << ',' << basis.cols() << '\n';
  for (Index j = 0; j < basis.cols(); ++j) {
    for (Index i = 0; i < basis.rows(); ++i) out << (i ? "," : "") << basis(i, j);
    out << '\n';
  }
}

Matrix read_basis_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open basis file '" + path + "'");
  std::string line;
  Index rows = -1, cols = -1;
  char comma = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> rows >> comma >> cols) || comma != ',' || rows < 0 ||
      cols < 0)
    throw InvalidArgument("basis file: malformed header");
  Matrix basis(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    if (!std::getline(in, line)) throw InvalidArgument("basis file: missing vector " + std::to_string(j + 1));
    std::istringstream ls(line);
    std::string cell;
    Index i = 0;
    while (std::getline(ls, cell, ',')) {
      if (i >= rows) throw InvalidArgument("basis file: too many values in vector " + std::to_string(j + 1));
      try {
        basis(i++, j) = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("basis file: malformed value '" + cell + "'");
      }
    }
    if (i != rows) throw InvalidArgument("basis file: too few values in vector " + std::to_string(j + 1));
  }
  return basis;
}

void RbGenerator::save_basis(const std::string& path) const { write_basis_csv(path, basis()); }

void RbGenerator::load_basis(const std::string& path) {
  Matrix b = read_basis_csv(path);
  if (b.rows() != problem().dim()) throw InvalidArgument("basis file: dimension does not match the problem");
  if (dim() != 0) throw InvalidArgument("basis can only be loaded into an empty generator");
  append_vectors(b);
}

}  // namespace certrom
