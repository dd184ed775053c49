#include "hmmf/solve.hpp"

#include <algorithm>
#include <cmath>

#include "hmmf/errors.hpp"

namespace hmmf {

SparseSymmetric SparseSymmetric::from_triplets(int n, std::vector<Triplet> triplets,
                                               double rel_drop_tol) {
  for (Triplet& t : triplets) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw Error("triplet index out of range");
    if (t.col > t.row) std::swap(t.row, t.col);
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseSymmetric A;
  A.n_ = n;
  A.row_start_.assign(n + 1, 0);

  // accumulate duplicates
  std::vector<Triplet> merged;
  merged.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
      merged.back().value += t.value;
    else
      merged.push_back(t);
  }

  double max_abs = 0.0;
  for (const Triplet& t : merged) max_abs = std::max(max_abs, std::abs(t.value));
  const double drop = std::max(1e-300, rel_drop_tol * max_abs);

  for (const Triplet& t : merged) {
    if (std::abs(t.value) < drop) continue;
    A.cols_.push_back(t.col);
    A.values_.push_back(t.value);
    ++A.row_start_[t.row + 1];
  }
  for (int i = 0; i < n; ++i) A.row_start_[i + 1] += A.row_start_[i];
  return A;
}

double SparseSymmetric::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void SparseSymmetric::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y.setZero(n_);
  for (int i = 0; i < n_; ++i) {
    for (int p = row_start_[i]; p < row_start_[i + 1]; ++p) {
      const int j = cols_[p];
      const double v = values_[p];
      y(i) += v * x(j);
      if (j != i) y(j) += v * x(i);
    }
  }
}

Eigen::VectorXd SparseSymmetric::diagonal() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i)
    for (int p = row_start_[i]; p < row_start_[i + 1]; ++p)
      if (cols_[p] == i) d(i) = values_[p];
  return d;
}

std::vector<std::pair<int, double>> SparseSymmetric::row_lower(int i) const {
  std::vector<std::pair<int, double>> row;
  for (int p = row_start_[i]; p < row_start_[i + 1]; ++p)
    row.emplace_back(cols_[p], values_[p]);
  return row;
}

Eigen::MatrixXd SparseSymmetric::dense() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int p = row_start_[i]; p < row_start_[i + 1]; ++p) {
      M(i, cols_[p]) = values_[p];
      M(cols_[p], i) = values_[p];
    }
  return M;
}

Eigen::VectorXd solve_spd(const SparseSymmetric& A, const Eigen::VectorXd& b, double tol,
                          int max_iter, SolveStats* stats) {
  const int n = A.size();
  if (b.size() != n) throw Error("right-hand side size mismatch");
  if (max_iter <= 0) max_iter = std::max(1000, 50 * n);

  const Eigen::VectorXd diag = A.diagonal();
  for (int i = 0; i < n; ++i)
    if (!(diag(i) > 0.0))
      throw NotSpdError("matrix diagonal is not strictly positive at row " + std::to_string(i));
  const Eigen::VectorXd inv_diag = diag.cwiseInverse();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (stats) *stats = {0, 0.0};
  if (b_norm == 0.0) return x;

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd Ap(n);
  double rz = r.dot(z);

  for (int iter = 1; iter <= max_iter; ++iter) {
    A.multiply(p, Ap);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) throw NotSpdError("matrix is not positive definite (p^T A p <= 0)");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double rel = r.norm() / b_norm;
    if (stats) *stats = {iter, rel};
    if (rel <= tol) return x;
    z = inv_diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw NonConvergenceError(r.norm() / b_norm, max_iter);
}

std::vector<Eigen::VectorXd> recover_fluxes(const Mesh& mesh,
                                            const std::vector<Eigen::MatrixXd>& W_cache,
                                            const Eigen::VectorXd& p_cells,
                                            const Eigen::VectorXd& p_edges) {
  std::vector<Eigen::VectorXd> fluxes(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const int k = cell.n_edges();
    Eigen::VectorXd P(k);
    for (int i = 0; i < k; ++i) {
      const Edge& edge = mesh.edge(cell.edge_ids[i]);
      P(i) = edge.length * (p_cells(c) - p_edges(cell.edge_ids[i]));
    }
    fluxes[c] = W_cache[c] * P;
  }
  return fluxes;
}

}  // namespace hmmf
