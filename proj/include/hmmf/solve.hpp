// Sparse symmetric storage, diagonally preconditioned conjugate gradients,
// and local flux back-substitution.

#ifndef HMMF_SOLVE_HPP
#define HMMF_SOLVE_HPP

#include <Eigen/Dense>
#include <vector>

#include "hmmf/mesh.hpp"

namespace hmmf {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Symmetric sparse matrix stored as the row-compressed lower triangle
/// (diagonal included). Entries below 1e-300 in magnitude are never stored.
class SparseSymmetric {
 public:
  SparseSymmetric() = default;

  /// Accumulates duplicate triplets; entries are folded into the lower
  /// triangle. Entries smaller than rel_drop_tol times the largest magnitude
  /// are dropped.
  static SparseSymmetric from_triplets(int n, std::vector<Triplet> triplets,
                                       double rel_drop_tol = 0.0);

  int size() const { return n_; }
  int nnz() const { return static_cast<int>(values_.size()); }
  double max_abs() const;

  /// y = A x (both triangles applied from the lower storage).
  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  Eigen::VectorXd diagonal() const;

  /// Stored lower-triangle entries of row i as (column, value) pairs.
  std::vector<std::pair<int, double>> row_lower(int i) const;

  /// Dense reconstruction, for tests and small systems only.
  Eigen::MatrixXd dense() const;

 private:
  int n_ = 0;
  std::vector<int> row_start_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients with diagonal preconditioning. Deterministic (zero
/// initial guess, fixed reduction order). Throws NotSpdError on a
/// non-positive diagonal and NonConvergenceError past max_iter.
Eigen::VectorXd solve_spd(const SparseSymmetric& A, const Eigen::VectorXd& b, double tol = 1e-12,
                          int max_iter = 0, SolveStats* stats = nullptr);

/// Per-cell fluxes F = W P with P = (|sigma| (p_K - p_sigma)). p_edges must
/// hold one value per mesh edge (condensed and boundary values expanded).
std::vector<Eigen::VectorXd> recover_fluxes(const Mesh& mesh,
                                            const std::vector<Eigen::MatrixXd>& W_cache,
                                            const Eigen::VectorXd& p_cells,
                                            const Eigen::VectorXd& p_edges);

}  // namespace hmmf

#endif
