// Per-cell operators of the hybrid/mimetic/mixed family: the consistency
// matrices, the orthonormal complement bases, the local inner-product
// matrices and their inverses, the stabilization parameterizations and the
// algebraic conversions between them.

#ifndef HMMF_LOCAL_HPP
#define HMMF_LOCAL_HPP

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "hmmf/mesh.hpp"

namespace hmmf {

using Mat2 = Eigen::Matrix2d;

/// Piecewise-constant symmetric diffusion tensor with its global
/// ellipticity constant (smallest eigenvalue over all cells).
struct DiffusionField {
  std::vector<Mat2> cell_tensor;
  double ellipticity = 0.0;

  static DiffusionField constant(const Mesh& mesh, const Mat2& tensor);
  static DiffusionField from_function(const Mesh& mesh,
                                      const std::function<Mat2(const Vec2&)>& tensor);

  const Mat2& tensor(int cell) const { return cell_tensor[cell]; }
};

/// All per-cell matrices shared by the three formulations. Rows follow the
/// cell's local edge order.
struct LocalOperators {
  int k = 0;  ///< number of edges
  double area = 0.0;
  double diameter = 0.0;
  Vec2 x_K = Vec2::Zero();
  Mat2 lambda = Mat2::Identity();

  std::vector<int> edge_ids;    ///< local index -> global edge id
  Eigen::VectorXd edge_length;  ///< |sigma|
  Eigen::VectorXd distance;     ///< d_{K,sigma}
  Eigen::MatrixXd normals;      ///< k x 2, rows are outward unit normals
  Eigen::MatrixXd offsets;      ///< k x 2, rows are midpoint offsets (xbar_sigma - x_K)

  Eigen::MatrixXd R;  ///< k x 2, rows |sigma| (xbar_sigma - x_K)^T
  Eigen::MatrixXd N;  ///< k x 2, rows (Lambda n)^T
  Eigen::MatrixXd C;  ///< k x (k-2), orthonormal basis of Im(N)^perp
  Eigen::MatrixXd D;  ///< k x (k-2), orthonormal basis of Im(R)^perp
  Eigen::MatrixXd T;  ///< k x k matrix of the flux residual operator
  Eigen::MatrixXd L;  ///< k x k matrix of the edge-value residual operator
};

LocalOperators build_local_operators(const Mesh& mesh, int cell, const Mat2& lambda);

/// Consistency matrix with rows |e_i| (xbar_i - x_K)^T.
Eigen::MatrixXd matrix_R(const Mesh& mesh, int cell);
/// Co-normal matrix with entries (Lambda)_j . n_i.
Eigen::MatrixXd matrix_N(const Mesh& mesh, int cell, const Mat2& lambda);

/// Deterministic orthonormal basis of Im(A)^perp for a full-column-rank k x d
/// matrix: modified Gram-Schmidt on the canonical basis projected off Im(A),
/// pivoting on the largest residual norm, sign fixed so the largest-magnitude
/// entry of each column is positive.
Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& A);

/// Orthonormal basis of Im(A) with the same pivoting and sign rules.
Eigen::MatrixXd orthonormal_range(const Eigen::MatrixXd& A, int rank);

/// Stabilization parameterizations of the same scheme family.
enum class StabKind {
  mimetic_u,  ///< (k-2) x (k-2) SPD matrix acting through C
  hybrid_b,   ///< k x k SPD matrix acting on the residuals S_K
  mixed_b     ///< k x k SPD matrix acting on the flux residuals T_K
};

struct CellStabilization {
  StabKind kind = StabKind::mimetic_u;
  Eigen::MatrixXd matrix;
};

/// Local flux inner-product matrix (consistency part plus C U C^T).
/// The zero matrix is accepted for U only when allow_semidefinite is set.
Eigen::MatrixXd matrix_M(const LocalOperators& ops, const Eigen::MatrixXd& U,
                         bool allow_semidefinite = false);

/// Inverse inner-product matrix in the dual form (consistency part plus
/// D Utilde D^T), built from any of the stabilization parameterizations.
Eigen::MatrixXd matrix_W(const LocalOperators& ops, const CellStabilization& stab);

/// Assembles the dual form from an explicit complement basis; rejects a
/// basis that is not orthogonal to Im(R).
Eigen::MatrixXd make_W(const LocalOperators& ops, const Eigen::MatrixXd& D,
                       const Eigen::MatrixXd& Utilde);

/// Converts a stabilization to the target parameterization so that the
/// induced local quadratic forms are identical.
CellStabilization convert_stabilization(const LocalOperators& ops, const CellStabilization& stab,
                                        StabKind target);

/// Affine weight function w(x) = c0 + xi . (x - x_ref) whose zeroth and
/// first moments over the cell match |K| and |K| x_K.
struct WeightFunction {
  double c0 = 1.0;
  Vec2 xi = Vec2::Zero();
  Vec2 x_ref = Vec2::Zero();  ///< the cell centroid

  double operator()(const Vec2& x) const { return c0 + xi.dot(x - x_ref); }
};

WeightFunction weight_function(const Mesh& mesh, int cell);

/// Discrete gradient (1/|K|) sum |sigma| (p_sigma - p_K) n_sigma.
Vec2 hybrid_gradient(const LocalOperators& ops, double p_cell, const Eigen::VectorXd& p_edges);

/// Second-order residuals S_sigma = p_sigma - p_K - grad . (xbar - x_K).
Eigen::VectorXd hybrid_residual(const LocalOperators& ops, double p_cell,
                                const Eigen::VectorXd& p_edges);

/// Flux-based gradient: solves |K| Lambda v = - sum |sigma| F_sigma (xbar - x_K).
Vec2 flux_gradient(const LocalOperators& ops, const Eigen::VectorXd& fluxes);

/// Flux residuals T_sigma = F_sigma + (Lambda v(F)) . n_sigma.
Eigen::VectorXd T_operator(const LocalOperators& ops, const Eigen::VectorXd& fluxes);

/// Edge-value residuals L(V)_sigma = V_sigma/|sigma| - D_K V . (xbar - x_K).
Eigen::VectorXd L_operator(const LocalOperators& ops, const Eigen::VectorXd& values);

/// Extreme eigenvalues of I^-1 M I^-1 with I = diag(sqrt(|sigma| d_sigma)).
std::pair<double, double> stability_bounds(const LocalOperators& ops, const Eigen::MatrixXd& M);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& S);

/// Checks symmetry and positive definiteness (used to validate parameters).
bool is_spd(const Eigen::MatrixXd& S, double* min_eigenvalue = nullptr);

}  // namespace hmmf

#endif
