#include "hmmf/local.hpp"

#include <cmath>

namespace hmmf {

DiffusionField DiffusionField::constant(const Mesh& mesh, const Mat2& tensor) {
  return from_function(mesh, [&](const Vec2&) { return tensor; });
}

DiffusionField DiffusionField::from_function(const Mesh& mesh,
                                             const std::function<Mat2(const Vec2&)>& tensor) {
  DiffusionField field;
  field.cell_tensor.reserve(mesh.n_cells());
  field.ellipticity = std::numeric_limits<double>::infinity();
  for (const Cell& cell : mesh.cells()) {
    Mat2 lam = tensor(cell.centroid);
    if (std::abs(lam(0, 1) - lam(1, 0)) > 1e-12 * lam.cwiseAbs().maxCoeff())
      throw ParameterError("diffusion tensor is not symmetric");
    lam(1, 0) = lam(0, 1);
    const double tr = lam.trace();
    const double det = lam.determinant();
    const double lmin = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
    if (!(lmin > 0.0)) throw ParameterError("diffusion tensor is not positive definite");
    field.ellipticity = std::min(field.ellipticity, lmin);
    field.cell_tensor.push_back(lam);
  }
  return field;
}

Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  Eigen::MatrixXd A = 0.5 * (S + S.transpose());
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (std::sqrt(off) <= 1e-14 * scale * n) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) <= 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api - s * aqi;
          A(q, i) = s * api + c * aqi;
        }
      }
    }
  }

  Eigen::VectorXd ev = A.diagonal();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

bool is_spd(const Eigen::MatrixXd& S, double* min_eigenvalue) {
  if (S.rows() != S.cols()) return false;
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-11 * scale) return false;
  const Eigen::VectorXd ev = jacobi_eigenvalues(S);
  if (min_eigenvalue) *min_eigenvalue = ev(0);
  return ev(0) > 0.0;
}

Eigen::MatrixXd orthonormal_range(const Eigen::MatrixXd& A, int rank) {
  const int k = static_cast<int>(A.rows());
  Eigen::MatrixXd cand = A;
  Eigen::MatrixXd Q(k, rank);
  int taken = 0;
  std::vector<bool> used(cand.cols(), false);
  while (taken < rank) {
    int best = -1;
    double best_norm = -1.0;
    for (int j = 0; j < cand.cols(); ++j) {
      if (used[j]) continue;
      const double nrm = cand.col(j).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    if (best < 0 || best_norm <= 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
      throw IllConditionedCellError("matrix range is numerically rank deficient");
    used[best] = true;
    Eigen::VectorXd q = cand.col(best) / best_norm;
    // sign rule: largest-magnitude entry positive, first occurrence on ties
    int imax = 0;
    for (int i = 1; i < k; ++i)
      if (std::abs(q(i)) > std::abs(q(imax))) imax = i;
    if (q(imax) < 0.0) q = -q;
    Q.col(taken++) = q;
    for (int j = 0; j < cand.cols(); ++j)
      if (!used[j]) cand.col(j) -= q.dot(cand.col(j)) * q;
  }
  return Q;
}

Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& A) {
  const int k = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  // orthonormalize the columns of A, then project the canonical basis off Im(A)
  const Eigen::MatrixXd QA = orthonormal_range(A, d);
  Eigen::MatrixXd cand = Eigen::MatrixXd::Identity(k, k);
  cand -= QA * (QA.transpose() * cand);
  return orthonormal_range(cand, k - d);
}

Eigen::MatrixXd matrix_R(const Mesh& mesh, int cell_id) {
  const Cell& cell = mesh.cell(cell_id);
  const int k = cell.n_edges();
  Eigen::MatrixXd R(k, 2);
  for (int i = 0; i < k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    R.row(i) = edge.length * (edge.midpoint - cell.point).transpose();
  }
  return R;
}

Eigen::MatrixXd matrix_N(const Mesh& mesh, int cell_id, const Mat2& lambda) {
  const Cell& cell = mesh.cell(cell_id);
  const int k = cell.n_edges();
  Eigen::MatrixXd N(k, 2);
  for (int i = 0; i < k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    N.row(i) = (lambda * edge.side_of(cell_id).normal).transpose();
  }
  return N;
}

LocalOperators build_local_operators(const Mesh& mesh, int cell_id, const Mat2& lambda) {
  const Cell& cell = mesh.cell(cell_id);
  LocalOperators ops;
  ops.k = cell.n_edges();
  ops.area = cell.area;
  ops.diameter = cell.diameter;
  ops.x_K = cell.point;
  ops.lambda = lambda;
  ops.edge_ids = cell.edge_ids;

  ops.edge_length.resize(ops.k);
  ops.distance.resize(ops.k);
  ops.normals.resize(ops.k, 2);
  ops.offsets.resize(ops.k, 2);
  for (int i = 0; i < ops.k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    const EdgeSide& side = edge.side_of(cell_id);
    ops.edge_length(i) = edge.length;
    ops.distance(i) = side.distance;
    ops.normals.row(i) = side.normal.transpose();
    ops.offsets.row(i) = (edge.midpoint - cell.point).transpose();
  }

  ops.R = ops.edge_length.asDiagonal() * ops.offsets;
  ops.N = ops.normals * lambda;  // rows (Lambda n)^T since Lambda is symmetric

  // reject cells whose co-normal matrix is numerically rank deficient:
  // one column rotation orthogonalizes the two columns, the singular values
  // are then plain column norms (accurate also when tiny)
  {
    const Eigen::VectorXd c1 = ops.N.col(0);
    const Eigen::VectorXd c2 = ops.N.col(1);
    const double cross = c1.dot(c2);
    const double theta = 0.5 * std::atan2(2.0 * cross, c1.squaredNorm() - c2.squaredNorm());
    const double sigma1 = (std::cos(theta) * c1 + std::sin(theta) * c2).norm();
    const double sigma2 = (-std::sin(theta) * c1 + std::cos(theta) * c2).norm();
    if (!(std::min(sigma1, sigma2) > 1e-10 * std::max(sigma1, sigma2)))
      throw IllConditionedCellError("cell " + std::to_string(cell_id) +
                                    ": co-normal matrix is rank deficient");
  }

  ops.C = orthonormal_complement(ops.N);
  ops.D = orthonormal_complement(ops.R);
  ops.T = Eigen::MatrixXd::Identity(ops.k, ops.k) -
          ops.normals * ops.R.transpose() / ops.area;
  ops.L = ops.edge_length.cwiseInverse().asDiagonal() * Eigen::MatrixXd::Identity(ops.k, ops.k) -
          ops.offsets * ops.normals.transpose() / ops.area;
  return ops;
}

Eigen::MatrixXd matrix_M(const LocalOperators& ops, const Eigen::MatrixXd& U,
                         bool allow_semidefinite) {
  if (U.rows() != ops.k - 2 || U.cols() != ops.k - 2)
    throw ParameterError("stabilization matrix U has the wrong size");
  double lmin = 0.0;
  if (!is_spd(U, &lmin) && !(allow_semidefinite && lmin >= -1e-12))
    throw ParameterError("stabilization matrix U is not symmetric positive definite");
  const Eigen::Matrix2d lambda_inv = ops.lambda.inverse();
  Eigen::MatrixXd M =
      ops.R * lambda_inv * ops.R.transpose() / ops.area + ops.C * U * ops.C.transpose();
  return 0.5 * (M + M.transpose());
}

Eigen::MatrixXd make_W(const LocalOperators& ops, const Eigen::MatrixXd& D,
                       const Eigen::MatrixXd& Utilde) {
  const double scale = std::max(ops.R.cwiseAbs().maxCoeff(), 1e-300);
  if ((ops.R.transpose() * D).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ParameterError("complement basis is not orthogonal to the consistency matrix");
  const Eigen::Matrix2d lambda_inv = ops.lambda.inverse();
  Eigen::MatrixXd W =
      ops.N * lambda_inv * ops.N.transpose() / ops.area + D * Utilde * D.transpose();
  return 0.5 * (W + W.transpose());
}

namespace {

void check_kernel_identities(const LocalOperators& ops) {
  const double tn = (ops.T * ops.N).cwiseAbs().maxCoeff();
  const double lr = (ops.L * ops.R).cwiseAbs().maxCoeff();
  const double scale_n = std::max(ops.N.cwiseAbs().maxCoeff(), 1e-300);
  const double scale_r = std::max(ops.L.cwiseAbs().maxCoeff() * ops.R.cwiseAbs().maxCoeff(), 1e-300);
  if (tn > 1e-10 * scale_n || lr > 1e-10 * scale_r)
    throw InternalConsistencyError("kernel identities of the local operators do not hold");
}

// Dual stabilization Utilde such that the inverse inner product carries
// D Utilde D^T: extracted from the numerical inverse of M.
Eigen::MatrixXd dual_from_mimetic(const LocalOperators& ops, const Eigen::MatrixXd& U) {
  const Eigen::MatrixXd M = matrix_M(ops, U);
  const Eigen::MatrixXd Minv =
      M.llt().solve(Eigen::MatrixXd::Identity(ops.k, ops.k));
  const Eigen::Matrix2d lambda_inv = ops.lambda.inverse();
  const Eigen::MatrixXd X = Minv - ops.N * lambda_inv * ops.N.transpose() / ops.area;
  Eigen::MatrixXd Ut = ops.D.transpose() * X * ops.D;
  return 0.5 * (Ut + Ut.transpose());
}

Eigen::MatrixXd mimetic_from_dual(const LocalOperators& ops, const Eigen::MatrixXd& Utilde) {
  const Eigen::MatrixXd W = make_W(ops, ops.D, Utilde);
  const Eigen::MatrixXd Winv = W.llt().solve(Eigen::MatrixXd::Identity(ops.k, ops.k));
  const Eigen::Matrix2d lambda_inv = ops.lambda.inverse();
  const Eigen::MatrixXd X = Winv - ops.R * lambda_inv * ops.R.transpose() / ops.area;
  Eigen::MatrixXd U = ops.C.transpose() * X * ops.C;
  return 0.5 * (U + U.transpose());
}

// Pulls an inner product G on R^(k-2) back through an operator B that is
// injective on the chosen complement: returns (B+)^T G B+ + (I - P) with
// P the orthogonal projector on Im(B). The result induces the same form
// composed with B as G composed with the complement coordinates.
Eigen::MatrixXd pull_back_inner_product(const Eigen::MatrixXd& Bcomp, const Eigen::MatrixXd& G,
                                        const Eigen::MatrixXd& range_basis) {
  const Eigen::MatrixXd gram = Bcomp.transpose() * Bcomp;
  const Eigen::MatrixXd pinv = gram.llt().solve(Bcomp.transpose());  // (B^T B)^-1 B^T
  const int k = static_cast<int>(Bcomp.rows());
  Eigen::MatrixXd A = pinv.transpose() * G * pinv + Eigen::MatrixXd::Identity(k, k) -
                      range_basis * range_basis.transpose();
  return 0.5 * (A + A.transpose());
}

Eigen::MatrixXd to_mimetic(const LocalOperators& ops, const CellStabilization& stab) {
  switch (stab.kind) {
    case StabKind::mimetic_u:
      return stab.matrix;
    case StabKind::mixed_b:
      // U = C^T T^T B T C reproduces the form exactly
      {
        Eigen::MatrixXd U =
            ops.C.transpose() * ops.T.transpose() * stab.matrix * ops.T * ops.C;
        return 0.5 * (U + U.transpose());
      }
    case StabKind::hybrid_b: {
      Eigen::MatrixXd Ut =
          ops.D.transpose() * ops.L.transpose() * stab.matrix * ops.L * ops.D;
      return mimetic_from_dual(ops, 0.5 * (Ut + Ut.transpose()));
    }
  }
  throw ParameterError("unknown stabilization kind");
}

}  // namespace

CellStabilization convert_stabilization(const LocalOperators& ops, const CellStabilization& stab,
                                        StabKind target) {
  check_kernel_identities(ops);
  const int expected = stab.kind == StabKind::mimetic_u ? ops.k - 2 : ops.k;
  if (stab.matrix.rows() != expected || stab.matrix.cols() != expected)
    throw ParameterError("stabilization matrix has the wrong size");
  if (!is_spd(stab.matrix))
    throw ParameterError("stabilization matrix is not symmetric positive definite");
  if (stab.kind == target) return stab;

  const Eigen::MatrixXd U = to_mimetic(ops, stab);
  if (target == StabKind::mimetic_u) return {StabKind::mimetic_u, U};

  if (target == StabKind::mixed_b) {
    // Im(T) equals Im(R)^perp, for which D is the deterministic basis.
    const Eigen::MatrixXd B = pull_back_inner_product(ops.T * ops.C, U, ops.D);
    return {StabKind::mixed_b, B};
  }

  // target == hybrid_b
  const Eigen::MatrixXd Ltilde = ops.L * ops.D;
  const Eigen::MatrixXd QL = orthonormal_range(Ltilde, ops.k - 2);
  const Eigen::MatrixXd B = pull_back_inner_product(Ltilde, dual_from_mimetic(ops, U), QL);
  return {StabKind::hybrid_b, B};
}

Eigen::MatrixXd matrix_W(const LocalOperators& ops, const CellStabilization& stab) {
  const CellStabilization as_u = convert_stabilization(ops, stab, StabKind::mimetic_u);
  return make_W(ops, ops.D, dual_from_mimetic(ops, as_u.matrix));
}

WeightFunction weight_function(const Mesh& mesh, int cell_id) {
  const Cell& cell = mesh.cell(cell_id);
  WeightFunction w;
  w.x_ref = cell.centroid;

  // second moment about the centroid, exact for this quadratic integrand
  const QuadratureRule rule = mesh.cell_quadrature(cell_id, 2);
  Mat2 J = Mat2::Zero();
  for (const auto& node : rule) {
    const Vec2 r = node.x - cell.centroid;
    J += node.w * r * r.transpose();
  }
  w.xi = J.ldlt().solve(cell.area * (cell.point - cell.centroid));
  return w;
}

Vec2 hybrid_gradient(const LocalOperators& ops, double p_cell, const Eigen::VectorXd& p_edges) {
  Vec2 grad = Vec2::Zero();
  for (int i = 0; i < ops.k; ++i)
    grad += ops.edge_length(i) * (p_edges(i) - p_cell) * ops.normals.row(i).transpose();
  return grad / ops.area;
}

Eigen::VectorXd hybrid_residual(const LocalOperators& ops, double p_cell,
                                const Eigen::VectorXd& p_edges) {
  const Vec2 grad = hybrid_gradient(ops, p_cell, p_edges);
  Eigen::VectorXd S(ops.k);
  for (int i = 0; i < ops.k; ++i)
    S(i) = p_edges(i) - p_cell - grad.dot(ops.offsets.row(i));
  return S;
}

Vec2 flux_gradient(const LocalOperators& ops, const Eigen::VectorXd& fluxes) {
  if (std::abs(ops.lambda.determinant()) < 1e-300)
    throw ParameterError("diffusion tensor is singular");
  const Vec2 rhs = -(ops.R.transpose() * fluxes);
  return ops.lambda.inverse() * rhs / ops.area;
}

Eigen::VectorXd T_operator(const LocalOperators& ops, const Eigen::VectorXd& fluxes) {
  return ops.T * fluxes;
}

Eigen::VectorXd L_operator(const LocalOperators& ops, const Eigen::VectorXd& values) {
  return ops.L * values;
}

std::pair<double, double> stability_bounds(const LocalOperators& ops, const Eigen::MatrixXd& M) {
  Eigen::VectorXd inv_scale(ops.k);
  for (int i = 0; i < ops.k; ++i)
    inv_scale(i) = 1.0 / std::sqrt(ops.edge_length(i) * ops.distance(i));
  const Eigen::MatrixXd B = inv_scale.asDiagonal() * M * inv_scale.asDiagonal();
  const Eigen::VectorXd ev = jacobi_eigenvalues(B);
  return {ev(0), ev(ops.k - 1)};
}

}  // namespace hmmf
