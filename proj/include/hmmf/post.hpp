// Reconstructions and verification tools: the per-cell flux lifting, the
// mixed finite element inner product, the broken-gradient interpretation,
// super-admissible cell points, the two-point reduction check, and the
// manufactured-solution convergence harness.

#ifndef HMMF_POST_HPP
#define HMMF_POST_HPP

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hmmf/scheme.hpp"

namespace hmmf {

/// Exact solution with its diffusion tensor and closed-form source,
/// homogeneous Dirichlet on the unit square.
struct ManufacturedCase {
  std::string name;
  std::function<double(const Vec2&)> p;
  std::function<Vec2(const Vec2&)> grad_p;
  std::function<Mat2(const Vec2&)> lambda;
  std::function<double(const Vec2&)> f;
};

/// Built-in cases: "case-a" (Laplace tensor), "case-b" (rotated anisotropic),
/// "case-c" (piecewise isotropic split at x = 1/2, meshes must align).
ManufacturedCase manufactured_case(const std::string& name);

/// Piecewise-affine divergence-conforming field reconstructed from the edge
/// fluxes on the cone decomposition of a cell.
class LiftedFlux {
 public:
  LiftedFlux(const Mesh& mesh, int cell, const Mat2& lambda, const Eigen::VectorXd& fluxes);

  /// Field value; the point must lie inside the cell.
  Vec2 value(const Vec2& x) const;

  /// Constant divergence of the field on the cone of a local edge.
  double divergence(int local_edge) const;

  const Vec2& base() const { return base_; }
  const Eigen::VectorXd& flux_residuals() const { return T_; }

 private:
  const Mesh& mesh_;
  int cell_;
  Vec2 base_;            // -Lambda v_K(F)
  Eigen::VectorXd T_;    // residuals scaling the radial part
  Eigen::VectorXd dist_; // d_{K,sigma}
};

LiftedFlux lift_flux(const Mesh& mesh, int cell, const Mat2& lambda, const Eigen::VectorXd& fluxes);

/// Local mixed inner product int_K Lambda^-1 Fhat . Ghat, evaluated by
/// quadrature on the lifted fields.
double mfe_inner_product_quadrature(const Mesh& mesh, int cell, const Mat2& lambda,
                                    const Eigen::VectorXd& F, const Eigen::VectorXd& G);

/// The same inner product in closed form: |K| v(F).Lambda v(G) plus the
/// diagonal residual weights of the cone decomposition.
double mfe_inner_product_closed_form(const Mesh& mesh, int cell, const Mat2& lambda,
                                     const Eigen::VectorXd& F, const Eigen::VectorXd& G);

/// Piecewise-affine scalar reconstruction with per-cone gradients
/// grad_K + (beta/d_sigma) S_sigma n_sigma.
class BrokenGradient {
 public:
  BrokenGradient(const Mesh& mesh, int cell, double p_cell, const Eigen::VectorXd& p_edges,
                 double beta);

  Vec2 gradient(int local_edge) const;
  double value(const Vec2& x) const;  ///< the point must lie inside the cell

 private:
  const Mesh& mesh_;
  int cell_;
  double p_cell_;
  double beta_;
  Vec2 grad_;
  Eigen::VectorXd S_;
  Eigen::VectorXd dist_;
};

BrokenGradient broken_gradient(const Mesh& mesh, int cell, double p_cell,
                               const Eigen::VectorXd& p_edges, double beta);

/// Least-squares point making every edge normal pass through the edge
/// midpoint; empty when the residual exceeds 1e-10 diam(K) or the point
/// falls outside the cell. Returns the point and its residual.
std::optional<std::pair<Vec2, double>> super_admissible_point(const Mesh& mesh, int cell);

/// Per-cell super-admissible points for the whole mesh (empty entries where
/// none exists).
std::vector<std::optional<Vec2>> super_admissible_points(const Mesh& mesh);

struct TwoPointReport {
  bool applicable = false;
  std::string reason;               ///< set when not applicable
  double max_flux_deviation = 0.0;  ///< against the harmonic two-point formula
  double max_edge_relation_deviation = 0.0;  ///< against F = (lambda/d)(p_K - p_sigma)
};

/// Compares recovered fluxes with the harmonic two-point formula. Requires
/// an isotropic tensor and super-admissible cell points in use.
TwoPointReport two_point_verify(const Mesh& mesh, const DiffusionField& lambda,
                                const DiscreteSolution& solution);

struct ConvergenceRow {
  double h = 0.0;
  double theta = 0.0;
  double err_p = 0.0;
  double err_flux = 0.0;
  std::optional<double> order_p;
  std::optional<double> order_flux;
  bool exact_p = false;  ///< both errors of the pair below the exactness floor
  bool exact_flux = false;
};

struct ConvergenceReport {
  std::string case_name;
  bool condensed = false;
  std::vector<ConvergenceRow> rows;

  /// Orders between the two finest meshes ("observed" orders).
  std::optional<double> final_order_p() const;
  std::optional<double> final_order_flux() const;
};

/// Discrete errors of a solved scheme against the exact solution:
/// L2-type error on cell values and the weighted flux error.
std::pair<double, double> solution_errors(const ManufacturedCase& mcase, const Mesh& mesh,
                                          const DiffusionField& lambda,
                                          const DiscreteSolution& solution);

/// Runs the scheme on a refinement family (at least 3 meshes, strictly
/// decreasing h) and reports errors and log-ratio orders.
ConvergenceReport errors_and_orders(const ManufacturedCase& mcase, const std::vector<Mesh>& family,
                                    const SchemeConfig& config, double solver_tol = 1e-12);

/// CSV with columns h,theta,err_p,err_F,order_p,order_F; metadata goes in
/// leading comment lines.
void write_csv(const ConvergenceReport& report, std::ostream& out);

}  // namespace hmmf

#endif
