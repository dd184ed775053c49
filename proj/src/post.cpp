#include "hmmf/post.hpp"

#include <cmath>
#include <cstdio>

namespace hmmf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// local cone of a cell: triangle (x_K, a, b) with base the local edge
std::pair<Vec2, Vec2> edge_endpoints(const Mesh& mesh, int cell_id, int local_edge) {
  const Cell& cell = mesh.cell(cell_id);
  const Edge& edge = mesh.edge(cell.edge_ids[local_edge]);
  return {mesh.vertex(edge.endpoint_ids[0]), mesh.vertex(edge.endpoint_ids[1])};
}

// index of the cone containing x, or -1
int locate_cone(const Mesh& mesh, int cell_id, const Vec2& x) {
  const Cell& cell = mesh.cell(cell_id);
  const Vec2& apex = cell.point;
  for (int i = 0; i < cell.n_edges(); ++i) {
    const auto [a, b] = edge_endpoints(mesh, cell_id, i);
    const double det = cross2(a - apex, b - apex);
    const double u = cross2(x - apex, b - apex) / det;
    const double v = cross2(a - apex, x - apex) / det;
    const double tol = -1e-12;
    if (u >= tol && v >= tol && 1.0 - u - v >= tol) return i;
  }
  return -1;
}

}  // namespace

ManufacturedCase manufactured_case(const std::string& name) {
  ManufacturedCase mc;
  auto sinsin = [](const Vec2& x) { return std::sin(kPi * x.x()) * std::sin(kPi * x.y()); };
  auto grad_sinsin = [](const Vec2& x) {
    return Vec2(kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()),
                kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()));
  };

  if (name == "case-a") {
    mc.name = name;
    mc.p = sinsin;
    mc.grad_p = grad_sinsin;
    mc.lambda = [](const Vec2&) { return Mat2::Identity(); };
    mc.f = [sinsin](const Vec2& x) { return 2.0 * kPi * kPi * sinsin(x); };
    return mc;
  }
  if (name == "case-b") {
    // diag(1, 10) rotated by 30 degrees
    const double th = kPi / 6.0;
    Mat2 Q;
    Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Mat2 diag;
    diag << 1.0, 0.0, 0.0, 10.0;
    const Mat2 lam = Q * diag * Q.transpose();
    mc.name = name;
    mc.p = sinsin;
    mc.grad_p = grad_sinsin;
    mc.lambda = [lam](const Vec2&) { return lam; };
    mc.f = [lam, sinsin](const Vec2& x) {
      // -div(lam grad p) for constant lam
      const double pxx = -kPi * kPi * sinsin(x);
      const double pyy = pxx;
      const double pxy = kPi * kPi * std::cos(kPi * x.x()) * std::cos(kPi * x.y());
      return -(lam(0, 0) * pxx + 2.0 * lam(0, 1) * pxy + lam(1, 1) * pyy);
    };
    return mc;
  }
  if (name == "case-c") {
    // piecewise isotropic split at x = 1/2; the normal flux of sin sin
    // vanishes on the interface, so the same p stays exact
    auto lam_of = [](const Vec2& x) { return x.x() < 0.5 ? 1.0 : 10.0; };
    mc.name = name;
    mc.p = sinsin;
    mc.grad_p = grad_sinsin;
    mc.lambda = [lam_of](const Vec2& x) { return (lam_of(x) * Mat2::Identity()).eval(); };
    mc.f = [lam_of, sinsin](const Vec2& x) { return 2.0 * kPi * kPi * lam_of(x) * sinsin(x); };
    return mc;
  }
  throw ConfigError("unknown manufactured case: " + name);
}

LiftedFlux::LiftedFlux(const Mesh& mesh, int cell, const Mat2& lambda,
                       const Eigen::VectorXd& fluxes)
    : mesh_(mesh), cell_(cell) {
  const LocalOperators ops = build_local_operators(mesh, cell, lambda);
  if (fluxes.size() != ops.k) throw ParameterError("flux vector size does not match the cell");
  base_ = -(lambda * flux_gradient(ops, fluxes));
  T_ = T_operator(ops, fluxes);
  dist_ = ops.distance;
}

Vec2 LiftedFlux::value(const Vec2& x) const {
  const int cone = locate_cone(mesh_, cell_, x);
  if (cone < 0) throw DomainError("query point is outside the cell");
  const Vec2& apex = mesh_.cell(cell_).point;
  return base_ + T_(cone) * (x - apex) / dist_(cone);
}

double LiftedFlux::divergence(int local_edge) const {
  return 2.0 * T_(local_edge) / dist_(local_edge);
}

LiftedFlux lift_flux(const Mesh& mesh, int cell, const Mat2& lambda,
                     const Eigen::VectorXd& fluxes) {
  return LiftedFlux(mesh, cell, lambda, fluxes);
}

double mfe_inner_product_quadrature(const Mesh& mesh, int cell, const Mat2& lambda,
                                    const Eigen::VectorXd& F, const Eigen::VectorXd& G) {
  const LiftedFlux fh(mesh, cell, lambda, F);
  const LiftedFlux gh(mesh, cell, lambda, G);
  const Mat2 lambda_inv = lambda.inverse();
  const Cell& c = mesh.cell(cell);
  double total = 0.0;
  for (int i = 0; i < c.n_edges(); ++i) {
    const auto [a, b] = edge_endpoints(mesh, cell, i);
    const Vec2& apex = c.point;
    const double d = mesh.edge(c.edge_ids[i]).side_of(cell).distance;
    // both fields are affine on the cone, the product is quadratic
    const QuadratureRule rule = triangle_quadrature(apex, a, b, 2);
    total += integrate(rule, [&](const Vec2& x) {
      const Vec2 fv = fh.base() + fh.flux_residuals()(i) * (x - apex) / d;
      const Vec2 gv = gh.base() + gh.flux_residuals()(i) * (x - apex) / d;
      return fv.dot(lambda_inv * gv);
    });
  }
  return total;
}

double mfe_inner_product_closed_form(const Mesh& mesh, int cell, const Mat2& lambda,
                                     const Eigen::VectorXd& F, const Eigen::VectorXd& G) {
  const LocalOperators ops = build_local_operators(mesh, cell, lambda);
  const Vec2 vF = flux_gradient(ops, F);
  const Vec2 vG = flux_gradient(ops, G);
  const Eigen::VectorXd tF = T_operator(ops, F);
  const Eigen::VectorXd tG = T_operator(ops, G);
  const Mat2 lambda_inv = lambda.inverse();

  double total = ops.area * vF.dot(lambda * vG);
  const Cell& c = mesh.cell(cell);
  for (int i = 0; i < ops.k; ++i) {
    const auto [a, b] = edge_endpoints(mesh, cell, i);
    const QuadratureRule rule = triangle_quadrature(c.point, a, b, 2);
    const double gamma = integrate(rule, [&](const Vec2& x) {
      const Vec2 r = (x - c.point) / ops.distance(i);
      return r.dot(lambda_inv * r);
    });
    total += gamma * tF(i) * tG(i);
  }
  return total;
}

BrokenGradient::BrokenGradient(const Mesh& mesh, int cell, double p_cell,
                               const Eigen::VectorXd& p_edges, double beta)
    : mesh_(mesh), cell_(cell), p_cell_(p_cell), beta_(beta) {
  if (!(beta > 0.0)) throw ParameterError("broken gradient requires beta > 0");
  const LocalOperators ops = build_local_operators(mesh, cell, Mat2::Identity());
  grad_ = hybrid_gradient(ops, p_cell, p_edges);
  S_ = hybrid_residual(ops, p_cell, p_edges);
  dist_ = ops.distance;
}

Vec2 BrokenGradient::gradient(int local_edge) const {
  const Edge& edge = mesh_.edge(mesh_.cell(cell_).edge_ids[local_edge]);
  return grad_ + (beta_ / dist_(local_edge)) * S_(local_edge) * edge.side_of(cell_).normal;
}

double BrokenGradient::value(const Vec2& x) const {
  const int cone = locate_cone(mesh_, cell_, x);
  if (cone < 0) throw DomainError("query point is outside the cell");
  return p_cell_ + gradient(cone).dot(x - mesh_.cell(cell_).point);
}

BrokenGradient broken_gradient(const Mesh& mesh, int cell, double p_cell,
                               const Eigen::VectorXd& p_edges, double beta) {
  return BrokenGradient(mesh, cell, p_cell, p_edges, beta);
}

std::optional<std::pair<Vec2, double>> super_admissible_point(const Mesh& mesh, int cell_id) {
  const Cell& cell = mesh.cell(cell_id);
  const int k = cell.n_edges();

  // minimize the tangential offsets: sum over edges of (t . (xbar - x))^2
  Mat2 A = Mat2::Zero();
  Vec2 rhs = Vec2::Zero();
  for (int i = 0; i < k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    const Vec2 n = edge.side_of(cell_id).normal;
    const Vec2 t(-n.y(), n.x());
    A += t * t.transpose();
    rhs += t * t.dot(edge.midpoint);
  }
  if (std::abs(A.determinant()) < 1e-14 * A.cwiseAbs().maxCoeff() * A.cwiseAbs().maxCoeff())
    return std::nullopt;
  const Vec2 x = A.ldlt().solve(rhs);

  double residual = 0.0;
  for (int i = 0; i < k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    const Vec2 n = edge.side_of(cell_id).normal;
    const Vec2 t(-n.y(), n.x());
    residual = std::max(residual, std::abs(t.dot(edge.midpoint - x)));
  }
  if (residual > 1e-10 * cell.diameter) return std::nullopt;

  // the point must see every edge from the inside
  for (int i = 0; i < k; ++i) {
    const Edge& edge = mesh.edge(cell.edge_ids[i]);
    if (!(edge.side_of(cell_id).normal.dot(edge.midpoint - x) > 0.0)) return std::nullopt;
  }
  return std::make_pair(x, residual);
}

std::vector<std::optional<Vec2>> super_admissible_points(const Mesh& mesh) {
  std::vector<std::optional<Vec2>> points(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto found = super_admissible_point(mesh, c);
    if (found) points[c] = found->first;
  }
  return points;
}

TwoPointReport two_point_verify(const Mesh& mesh, const DiffusionField& lambda,
                                const DiscreteSolution& solution) {
  TwoPointReport report;

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Mat2& lam = lambda.tensor(c);
    const double scale = lam.cwiseAbs().maxCoeff();
    if (std::abs(lam(0, 1)) > 1e-12 * scale ||
        std::abs(lam(0, 0) - lam(1, 1)) > 1e-12 * scale) {
      report.reason = "tensor is not isotropic on cell " + std::to_string(c);
      return report;
    }
  }
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int e : cell.edge_ids) {
      const Edge& edge = mesh.edge(e);
      const Vec2 n = edge.side_of(c).normal;
      const Vec2 t(-n.y(), n.x());
      if (std::abs(t.dot(edge.midpoint - cell.point)) > 1e-10 * cell.diameter) {
        report.reason = "cell point " + std::to_string(c) + " is not super-admissible";
        return report;
      }
    }
  }
  report.applicable = true;

  double flux_scale = 1.0;
  for (const auto& F : solution.flux) flux_scale = std::max(flux_scale, F.cwiseAbs().maxCoeff());

  auto local_index = [&](int c, int e) {
    const Cell& cell = mesh.cell(c);
    for (int i = 0; i < cell.n_edges(); ++i)
      if (cell.edge_ids[i] == e) return i;
    return -1;
  };

  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const double lam = lambda.tensor(c)(0, 0);
    for (int i = 0; i < cell.n_edges(); ++i) {
      const Edge& edge = mesh.edge(cell.edge_ids[i]);
      const double d = edge.side_of(c).distance;
      const double expected =
          lam / d * (solution.p_cell(c) - solution.p_edge(cell.edge_ids[i]));
      report.max_edge_relation_deviation =
          std::max(report.max_edge_relation_deviation,
                   std::abs(solution.flux[c](i) - expected) / flux_scale);
    }
  }

  for (int e : mesh.interior_edges()) {
    const Edge& edge = mesh.edge(e);
    const int K = edge.side[0].cell;
    const int L = edge.side[1].cell;
    const double lamK = lambda.tensor(K)(0, 0);
    const double lamL = lambda.tensor(L)(0, 0);
    const double dK = edge.side[0].distance;
    const double dL = edge.side[1].distance;
    const double harmonic =
        lamK * lamL * (solution.p_cell(K) - solution.p_cell(L)) / (dK * lamL + dL * lamK);
    const double actual = solution.flux[K](local_index(K, e));
    report.max_flux_deviation =
        std::max(report.max_flux_deviation, std::abs(actual - harmonic) / flux_scale);
  }
  return report;
}

std::pair<double, double> solution_errors(const ManufacturedCase& mcase, const Mesh& mesh,
                                          const DiffusionField& lambda,
                                          const DiscreteSolution& solution) {
  double err_p2 = 0.0;
  double err_f2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const double dp = solution.p_cell(c) - mcase.p(cell.point);
    err_p2 += cell.area * dp * dp;
    for (int i = 0; i < cell.n_edges(); ++i) {
      const Edge& edge = mesh.edge(cell.edge_ids[i]);
      const EdgeSide& side = edge.side_of(c);
      const double exact_flux = -(lambda.tensor(c) * mcase.grad_p(edge.midpoint)).dot(side.normal);
      const double df = solution.flux[c](i) - exact_flux;
      err_f2 += edge.length * side.distance * df * df;
    }
  }
  return {std::sqrt(err_p2), std::sqrt(err_f2)};
}

ConvergenceReport errors_and_orders(const ManufacturedCase& mcase, const std::vector<Mesh>& family,
                                    const SchemeConfig& config, double solver_tol) {
  if (family.size() < 3) throw ReportError("need >= 3 meshes in the refinement family");

  ConvergenceReport report;
  report.case_name = mcase.name;
  report.condensed = config.condense != CondenseMode::none;

  for (const Mesh& mesh : family) {
    const Mesh meshp = apply_point_policy(mesh, config);
    SchemeConfig cfg = config;
    cfg.points = PointPolicy::from_mesh;
    const DiffusionField lambda = DiffusionField::from_function(meshp, mcase.lambda);
    const GlobalSystem system = assemble(meshp, lambda, cfg, mcase.f);
    const DiscreteSolution sol = solve_scheme(meshp, system, solver_tol);
    const auto [err_p, err_f] = solution_errors(mcase, meshp, lambda, sol);

    ConvergenceRow row;
    row.h = meshp.max_diameter();
    row.theta = regularity(meshp);
    row.err_p = err_p;
    row.err_flux = err_f;
    report.rows.push_back(row);
  }

  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
    ConvergenceRow& prev = report.rows[i];
    ConvergenceRow& next = report.rows[i + 1];
    if (!(next.h < prev.h)) throw ReportError("mesh family sizes are not strictly refining");
    const double ratio = std::log(prev.h / next.h);
    constexpr double exact_floor = 1e-11;
    if (prev.err_p <= exact_floor && next.err_p <= exact_floor)
      next.exact_p = true;
    else
      next.order_p = std::log(prev.err_p / next.err_p) / ratio;
    if (prev.err_flux <= exact_floor && next.err_flux <= exact_floor)
      next.exact_flux = true;
    else
      next.order_flux = std::log(prev.err_flux / next.err_flux) / ratio;
  }
  return report;
}

std::optional<double> ConvergenceReport::final_order_p() const {
  if (rows.empty()) return std::nullopt;
  return rows.back().order_p;
}

std::optional<double> ConvergenceReport::final_order_flux() const {
  if (rows.empty()) return std::nullopt;
  return rows.back().order_flux;
}

void write_csv(const ConvergenceReport& report, std::ostream& out) {
  out << "# case=" << report.case_name << " condensed=" << (report.condensed ? "true" : "false")
      << "\n";
  out << "h,theta,err_p,err_F,order_p,order_F\n";
  for (const ConvergenceRow& row : report.rows) {
    out << fmt17(row.h) << ',' << fmt17(row.theta) << ',' << fmt17(row.err_p) << ','
        << fmt17(row.err_flux) << ',';
    if (row.exact_p)
      out << "exact";
    else if (row.order_p)
      out << fmt17(*row.order_p);
    out << ',';
    if (row.exact_flux)
      out << "exact";
    else if (row.order_flux)
      out << fmt17(*row.order_flux);
    out << '\n';
  }
}

}  // namespace hmmf
