#include "hmmf/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "hmmf/post.hpp"
#include "hmmf/rng.hpp"

namespace hmmf {

namespace {

int thread_budget() {
  const char* env = std::getenv("HMMF_THREADS");
  if (!env) return 1;
  const int t = std::atoi(env);
  return t > 0 ? t : 1;
}

// Per-cell work with a deterministic merge: results land in index order
// regardless of the thread count.
template <typename F>
void parallel_cells(int n, F&& work) {
  const int threads = std::min(thread_budget(), n);
  if (threads <= 1) {
    for (int c = 0; c < n; ++c) work(c);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int c = t; c < n; c += threads) work(c);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::string StabilizationPreset::describe() const {
  char buf[96];
  switch (type) {
    case Type::hybrid_diagonal:
      std::snprintf(buf, sizeof(buf), "hybrid-diagonal alpha=%g", alpha);
      break;
    case Type::mixed_strong:
      std::snprintf(buf, sizeof(buf), "mixed-strong nu=%g", nu);
      break;
    case Type::ncfe:
      std::snprintf(buf, sizeof(buf), "ncfe beta=%g", beta);
      break;
    case Type::mfe:
      std::snprintf(buf, sizeof(buf), "mfe");
      break;
    case Type::two_point:
      std::snprintf(buf, sizeof(buf), "two-point");
      break;
    case Type::random_u:
      std::snprintf(buf, sizeof(buf), "random-u seed=%llu scale=%g",
                    static_cast<unsigned long long>(seed), scale);
      break;
  }
  return buf;
}

Mesh apply_point_policy(const Mesh& mesh, const SchemeConfig& config) {
  switch (config.points) {
    case PointPolicy::from_mesh:
      return mesh;
    case PointPolicy::centroid: {
      std::vector<Vec2> pts(mesh.n_cells());
      for (int c = 0; c < mesh.n_cells(); ++c) pts[c] = mesh.cell(c).centroid;
      return mesh.with_cell_points(pts);
    }
    case PointPolicy::custom:
      if (static_cast<int>(config.custom_points.size()) != mesh.n_cells())
        throw ParameterError("custom point list size does not match cell count");
      return mesh.with_cell_points(config.custom_points);
    case PointPolicy::super_admissible: {
      std::vector<Vec2> pts(mesh.n_cells());
      for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto found = super_admissible_point(mesh, c);
        if (!found)
          throw ParameterError("cell " + std::to_string(c) + " has no super-admissible point");
        pts[c] = found->first;
      }
      return mesh.with_cell_points(pts);
    }
  }
  throw ParameterError("unknown point policy");
}

namespace {

double isotropic_value(const Mat2& lambda, int cell) {
  const double scale = lambda.cwiseAbs().maxCoeff();
  if (std::abs(lambda(0, 1)) > 1e-12 * scale ||
      std::abs(lambda(0, 0) - lambda(1, 1)) > 1e-12 * scale)
    throw ParameterError("two-point preset requires an isotropic tensor (cell " +
                         std::to_string(cell) + ")");
  return lambda(0, 0);
}

CellStabilization preset_stab(const StabilizationPreset& preset, const Mesh& mesh, int c,
                              const Mat2& lambda) {
  const Cell& cell = mesh.cell(c);
  const int k = cell.n_edges();
  using Type = StabilizationPreset::Type;

  switch (preset.type) {
    case Type::hybrid_diagonal:
    case Type::two_point: {
      if (preset.type == Type::hybrid_diagonal && !(preset.alpha > 0.0))
        throw ParameterError("hybrid-diagonal preset requires alpha > 0");
      const double alpha =
          preset.type == Type::two_point ? isotropic_value(lambda, c) : preset.alpha;
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        const Edge& edge = mesh.edge(cell.edge_ids[i]);
        B(i, i) = alpha * edge.length / edge.side_of(c).distance;
      }
      return {StabKind::hybrid_b, B};
    }
    case Type::ncfe: {
      if (!(preset.beta > 0.0)) throw ParameterError("ncfe preset requires beta > 0");
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        const Edge& edge = mesh.edge(cell.edge_ids[i]);
        const EdgeSide& side = edge.side_of(c);
        B(i, i) = edge.length * preset.beta * preset.beta / (2.0 * side.distance) *
                  side.normal.dot(lambda * side.normal);
      }
      return {StabKind::hybrid_b, B};
    }
    case Type::mfe: {
      const Mat2 lambda_inv = lambda.inverse();
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        const Edge& edge = mesh.edge(cell.edge_ids[i]);
        const double d = edge.side_of(c).distance;
        const Vec2& a = mesh.vertex(edge.endpoint_ids[0]);
        const Vec2& b = mesh.vertex(edge.endpoint_ids[1]);
        const QuadratureRule rule = triangle_quadrature(cell.point, a, b, 2);
        B(i, i) = integrate(rule, [&](const Vec2& x) {
          const Vec2 r = (x - cell.point) / d;
          return r.dot(lambda_inv * r);
        });
      }
      return {StabKind::mixed_b, B};
    }
    case Type::random_u: {
      SplitMix64 rng(preset.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(c) + 1)));
      const int m = k - 2;
      Eigen::MatrixXd A(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
      Eigen::MatrixXd U = A * A.transpose();
      U += (0.25 * U.trace() / m + 0.05) * Eigen::MatrixXd::Identity(m, m);
      U *= preset.scale;
      return {StabKind::mimetic_u, U};
    }
    case Type::mixed_strong:
      throw ParameterError("mixed-strong has no matrix parameterization");
  }
  throw ParameterError("unknown stabilization preset");
}

}  // namespace

std::vector<CellStabilization> materialize_stabilization(const Mesh& mesh,
                                                         const DiffusionField& lambda,
                                                         const SchemeConfig& config) {
  if (!config.preset) {
    if (static_cast<int>(config.cell_stab.size()) != mesh.n_cells())
      throw ParameterError("per-cell stabilization list does not match the cell count");
    return config.cell_stab;
  }
  if (config.preset->type == StabilizationPreset::Type::mixed_strong) return {};
  std::vector<CellStabilization> stabs(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c)
    stabs[c] = preset_stab(*config.preset, mesh, c, lambda.tensor(c));
  return stabs;
}

BarycentricWeights barycentric_weights(const Mesh& mesh, int edge_id) {
  const Edge& edge = mesh.edge(edge_id);
  if (edge.is_boundary()) throw CondensationError("cannot condense a boundary edge");
  const int K = edge.side[0].cell;
  const int L = edge.side[1].cell;
  const Vec2& xK = mesh.cell(K).point;
  const Vec2& xL = mesh.cell(L).point;
  const Vec2& xs = edge.midpoint;

  const double scale = std::max((xL - xK).norm(), edge.length);
  if ((xs - xK).norm() <= 1e-12 * scale) return {{K}, {1.0}};
  if ((xs - xL).norm() <= 1e-12 * scale) return {{L}, {1.0}};

  const Vec2 seg = xL - xK;
  const double len2 = seg.squaredNorm();
  const double t = (xs - xK).dot(seg) / len2;
  const double off_line = std::abs(cross2(xs - xK, seg)) / std::sqrt(len2);
  if (off_line <= 1e-12 * std::sqrt(len2) && t >= -1e-12 && t <= 1.0 + 1e-12)
    return {{K, L}, {1.0 - t, t}};

  // third point: nearest cell center completing a simplex that contains xs
  std::vector<std::pair<double, int>> candidates;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    if (c == K || c == L) continue;
    candidates.emplace_back((mesh.cell(c).point - xs).norm(), c);
  }
  std::sort(candidates.begin(), candidates.end());
  const int tries = std::min<std::size_t>(8, candidates.size());
  for (int m = 0; m < tries; ++m) {
    const int M = candidates[m].second;
    const Vec2& xM = mesh.cell(M).point;
    const double det = cross2(xK - xM, xL - xM);
    if (std::abs(det) <= 1e-14 * scale * scale) continue;
    const Vec2 r = xs - xM;
    const double a = cross2(r, xL - xM) / det;
    const double b = cross2(xK - xM, r) / det;
    const double c = 1.0 - a - b;
    if (a >= -1e-12 && b >= -1e-12 && c >= -1e-12) return {{K, L, M}, {a, b, c}};
  }
  throw CondensationError("no containing simplex among the 8 nearest cell centers for edge " +
                          std::to_string(edge_id) + "; drop it from the condensation set");
}

namespace {

struct LocalBuild {
  Eigen::MatrixXd A;  // (1+k) x (1+k) on (p_K, p_sigma...)
  Eigen::MatrixXd W;  // k x k inverse inner product, for flux recovery
};

Eigen::MatrixXd difference_map(const LocalOperators& ops) {
  // Z p_loc = (|sigma| (p_K - p_sigma))_sigma
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(ops.k, 1 + ops.k);
  for (int i = 0; i < ops.k; ++i) {
    Z(i, 0) = ops.edge_length(i);
    Z(i, 1 + i) = -ops.edge_length(i);
  }
  return Z;
}

LocalBuild build_hybrid_cell(const LocalOperators& ops, const CellStabilization& stab) {
  const CellStabilization hb = convert_stabilization(ops, stab, StabKind::hybrid_b);

  // gradient and residual maps on (p_K, p_sigma...)
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2, 1 + ops.k);
  for (int i = 0; i < ops.k; ++i) {
    const Vec2 col = ops.edge_length(i) * ops.normals.row(i).transpose() / ops.area;
    G.col(1 + i) = col;
    G.col(0) -= col;
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ops.k, 1 + ops.k);
  for (int i = 0; i < ops.k; ++i) {
    S(i, 0) = -1.0;
    S(i, 1 + i) = 1.0;
  }
  S -= ops.offsets * G;

  LocalBuild out;
  out.A = ops.area * G.transpose() * ops.lambda * G + S.transpose() * hb.matrix * S;
  out.A = 0.5 * (out.A + out.A.transpose()).eval();

  const Eigen::MatrixXd Ut =
      ops.D.transpose() * ops.L.transpose() * hb.matrix * ops.L * ops.D;
  out.W = make_W(ops, ops.D, 0.5 * (Ut + Ut.transpose()));
  return out;
}

LocalBuild build_mimetic_cell(const LocalOperators& ops, const CellStabilization& stab) {
  const CellStabilization mu = convert_stabilization(ops, stab, StabKind::mimetic_u);
  LocalBuild out;
  out.W = matrix_W(ops, mu);
  const Eigen::MatrixXd Z = difference_map(ops);
  out.A = Z.transpose() * out.W * Z;
  out.A = 0.5 * (out.A + out.A.transpose()).eval();
  return out;
}

LocalBuild build_mixed_cell(const LocalOperators& ops, const CellStabilization& stab) {
  const CellStabilization mb = convert_stabilization(ops, stab, StabKind::mixed_b);
  Eigen::MatrixXd M = ops.R * ops.lambda.inverse() * ops.R.transpose() / ops.area +
                      ops.T.transpose() * mb.matrix * ops.T;
  M = 0.5 * (M + M.transpose()).eval();

  LocalBuild out;
  out.W = M.llt().solve(Eigen::MatrixXd::Identity(ops.k, ops.k));
  out.W = 0.5 * (out.W + out.W.transpose()).eval();
  const Eigen::MatrixXd Z = difference_map(ops);
  out.A = Z.transpose() * out.W * Z;
  out.A = 0.5 * (out.A + out.A.transpose()).eval();
  return out;
}

LocalBuild build_mixed_strong_cell(const LocalOperators& ops, double nu) {
  if (!(nu > 0.0)) throw ParameterError("mixed-strong preset requires nu > 0");
  Eigen::MatrixXd M = ops.R * ops.lambda.inverse() * ops.R.transpose() / ops.area;
  for (int i = 0; i < ops.k; ++i) M(i, i) += nu * ops.diameter * ops.edge_length(i);
  M = 0.5 * (M + M.transpose()).eval();

  LocalBuild out;
  out.W = M.llt().solve(Eigen::MatrixXd::Identity(ops.k, ops.k));
  out.W = 0.5 * (out.W + out.W.transpose()).eval();
  const Eigen::MatrixXd Z = difference_map(ops);
  out.A = Z.transpose() * out.W * Z;
  out.A = 0.5 * (out.A + out.A.transpose()).eval();
  return out;
}

struct DofExpansion {
  bool fixed = false;
  double fixed_value = 0.0;
  std::vector<std::pair<int, double>> terms;  // (unknown index, weight)
};

GlobalSystem assemble_impl(const Mesh& mesh, const DiffusionField& lambda,
                           const SchemeConfig& config, const SourceFn& source,
                           const std::vector<double>& boundary_values) {
  const int nc = mesh.n_cells();
  const int ne = mesh.n_edges();
  if (static_cast<int>(lambda.cell_tensor.size()) != nc)
    throw ParameterError("diffusion field does not match the mesh");
  if (!boundary_values.empty() && static_cast<int>(boundary_values.size()) != ne)
    throw ParameterError("boundary value list must have one entry per edge");

  GlobalSystem sys;
  sys.formulation = config.formulation;
  sys.n_cells = nc;
  sys.outside_family =
      config.preset && config.preset->type == StabilizationPreset::Type::mixed_strong;

  // condensation set
  std::vector<bool> condensed(ne, false);
  if (config.condense == CondenseMode::all) {
    for (int e : mesh.interior_edges()) condensed[e] = true;
  } else if (config.condense == CondenseMode::list) {
    for (int e : config.condense_list) {
      if (e < 0 || e >= ne || mesh.edge(e).is_boundary())
        throw CondensationError("condensation set must contain interior edges only");
      condensed[e] = true;
    }
  }

  // unknown numbering: cells first, then non-condensed interior edges by index
  sys.edge_unknown.assign(ne, kEdgeFixed);
  sys.fixed_edge_value = Eigen::VectorXd::Zero(ne);
  sys.condensation.resize(ne);
  int next_unknown = nc;
  for (int e = 0; e < ne; ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.is_boundary()) {
      sys.edge_unknown[e] = kEdgeFixed;
      sys.fixed_edge_value(e) = boundary_values.empty() ? 0.0 : boundary_values[e];
    } else if (condensed[e]) {
      sys.edge_unknown[e] = kEdgeCondensed;
      sys.condensation[e] = barycentric_weights(mesh, e);
    } else {
      sys.edge_unknown[e] = next_unknown++;
    }
  }
  sys.n_edge_unknowns = next_unknown - nc;
  const int n = sys.total_unknowns();

  std::vector<DofExpansion> edge_expansion(ne);
  for (int e = 0; e < ne; ++e) {
    DofExpansion& exp = edge_expansion[e];
    if (sys.edge_unknown[e] == kEdgeFixed) {
      exp.fixed = true;
      exp.fixed_value = sys.fixed_edge_value(e);
    } else if (sys.edge_unknown[e] == kEdgeCondensed) {
      const BarycentricWeights& bw = sys.condensation[e];
      for (std::size_t i = 0; i < bw.cells.size(); ++i)
        exp.terms.emplace_back(bw.cells[i], bw.weights[i]);
    } else {
      exp.terms.emplace_back(sys.edge_unknown[e], 1.0);
    }
  }

  // per-cell matrices (pure, parallel); scatter is serial in cell order
  const std::vector<CellStabilization> stabs = materialize_stabilization(mesh, lambda, config);
  std::vector<LocalBuild> locals(nc);
  std::vector<double> cell_rhs(nc);
  parallel_cells(nc, [&](int c) {
    const LocalOperators ops = build_local_operators(mesh, c, lambda.tensor(c));
    if (sys.outside_family) {
      locals[c] = build_mixed_strong_cell(ops, config.preset->nu);
    } else {
      switch (config.formulation) {
        case Formulation::hybrid: locals[c] = build_hybrid_cell(ops, stabs[c]); break;
        case Formulation::mimetic: locals[c] = build_mimetic_cell(ops, stabs[c]); break;
        case Formulation::mixed: locals[c] = build_mixed_cell(ops, stabs[c]); break;
      }
    }
    cell_rhs[c] = source ? integrate(mesh.cell_quadrature(c, 5), source) : 0.0;
  });

  std::vector<Triplet> triplets;
  sys.b = Eigen::VectorXd::Zero(n);
  sys.flux_W.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const Cell& cell = mesh.cell(c);
    const int k = cell.n_edges();
    const Eigen::MatrixXd& A = locals[c].A;
    sys.flux_W[c] = std::move(locals[c].W);
    sys.b(c) += cell_rhs[c];

    // local dof 0 is the cell, 1+i the i-th edge
    std::vector<const DofExpansion*> exp(1 + k);
    DofExpansion cell_exp;
    cell_exp.terms.emplace_back(c, 1.0);
    exp[0] = &cell_exp;
    for (int i = 0; i < k; ++i) exp[1 + i] = &edge_expansion[cell.edge_ids[i]];

    for (int i = 0; i <= k; ++i) {
      if (exp[i]->fixed) continue;  // no equation for fixed dofs
      for (int j = 0; j <= k; ++j) {
        const double v = A(i, j);
        if (v == 0.0) continue;
        if (exp[j]->fixed) {
          for (const auto& [gi, wi] : exp[i]->terms) sys.b(gi) -= wi * v * exp[j]->fixed_value;
          continue;
        }
        for (const auto& [gi, wi] : exp[i]->terms)
          for (const auto& [gj, wj] : exp[j]->terms)
            if (gi >= gj) triplets.push_back({gi, gj, wi * wj * v});
      }
    }
  }

  sys.A = SparseSymmetric::from_triplets(n, std::move(triplets), 1e-14);
  return sys;
}

}  // namespace

GlobalSystem assemble(const Mesh& mesh, const DiffusionField& lambda, const SchemeConfig& config,
                      const SourceFn& source, const std::vector<double>& boundary_values) {
  return assemble_impl(mesh, lambda, config, source, boundary_values);
}

GlobalSystem assemble_hybrid(const Mesh& mesh, const DiffusionField& lambda,
                             const SchemeConfig& config, const SourceFn& source,
                             const std::vector<double>& boundary_values) {
  SchemeConfig cfg = config;
  cfg.formulation = Formulation::hybrid;
  return assemble_impl(mesh, lambda, cfg, source, boundary_values);
}

GlobalSystem assemble_mimetic(const Mesh& mesh, const DiffusionField& lambda,
                              const SchemeConfig& config, const SourceFn& source,
                              const std::vector<double>& boundary_values) {
  SchemeConfig cfg = config;
  cfg.formulation = Formulation::mimetic;
  return assemble_impl(mesh, lambda, cfg, source, boundary_values);
}

GlobalSystem assemble_mixed(const Mesh& mesh, const DiffusionField& lambda,
                            const SchemeConfig& config, const SourceFn& source,
                            const std::vector<double>& boundary_values) {
  SchemeConfig cfg = config;
  cfg.formulation = Formulation::mixed;
  return assemble_impl(mesh, lambda, cfg, source, boundary_values);
}

DiscreteSolution solve_scheme(const Mesh& mesh, const GlobalSystem& system, double tol,
                              int max_iter) {
  SolveStats stats;
  const Eigen::VectorXd x = solve_spd(system.A, system.b, tol, max_iter, &stats);

  DiscreteSolution sol;
  sol.iterations = stats.iterations;
  sol.residual = stats.relative_residual;
  sol.p_cell = x.head(system.n_cells);
  sol.p_edge = Eigen::VectorXd::Zero(mesh.n_edges());
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const int u = system.edge_unknown[e];
    if (u >= 0) {
      sol.p_edge(e) = x(u);
    } else if (u == kEdgeCondensed) {
      double v = 0.0;
      const BarycentricWeights& bw = system.condensation[e];
      for (std::size_t i = 0; i < bw.cells.size(); ++i)
        v += bw.weights[i] * sol.p_cell(bw.cells[i]);
      sol.p_edge(e) = v;
    } else {
      sol.p_edge(e) = system.fixed_edge_value(e);
    }
  }
  sol.flux = recover_fluxes(mesh, system.flux_W, sol.p_cell, sol.p_edge);
  return sol;
}

double max_conservativity_residual(const Mesh& mesh, const GlobalSystem& system,
                                   const DiscreteSolution& solution) {
  double worst = 0.0;
  for (int e : mesh.interior_edges()) {
    if (system.edge_unknown[e] == kEdgeCondensed) continue;
    const Edge& edge = mesh.edge(e);
    double sum = 0.0;
    for (const EdgeSide& side : edge.side) {
      const Cell& cell = mesh.cell(side.cell);
      for (int i = 0; i < cell.n_edges(); ++i)
        if (cell.edge_ids[i] == e) sum += solution.flux[side.cell](i);
    }
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

double max_flux_balance_residual(const Mesh& mesh, const DiscreteSolution& solution,
                                 const SourceFn& source) {
  double worst = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    double sum = 0.0;
    for (int i = 0; i < cell.n_edges(); ++i)
      sum += mesh.edge(cell.edge_ids[i]).length * solution.flux[c](i);
    const double rhs = source ? integrate(mesh.cell_quadrature(c, 5), source) : 0.0;
    worst = std::max(worst, std::abs(sum - rhs));
  }
  return worst;
}

double EquivalenceReport::max_deviation() const {
  return std::max(std::max(matrix_deviation, rhs_deviation),
                  std::max(p_deviation, flux_deviation));
}

namespace {

double matrix_deviation(const SparseSymmetric& A, const SparseSymmetric& B) {
  const double scale = std::max({A.max_abs(), B.max_abs(), 1e-300});
  double dev = 0.0;
  for (int i = 0; i < A.size(); ++i) {
    const auto ra = A.row_lower(i);
    const auto rb = B.row_lower(i);
    std::size_t ia = 0, ib = 0;
    while (ia < ra.size() || ib < rb.size()) {
      if (ib == rb.size() || (ia < ra.size() && ra[ia].first < rb[ib].first)) {
        dev = std::max(dev, std::abs(ra[ia].second));
        ++ia;
      } else if (ia == ra.size() || rb[ib].first < ra[ia].first) {
        dev = std::max(dev, std::abs(rb[ib].second));
        ++ib;
      } else {
        dev = std::max(dev, std::abs(ra[ia].second - rb[ib].second));
        ++ia;
        ++ib;
      }
    }
  }
  return dev / scale;
}

double vector_deviation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1.0});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

EquivalenceReport equivalence_report(const Mesh& mesh, const DiffusionField& lambda,
                                     const SchemeConfig& config, const SourceFn& source) {
  EquivalenceReport report;
  if (config.preset && config.preset->type == StabilizationPreset::Type::mixed_strong) {
    report.outside_family = true;
    return report;
  }

  const Mesh meshp = apply_point_policy(mesh, config);
  SchemeConfig base = config;
  base.points = PointPolicy::from_mesh;
  base.cell_stab = materialize_stabilization(meshp, lambda, config);
  base.preset.reset();

  const Formulation forms[3] = {Formulation::hybrid, Formulation::mimetic, Formulation::mixed};
  std::vector<GlobalSystem> systems;
  std::vector<DiscreteSolution> solutions;
  for (Formulation f : forms) {
    SchemeConfig cfg = base;
    cfg.formulation = f;
    systems.push_back(assemble(meshp, lambda, cfg, source));
    solutions.push_back(solve_scheme(meshp, systems.back(), 1e-13));
  }

  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      report.matrix_deviation =
          std::max(report.matrix_deviation, matrix_deviation(systems[a].A, systems[b].A));
      report.rhs_deviation =
          std::max(report.rhs_deviation, vector_deviation(systems[a].b, systems[b].b));
      report.p_deviation = std::max(
          {report.p_deviation, vector_deviation(solutions[a].p_cell, solutions[b].p_cell),
           vector_deviation(solutions[a].p_edge, solutions[b].p_edge)});
      for (int c = 0; c < mesh.n_cells(); ++c)
        report.flux_deviation = std::max(
            report.flux_deviation, vector_deviation(solutions[a].flux[c], solutions[b].flux[c]));
    }
  }
  return report;
}

}  // namespace hmmf
