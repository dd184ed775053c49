#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hmmf/cli.hpp"
#include "hmmf/rng.hpp"

namespace hmmf {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}

DiffusionField make_field(const FileConfig& cfg, const Mesh& mesh) {
  const bool is_case = cfg.source.rfind("case-", 0) == 0;
  if (cfg.tensor_mode == "case" && is_case)
    return DiffusionField::from_function(mesh, manufactured_case(cfg.source).lambda);
  return DiffusionField::constant(mesh, cfg.tensor);
}

SourceFn make_source(const FileConfig& cfg) {
  if (cfg.source == "zero") return [](const Vec2&) { return 0.0; };
  if (cfg.source == "one") return [](const Vec2&) { return 1.0; };
  return manufactured_case(cfg.source).f;
}

std::string formulation_name(Formulation f) {
  switch (f) {
    case Formulation::hybrid: return "hybrid";
    case Formulation::mimetic: return "mimetic";
    case Formulation::mixed: return "mixed";
  }
  return "?";
}

double effective_tol(const RunManifest& manifest, const FileConfig& cfg) {
  return manifest.tol > 0.0 ? manifest.tol : cfg.tol;
}

}  // namespace

int cmd_solve(const RunManifest& manifest) {
  const FileConfig cfg = parse_config_file(manifest.config_path);
  const Mesh mesh = apply_point_policy(mesh_from_spec(manifest.mesh_spec), cfg.scheme);
  SchemeConfig scheme = cfg.scheme;
  scheme.points = PointPolicy::from_mesh;

  const DiffusionField lambda = make_field(cfg, mesh);
  const SourceFn source = make_source(cfg);
  const GlobalSystem system = assemble(mesh, lambda, scheme, source);
  const DiscreteSolution sol = solve_scheme(mesh, system, effective_tol(manifest, cfg));

  std::ofstream csv = open_output(manifest.out_dir, "solution.csv");
  csv << "# cells: id,xK,yK,pK\n";
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Vec2& x = mesh.cell(c).point;
    csv << "cell," << c << ',' << fmt17(x.x()) << ',' << fmt17(x.y()) << ','
        << fmt17(sol.p_cell(c)) << '\n';
  }
  csv << "# edges: id,xmid,ymid,psigma\n";
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const Vec2& x = mesh.edge(e).midpoint;
    csv << "edge," << e << ',' << fmt17(x.x()) << ',' << fmt17(x.y()) << ','
        << fmt17(sol.p_edge(e)) << '\n';
  }
  csv << "# fluxes: cell,local,edge,F\n";
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int i = 0; i < cell.n_edges(); ++i)
      csv << "flux," << c << ',' << i << ',' << cell.edge_ids[i] << ',' << fmt17(sol.flux[c](i))
          << '\n';
  }

  std::ofstream summary = open_output(manifest.out_dir, "summary.txt");
  summary << "command: solve\n";
  summary << "mesh: cells=" << mesh.n_cells() << " edges=" << mesh.n_edges()
          << " interior=" << mesh.interior_edges().size()
          << " boundary=" << mesh.boundary_edges().size() << " h=" << fmt17(mesh.max_diameter())
          << " theta=" << fmt17(regularity(mesh)) << '\n';
  summary << "formulation: " << formulation_name(scheme.formulation) << '\n';
  summary << "stabilization: "
          << (scheme.preset ? scheme.preset->describe() : std::string("matrix-file")) << '\n';
  summary << "outside_family: " << (system.outside_family ? "true" : "false") << '\n';
  summary << "unknowns: cells=" << system.n_cells << " edges=" << system.n_edge_unknowns
          << " total=" << system.total_unknowns() << '\n';
  summary << "solver: iterations=" << sol.iterations
          << " relative_residual=" << fmt17(sol.residual) << '\n';
  summary << "conservativity_residual: "
          << fmt17(max_conservativity_residual(mesh, system, sol)) << '\n';
  summary << "flux_balance_residual: " << fmt17(max_flux_balance_residual(mesh, sol, source))
          << (scheme.condense != CondenseMode::none ? " # condensed run, balance not enforced"
                                                    : "")
          << '\n';
  return 0;
}

namespace {

EquivalenceReport equivalence_mismatch_control(const Mesh& mesh, const DiffusionField& lambda,
                                               const SchemeConfig& config,
                                               const SourceFn& source) {
  // Negative control: each formulation keeps an identity stabilization in
  // its own parameterization, so the assemblies do not correspond.
  EquivalenceReport report;
  std::vector<GlobalSystem> systems;
  std::vector<DiscreteSolution> solutions;
  const Formulation forms[3] = {Formulation::hybrid, Formulation::mimetic, Formulation::mixed};
  const StabKind kinds[3] = {StabKind::hybrid_b, StabKind::mimetic_u, StabKind::mixed_b};
  for (int f = 0; f < 3; ++f) {
    SchemeConfig cfg = config;
    cfg.formulation = forms[f];
    cfg.preset.reset();
    cfg.cell_stab.clear();
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const int k = mesh.cell(c).n_edges();
      const int m = kinds[f] == StabKind::mimetic_u ? k - 2 : k;
      cfg.cell_stab.push_back({kinds[f], Eigen::MatrixXd::Identity(m, m)});
    }
    systems.push_back(assemble(mesh, lambda, cfg, source));
    solutions.push_back(solve_scheme(mesh, systems.back(), 1e-13));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const Eigen::MatrixXd da = systems[a].A.dense();
      const Eigen::MatrixXd db = systems[b].A.dense();
      const double scale = std::max({da.cwiseAbs().maxCoeff(), db.cwiseAbs().maxCoeff(), 1e-300});
      report.matrix_deviation =
          std::max(report.matrix_deviation, (da - db).cwiseAbs().maxCoeff() / scale);
      report.p_deviation = std::max(
          report.p_deviation, (solutions[a].p_cell - solutions[b].p_cell).cwiseAbs().maxCoeff());
    }
  return report;
}

}  // namespace

int cmd_equivalence(const RunManifest& manifest) {
  const FileConfig cfg = parse_config_file(manifest.config_path);
  const Mesh mesh = apply_point_policy(mesh_from_spec(manifest.mesh_spec), cfg.scheme);
  SchemeConfig scheme = cfg.scheme;
  scheme.points = PointPolicy::from_mesh;
  const DiffusionField lambda = make_field(cfg, mesh);
  const SourceFn source = make_source(cfg);

  const EquivalenceReport report =
      cfg.equivalence_convert ? equivalence_report(mesh, lambda, scheme, source)
                              : equivalence_mismatch_control(mesh, lambda, scheme, source);

  std::ofstream out = open_output(manifest.out_dir, "equivalence.txt");
  out << "converted: " << (cfg.equivalence_convert ? "true" : "false") << '\n';
  if (report.outside_family) {
    out << "outside_family: true  # mixed-strong stabilization, no deviation computed\n";
    return 0;
  }
  out << "outside_family: false\n";
  out << "matrix_deviation: " << fmt17(report.matrix_deviation) << '\n';
  out << "rhs_deviation: " << fmt17(report.rhs_deviation) << '\n';
  out << "p_deviation: " << fmt17(report.p_deviation) << '\n';
  out << "flux_deviation: " << fmt17(report.flux_deviation) << '\n';
  return report.max_deviation() <= 1e-9 ? 0 : 4;
}

int cmd_two_point(const RunManifest& manifest) {
  FileConfig cfg = parse_config_file(manifest.config_path);
  if (!cfg.preset_set) {
    cfg.scheme.preset = StabilizationPreset{};
    cfg.scheme.preset->type = StabilizationPreset::Type::two_point;
  }
  if (!cfg.points_set) cfg.scheme.points = PointPolicy::super_admissible;

  const Mesh mesh = apply_point_policy(mesh_from_spec(manifest.mesh_spec), cfg.scheme);
  SchemeConfig scheme = cfg.scheme;
  scheme.points = PointPolicy::from_mesh;
  const DiffusionField lambda = make_field(cfg, mesh);
  const SourceFn source = make_source(cfg);

  const GlobalSystem system = assemble(mesh, lambda, scheme, source);
  const DiscreteSolution sol = solve_scheme(mesh, system, effective_tol(manifest, cfg));
  const TwoPointReport report = two_point_verify(mesh, lambda, sol);

  std::ofstream out = open_output(manifest.out_dir, "two_point.txt");
  out << "applicable: " << (report.applicable ? "true" : "false") << '\n';
  if (!report.applicable) {
    out << "reason: " << report.reason << '\n';
    return 4;
  }
  out << "max_flux_deviation: " << fmt17(report.max_flux_deviation) << '\n';
  out << "max_edge_relation_deviation: " << fmt17(report.max_edge_relation_deviation) << '\n';
  return std::max(report.max_flux_deviation, report.max_edge_relation_deviation) <= 1e-11 ? 0 : 4;
}

int cmd_lifting(const RunManifest& manifest) {
  const FileConfig cfg = parse_config_file(manifest.config_path);
  const Mesh mesh = apply_point_policy(mesh_from_spec(manifest.mesh_spec), cfg.scheme);
  const DiffusionField lambda = make_field(cfg, mesh);

  double trace_dev = 0.0;       // normal traces against the edge fluxes
  double moment_dev = 0.0;      // affine moment identity with the weight
  double constant_dev = 0.0;    // reproduction of constant fields
  double inner_product_dev = 0.0;
  double cone_moment_dev = 0.0;

  SplitMix64 rng(cfg.mesh_seed ^ 0x5bf03635ULL);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Cell& cell = mesh.cell(c);
    const int k = cell.n_edges();
    const Mat2& lam = lambda.tensor(c);
    Eigen::VectorXd F(k), G(k);
    for (int i = 0; i < k; ++i) {
      F(i) = rng.uniform(-1.0, 1.0);
      G(i) = rng.uniform(-1.0, 1.0);
    }
    const double scale = std::max(1.0, F.cwiseAbs().maxCoeff());
    const LiftedFlux lifted(mesh, c, lam, F);
    const LocalOperators ops = build_local_operators(mesh, c, lam);
    const WeightFunction w = weight_function(mesh, c);

    for (int i = 0; i < k; ++i) {
      const Edge& edge = mesh.edge(cell.edge_ids[i]);
      const Vec2& a = mesh.vertex(edge.endpoint_ids[0]);
      const Vec2& b = mesh.vertex(edge.endpoint_ids[1]);
      const Vec2 n = edge.side_of(c).normal;
      for (const auto& node : segment_quadrature(a, b, 3))
        trace_dev = std::max(
            trace_dev, std::abs(lifted.value(node.x).dot(n) - F(i)) / scale);
    }

    const double div_sum = (ops.edge_length.array() * F.array()).sum() / ops.area;
    for (int q = 0; q < 3; ++q) {
      auto affine = [q](const Vec2& x) { return q == 0 ? 1.0 : (q == 1 ? x.x() : x.y()); };
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < k; ++i) {
        const Edge& edge = mesh.edge(cell.edge_ids[i]);
        const Vec2& a = mesh.vertex(edge.endpoint_ids[0]);
        const Vec2& b = mesh.vertex(edge.endpoint_ids[1]);
        const QuadratureRule rule = triangle_quadrature(cell.point, a, b, 2);
        lhs += lifted.divergence(i) * integrate(rule, affine);
        rhs += div_sum * integrate(rule, [&](const Vec2& x) { return affine(x) * w(x); });
      }
      moment_dev = std::max(moment_dev, std::abs(lhs - rhs) / scale);
    }

    const Vec2 e(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    Eigen::VectorXd Fe(k);
    for (int i = 0; i < k; ++i) Fe(i) = e.dot(ops.normals.row(i));
    const LiftedFlux lifted_const(mesh, c, lam, Fe);
    for (int i = 0; i < k; ++i) {
      const Vec2 probe = cell.point + 0.5 * (mesh.edge(cell.edge_ids[i]).midpoint - cell.point);
      constant_dev = std::max(constant_dev,
                              (lifted_const.value(probe) - e).norm() / std::max(1.0, e.norm()));
    }

    const double q1 = mfe_inner_product_quadrature(mesh, c, lam, F, G);
    const double q2 = mfe_inner_product_closed_form(mesh, c, lam, F, G);
    inner_product_dev =
        std::max(inner_product_dev, std::abs(q1 - q2) / std::max(1.0, std::abs(q1)));

    const Eigen::VectorXd T = T_operator(ops, F);
    Vec2 cone_moment = Vec2::Zero();
    for (int i = 0; i < k; ++i)
      cone_moment += T(i) * ops.edge_length(i) * ops.offsets.row(i).transpose() / 3.0;
    cone_moment_dev = std::max(cone_moment_dev, cone_moment.norm() / scale);
  }

  std::ofstream out = open_output(manifest.out_dir, "lifting.txt");
  out << "normal_trace_deviation: " << fmt17(trace_dev) << '\n';
  out << "affine_moment_deviation: " << fmt17(moment_dev) << '\n';
  out << "constant_field_deviation: " << fmt17(constant_dev) << '\n';
  out << "inner_product_deviation: " << fmt17(inner_product_dev) << '\n';
  out << "cone_moment_deviation: " << fmt17(cone_moment_dev) << '\n';
  const bool ok = trace_dev <= 1e-12 && moment_dev <= 1e-12 && constant_dev <= 1e-12 &&
                  cone_moment_dev <= 1e-12 && inner_product_dev <= 1e-11;
  return ok ? 0 : 4;
}

int cmd_convergence(const RunManifest& manifest) {
  const FileConfig cfg = parse_config_file(manifest.config_path);
  if (cfg.family.size() < 3) throw ConfigError("need >= 3 meshes in the convergence family");
  if (cfg.source.rfind("case-", 0) != 0)
    throw ConfigError("convergence runs need a manufactured case source");

  std::vector<Mesh> family;
  for (int n : cfg.family) {
    if (cfg.amplitude == 0.0)
      family.push_back(build_cartesian(n, n, Vec2(0, 0), Vec2(1, 1)));
    else
      family.push_back(
          build_perturbed_quads(n, n, Vec2(0, 0), Vec2(1, 1), cfg.amplitude, cfg.mesh_seed));
  }

  const ManufacturedCase mcase = manufactured_case(cfg.source);
  const ConvergenceReport report =
      errors_and_orders(mcase, family, cfg.scheme, effective_tol(manifest, cfg));

  std::ofstream out = open_output(manifest.out_dir, "report.csv");
  write_csv(report, out);

  const bool perturbed_or_condensed = cfg.amplitude > 0.0 || report.condensed;
  const double need_p = cfg.threshold_p.value_or(perturbed_or_condensed ? 1.7 : 1.8);
  const double need_f = cfg.threshold_flux.value_or(0.9);
  const ConvergenceRow& last = report.rows.back();
  const bool ok_p = last.exact_p || (last.order_p && *last.order_p >= need_p);
  const bool ok_f = last.exact_flux || (last.order_flux && *last.order_flux >= need_f);
  return ok_p && ok_f ? 0 : 5;
}

int run_manifest(const RunManifest& manifest) {
  try {
    if (manifest.command == "solve") return cmd_solve(manifest);
    if (manifest.command == "equivalence") return cmd_equivalence(manifest);
    if (manifest.command == "two-point") return cmd_two_point(manifest);
    if (manifest.command == "lifting") return cmd_lifting(manifest);
    if (manifest.command == "convergence") return cmd_convergence(manifest);
    std::fprintf(stderr, "error: unknown command '%s'\n", manifest.command.c_str());
    return 1;
  } catch (const NonConvergenceError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const NotSpdError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const ParseError& err) {
    std::fprintf(stderr, "mesh error: %s\n", err.what());
    return 3;
  } catch (const InvalidGeometryError& err) {
    std::fprintf(stderr, "mesh error: %s\n", err.what());
    return 3;
  } catch (const IllConditionedCellError& err) {
    std::fprintf(stderr, "mesh error: %s\n", err.what());
    return 3;
  } catch (const Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
}

}  // namespace hmmf
