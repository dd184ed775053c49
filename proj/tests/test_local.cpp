#include <doctest.h>

#include <cmath>

#include "hmmf/local.hpp"
#include "support.hpp"

using namespace hmmf;
using hmmf_tests::random_cell;
using hmmf_tests::random_spd;

namespace {

Mesh unit_square() { return build_cartesian(1, 1, Vec2(0, 0), Vec2(1, 1)); }

Mesh triangle() {
  return Mesh::from_polygons({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
}

}  // namespace

TEST_CASE("jacobi eigenvalues on known matrices") {
  Eigen::MatrixXd A(2, 2);
  A << 2, 1, 1, 2;
  const Eigen::VectorXd ev = jacobi_eigenvalues(A);
  CHECK(ev(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev(1) == doctest::Approx(3.0).epsilon(1e-12));

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 4);
  B.diagonal() << 4, 1, 3, 2;
  const Eigen::VectorXd evb = jacobi_eigenvalues(B);
  for (int i = 0; i < 4; ++i) CHECK(evb(i) == doctest::Approx(i + 1.0).epsilon(1e-14));
}

TEST_CASE("matrix R on the unit square") {
  const Mesh mesh = unit_square();
  const Eigen::MatrixXd R = matrix_R(mesh, 0);
  Eigen::MatrixXd expected(4, 2);
  expected << 0, -0.5, 0.5, 0, 0, 0.5, -0.5, 0;
  CHECK((R - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("matrix R is translation invariant") {
  const Mesh a = build_cartesian(1, 1, Vec2(0, 0), Vec2(1, 1));
  const Mesh b = build_cartesian(1, 1, Vec2(5, -3), Vec2(6, -2));
  CHECK((matrix_R(a, 0) - matrix_R(b, 0)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("matrix N columns on the unit square") {
  const Mesh mesh = unit_square();
  const Eigen::MatrixXd N = matrix_N(mesh, 0, Mat2::Identity());
  Eigen::VectorXd col0(4), col1(4);
  col0 << 0, 1, 0, -1;
  col1 << -1, 0, 1, 0;
  CHECK((N.col(0) - col0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((N.col(1) - col1).cwiseAbs().maxCoeff() <= 1e-14);

  Mat2 diag;
  diag << 2, 0, 0, 3;
  const Eigen::MatrixXd Nd = matrix_N(mesh, 0, diag);
  Eigen::VectorXd dcol0(4), dcol1(4);
  dcol0 << 0, 2, 0, -2;
  dcol1 << -3, 0, 3, 0;
  CHECK((Nd.col(0) - dcol0).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((Nd.col(1) - dcol1).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("R^T N = |K| Lambda on random cells") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Mat2 prod = ops.R.transpose() * ops.N;
    CHECK((prod - ops.area * rc.lambda).cwiseAbs().maxCoeff() <=
          1e-12 * ops.area * rc.lambda.cwiseAbs().maxCoeff());
    // full numerical rank of the co-normal matrix
    const Eigen::VectorXd ev = jacobi_eigenvalues(ops.N.transpose() * ops.N);
    CHECK(std::sqrt(ev(0)) > 1e-10 * std::sqrt(ev(1)));
  }
}

TEST_CASE("complement basis C on the unit square") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());
  // Im(C) must be span{(1,0,1,0),(0,1,0,1)}/sqrt(2)
  Eigen::VectorXd v(4), w(4);
  v << 1, 0, 1, 0;
  w << 0, 1, 0, 1;
  const Eigen::MatrixXd P = 0.5 * (v * v.transpose() + w * w.transpose());
  CHECK((ops.C * ops.C.transpose() - P).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((ops.C.transpose() * ops.C - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <=
        1e-13);
}

TEST_CASE("complement basis: defining properties on random cells") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
    CHECK((ops.C.transpose() * ops.N).cwiseAbs().maxCoeff() <=
          1e-13 * ops.N.cwiseAbs().maxCoeff());
    CHECK((ops.D.transpose() * ops.R).cwiseAbs().maxCoeff() <=
          1e-12 * ops.R.cwiseAbs().maxCoeff());
    CHECK((ops.C.transpose() * ops.C - Eigen::MatrixXd::Identity(ops.k - 2, ops.k - 2))
              .cwiseAbs()
              .maxCoeff() <= 1e-13);
  }
}

TEST_CASE("complement basis on a triangle is a single column") {
  const LocalOperators ops = build_local_operators(triangle(), 0, Mat2::Identity());
  CHECK(ops.C.rows() == 3);
  CHECK(ops.C.cols() == 1);
}

TEST_CASE("matrix M with zero stabilization on the unit square") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());
  const Eigen::MatrixXd M = matrix_M(ops, Eigen::MatrixXd::Zero(2, 2), true);
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 0, -1, 0, 0, 1, 0, -1, -1, 0, 1, 0, 0, -1, 0, 1;
  expected *= 0.25;
  CHECK((M - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(matrix_M(ops, Eigen::MatrixXd::Zero(2, 2)), ParameterError);
}

TEST_CASE("M N = R for random cells and stabilizations") {
  SplitMix64 rng(5150);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Eigen::MatrixXd U = random_spd(rng, ops.k - 2);
    const Eigen::MatrixXd M = matrix_M(ops, U);
    CHECK((M * ops.N - ops.R).cwiseAbs().maxCoeff() <= 1e-12 * ops.R.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("scalar stabilization adds u C C^T") {
  SplitMix64 rng(99);
  const auto rc = random_cell(rng, 5, 5);
  const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
  const double u = 2.75;
  const Eigen::MatrixXd M = matrix_M(ops, u * Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd consistency =
      ops.R * rc.lambda.inverse() * ops.R.transpose() / ops.area;
  CHECK((M - consistency - u * ops.C * ops.C.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * M.cwiseAbs().maxCoeff());
}

TEST_CASE("inverse inner product: range of the stabilization part") {
  SplitMix64 rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Eigen::MatrixXd U = random_spd(rng, ops.k - 2);
    const Eigen::MatrixXd M = matrix_M(ops, U);
    // independent route: direct dense inversion
    const Eigen::MatrixXd Minv = M.inverse();
    const Eigen::MatrixXd X =
        Minv - ops.N * rc.lambda.inverse() * ops.N.transpose() / ops.area;
    CHECK((ops.R.transpose() * X).cwiseAbs().maxCoeff() <=
          1e-10 * X.cwiseAbs().maxCoeff() * ops.R.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("W M = Id when built from corresponding parameters") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());
  const Eigen::MatrixXd U = 0.7 * Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd M = matrix_M(ops, U);
  const Eigen::MatrixXd W = matrix_W(ops, {StabKind::mimetic_u, U});
  CHECK((W * M - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);

  SplitMix64 rng(16180);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators rops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Eigen::MatrixXd rU = random_spd(rng, rops.k - 2);
    const Eigen::MatrixXd rM = matrix_M(rops, rU);
    const Eigen::MatrixXd rW = matrix_W(rops, {StabKind::mimetic_u, rU});
    CHECK((rW * rM - Eigen::MatrixXd::Identity(rops.k, rops.k)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("make_W rejects a complement that is not orthogonal to R") {
  // on a triangle Im(N)^perp differs from Im(R)^perp, so C is a wrong basis
  const LocalOperators ops = build_local_operators(triangle(), 0, Mat2::Identity());
  CHECK_THROWS_AS(make_W(ops, ops.C, Eigen::MatrixXd::Identity(1, 1)), ParameterError);
}

TEST_CASE("weight function: centroid point gives the constant weight") {
  const Mesh mesh = unit_square();  // centroid is the default point
  const WeightFunction w = weight_function(mesh, 0);
  CHECK(w.xi.norm() <= 1e-14);
  CHECK(w(Vec2(0.3, 0.9)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("weight function: closed form on the unit square") {
  const Mesh mesh = unit_square().with_cell_points({Vec2(0.6, 0.5)});
  const WeightFunction w = weight_function(mesh, 0);
  CHECK(w.xi.x() == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(std::abs(w.xi.y()) <= 1e-12);
}

TEST_CASE("weight function: moment identities on random cells") {
  SplitMix64 rng(14142);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rc = random_cell(rng);
    const Mesh& mesh = rc.mesh;
    const Cell& cell = mesh.cell(0);
    const WeightFunction w = weight_function(mesh, 0);
    const QuadratureRule rule = mesh.cell_quadrature(0, 2);
    const double mass = integrate(rule, [&](const Vec2& x) { return w(x); });
    const Vec2 first(integrate(rule, [&](const Vec2& x) { return x.x() * w(x); }),
                     integrate(rule, [&](const Vec2& x) { return x.y() * w(x); }));
    CHECK(std::abs(mass - cell.area) <= 1e-12 * cell.area);
    CHECK((first - cell.area * cell.point).norm() <=
          1e-12 * cell.area * (1.0 + cell.point.norm()));
  }
}

TEST_CASE("hybrid gradient: affine reproduction and hand values") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());

  const Vec2 g(1.25, -0.5);
  auto psi = [&](const Vec2& x) { return 0.3 + g.dot(x); };
  Eigen::VectorXd p_edges(4);
  for (int i = 0; i < 4; ++i) p_edges(i) = psi(mesh.edge(ops.edge_ids[i]).midpoint);
  CHECK((hybrid_gradient(ops, psi(ops.x_K), p_edges) - g).norm() <= 1e-14);

  CHECK(hybrid_gradient(ops, 2.0, Eigen::VectorXd::Constant(4, 2.0)).norm() <= 1e-14);

  Eigen::VectorXd right = Eigen::VectorXd::Zero(4);
  right(1) = 1.0;  // right edge
  const Vec2 grad = hybrid_gradient(ops, 0.0, right);
  CHECK(grad.x() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(grad.y()) <= 1e-14);
}

TEST_CASE("hybrid residuals: affine data vanishes, weighted normals sum to zero") {
  SplitMix64 rng(60221);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);

    const Vec2 g(rng.uniform(-2, 2), rng.uniform(-2, 2));
    Eigen::VectorXd affine(ops.k), arbitrary(ops.k);
    for (int i = 0; i < ops.k; ++i) {
      affine(i) = g.dot(rc.mesh.edge(ops.edge_ids[i]).midpoint);
      arbitrary(i) = rng.uniform(-1, 1);
    }
    CHECK(hybrid_residual(ops, g.dot(ops.x_K), affine).cwiseAbs().maxCoeff() <=
          1e-13 * (1.0 + g.norm() * ops.diameter));

    const Eigen::VectorXd S = hybrid_residual(ops, 0.0, arbitrary);
    Vec2 sum = Vec2::Zero();
    for (int i = 0; i < ops.k; ++i)
      sum += ops.edge_length(i) * S(i) * ops.normals.row(i).transpose();
    CHECK(sum.norm() <= 1e-13 * ops.diameter);

    CHECK(hybrid_residual(ops, 3.0, Eigen::VectorXd::Constant(ops.k, 3.0)).cwiseAbs().maxCoeff() <=
          1e-14);
  }
}

TEST_CASE("flux gradient: constant fields and hand values") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());

  Eigen::VectorXd F(4);
  F << 0, 1, 0, -1;  // fluxes of the constant field e = (1, 0)
  const Vec2 v = flux_gradient(ops, F);
  CHECK(v.x() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(v.y()) <= 1e-14);

  CHECK(flux_gradient(ops, Eigen::VectorXd::Zero(4)).norm() <= 1e-14);

  SplitMix64 rng(333);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators rops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Vec2 e(rng.uniform(-2, 2), rng.uniform(-2, 2));
    Eigen::VectorXd Fe(rops.k);
    for (int i = 0; i < rops.k; ++i) Fe(i) = e.dot(rops.normals.row(i));
    CHECK((flux_gradient(rops, Fe) + rc.lambda.inverse() * e).norm() <= 1e-12 * (1.0 + e.norm()));
  }
}

TEST_CASE("flux residual operator: kernel and rank") {
  SplitMix64 rng(8675309);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);

    // constant fields are annihilated
    const Vec2 e(rng.uniform(-2, 2), rng.uniform(-2, 2));
    Eigen::VectorXd Fe(ops.k);
    for (int i = 0; i < ops.k; ++i) Fe(i) = e.dot(ops.normals.row(i));
    CHECK(T_operator(ops, Fe).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + e.norm()));

    // the kernel is exactly the column span of N
    CHECK((ops.T * ops.N).cwiseAbs().maxCoeff() <= 1e-12 * ops.N.cwiseAbs().maxCoeff());
    const Eigen::VectorXd sv = ops.T.jacobiSvd().singularValues();
    int rank = 0;
    for (int i = 0; i < ops.k; ++i)
      if (sv(i) > 1e-10 * sv(0)) ++rank;
    CHECK(rank == ops.k - 2);
  }
}

TEST_CASE("edge residual operator: kernel, diagonal action, invariance") {
  SplitMix64 rng(112358);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);

    CHECK((ops.L * ops.R).cwiseAbs().maxCoeff() <=
          1e-12 * ops.R.cwiseAbs().maxCoeff() * ops.L.cwiseAbs().maxCoeff() * ops.k);

    // V with vanishing weighted normal sum: L acts as division by |sigma|
    Eigen::VectorXd V(ops.k);
    for (int i = 0; i < ops.k; ++i) V(i) = rng.uniform(-1, 1);
    const Eigen::MatrixXd N0 = ops.normals;
    const Eigen::VectorXd Vproj =
        V - N0 * (N0.transpose() * N0).ldlt().solve(N0.transpose() * V);
    const Eigen::VectorXd LV = L_operator(ops, Vproj);
    CHECK((LV - Vproj.cwiseQuotient(ops.edge_length)).cwiseAbs().maxCoeff() <= 1e-12);

    // L(Vtilde) = L(V) for Vtilde = |sigma| L(V)
    const Eigen::VectorXd LV2 = L_operator(ops, V);
    const Eigen::VectorXd Vtilde = ops.edge_length.cwiseProduct(LV2);
    CHECK((L_operator(ops, Vtilde) - LV2).cwiseAbs().maxCoeff() <=
          1e-12 * (1.0 + LV2.cwiseAbs().maxCoeff()));

    const Eigen::VectorXd sv = ops.L.jacobiSvd().singularValues();
    int rank = 0;
    for (int i = 0; i < ops.k; ++i)
      if (sv(i) > 1e-10 * sv(0)) ++rank;
    CHECK(rank == ops.k - 2);
  }
}

TEST_CASE("stabilization conversions: round trips and form equalities") {
  SplitMix64 rng(271828);
  for (int trial = 0; trial < 25; ++trial) {
    const auto rc = random_cell(rng);
    const LocalOperators ops = build_local_operators(rc.mesh, 0, rc.lambda);
    const Eigen::MatrixXd U = random_spd(rng, ops.k - 2);
    const CellStabilization mu{StabKind::mimetic_u, U};

    const CellStabilization mb = convert_stabilization(ops, mu, StabKind::mixed_b);
    const CellStabilization hb = convert_stabilization(ops, mu, StabKind::hybrid_b);
    const double u_scale = U.cwiseAbs().maxCoeff();

    // round trips reproduce the form C U C^T
    const CellStabilization u_from_mb = convert_stabilization(ops, mb, StabKind::mimetic_u);
    const CellStabilization u_from_hb = convert_stabilization(ops, hb, StabKind::mimetic_u);
    const Eigen::MatrixXd form = ops.C * U * ops.C.transpose();
    CHECK((ops.C * u_from_mb.matrix * ops.C.transpose() - form).cwiseAbs().maxCoeff() <=
          1e-11 * u_scale);
    CHECK((ops.C * u_from_hb.matrix * ops.C.transpose() - form).cwiseAbs().maxCoeff() <=
          1e-10 * u_scale);

    // the mixed form matches on random flux vectors
    for (int probe = 0; probe < 4; ++probe) {
      Eigen::VectorXd F(ops.k), G(ops.k);
      for (int i = 0; i < ops.k; ++i) {
        F(i) = rng.uniform(-1, 1);
        G(i) = rng.uniform(-1, 1);
      }
      const double lhs = G.dot(form * F);
      const double rhs =
          T_operator(ops, G).dot(mb.matrix * T_operator(ops, F));
      CHECK(std::abs(lhs - rhs) <= 1e-11 * u_scale * ops.k);

      // the hybrid form matches the dual stabilization part of W
      const Eigen::MatrixXd W = matrix_W(ops, mu);
      const Eigen::MatrixXd dual =
          W - ops.N * rc.lambda.inverse() * ops.N.transpose() / ops.area;
      const double lhs2 = G.dot(dual * F);
      const double rhs2 = L_operator(ops, G).dot(hb.matrix * L_operator(ops, F));
      CHECK(std::abs(lhs2 - rhs2) <= 1e-10 * std::max(1.0, dual.cwiseAbs().maxCoeff()) * ops.k);
    }

    // converted matrices are SPD
    CHECK(is_spd(mb.matrix));
    CHECK(is_spd(hb.matrix));
  }
}

TEST_CASE("stabilization conversion rejects non-SPD input") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(convert_stabilization(ops, {StabKind::mimetic_u, bad}, StabKind::hybrid_b),
                  ParameterError);
}

TEST_CASE("stability bounds: identity scaling and inverse relation") {
  const Mesh mesh = unit_square();
  const LocalOperators ops = build_local_operators(mesh, 0, Mat2::Identity());

  Eigen::MatrixXd scaled = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) scaled(i, i) = ops.edge_length(i) * ops.distance(i);
  const auto [lo, hi] = stability_bounds(ops, scaled);
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));

  // eigenvalues of the scaled inverse are the reciprocals
  SplitMix64 rng(4242);
  const Eigen::MatrixXd U = random_spd(rng, 2);
  const Eigen::MatrixXd M = matrix_M(ops, U);
  const Eigen::MatrixXd W = matrix_W(ops, {StabKind::mimetic_u, U});
  const auto [mlo, mhi] = stability_bounds(ops, M);
  Eigen::VectorXd scale_vec(4);
  for (int i = 0; i < 4; ++i) scale_vec(i) = std::sqrt(ops.edge_length(i) * ops.distance(i));
  const Eigen::MatrixXd WS = scale_vec.asDiagonal() * W * scale_vec.asDiagonal();
  const Eigen::VectorXd wev = jacobi_eigenvalues(WS);
  CHECK(wev(0) == doctest::Approx(1.0 / mhi).epsilon(1e-10));
  CHECK(wev(3) == doctest::Approx(1.0 / mlo).epsilon(1e-10));
}

TEST_CASE("stability bounds are invariant under uniform scaling") {
  // same cell shape at two sizes, stabilization from the diagonal preset
  for (const double h : {1.0, 0.37}) {
    (void)h;
  }
  const Mesh small = build_cartesian(1, 1, Vec2(0, 0), Vec2(0.37, 0.37));
  const Mesh big = build_cartesian(1, 1, Vec2(0, 0), Vec2(1, 1));
  std::pair<double, double> bounds[2];
  int idx = 0;
  for (const Mesh* mesh : {&small, &big}) {
    const LocalOperators ops = build_local_operators(*mesh, 0, Mat2::Identity());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) B(i, i) = ops.edge_length(i) / ops.distance(i);
    const CellStabilization as_u =
        convert_stabilization(ops, {StabKind::hybrid_b, B}, StabKind::mimetic_u);
    bounds[idx++] = stability_bounds(ops, matrix_M(ops, as_u.matrix));
  }
  CHECK(bounds[0].first == doctest::Approx(bounds[1].first).epsilon(1e-10));
  CHECK(bounds[0].second == doctest::Approx(bounds[1].second).epsilon(1e-10));
}

TEST_CASE("generalized discrete Stokes identity on random cells") {
  SplitMix64 rng(141421);
  for (int trial = 0; trial < 25; ++trial) {
    const auto rc = random_cell(rng);
    const Mesh& mesh = rc.mesh;
    const LocalOperators ops = build_local_operators(mesh, 0, rc.lambda);
    const Eigen::MatrixXd M = matrix_M(ops, random_spd(rng, ops.k - 2));
    const WeightFunction w = weight_function(mesh, 0);
    const QuadratureRule rule = mesh.cell_quadrature(0, 2);

    // q in {1, x, y}: M (Lambda grad q)^I + (int q w / |K|) (|e|) = (|e| q(xbar))
    for (int q = 0; q < 3; ++q) {
      auto affine = [q](const Vec2& x) { return q == 0 ? 1.0 : (q == 1 ? x.x() : x.y()); };
      const Vec2 grad = q == 0 ? Vec2(0, 0) : (q == 1 ? Vec2(1, 0) : Vec2(0, 1));
      const double moment = integrate(rule, [&](const Vec2& x) { return affine(x) * w(x); });
      Eigen::VectorXd residual = M * (ops.N * grad);
      for (int i = 0; i < ops.k; ++i) {
        residual(i) += moment / ops.area * ops.edge_length(i);
        residual(i) -= ops.edge_length(i) * affine(mesh.edge(ops.edge_ids[i]).midpoint);
      }
      const double scale = std::max(1.0, ops.R.cwiseAbs().maxCoeff());
      CHECK(residual.cwiseAbs().maxCoeff() <= 1e-11 * scale);
    }
  }
}
