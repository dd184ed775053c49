#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hmmf/mesh.hpp"
#include "support.hpp"

using namespace hmmf;

namespace {

Mesh unit_square() { return build_cartesian(1, 1, Vec2(0, 0), Vec2(1, 1)); }

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("cartesian mesh: unit square counts and distances") {
  const Mesh mesh = unit_square();
  CHECK(mesh.n_cells() == 1);
  CHECK(mesh.n_edges() == 4);
  CHECK(mesh.cell(0).area == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mesh.cell(0).diameter == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  for (const Edge& edge : mesh.edges()) {
    CHECK(edge.is_boundary());
    CHECK(edge.side[0].distance == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(edge.side[0].normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("cartesian mesh: 2x2 edge count") {
  const Mesh mesh = build_cartesian(2, 2, Vec2(0, 0), Vec2(1, 1));
  CHECK(mesh.n_cells() == 4);
  CHECK(mesh.n_edges() == 12);
  CHECK(mesh.interior_edges().size() == 4);
}

TEST_CASE("cartesian mesh: interior edge distances by symmetry") {
  const Mesh mesh = build_cartesian(2, 1, Vec2(0, 0), Vec2(2, 1));
  REQUIRE(mesh.interior_edges().size() == 1);
  const Edge& edge = mesh.edge(mesh.interior_edges()[0]);
  CHECK(edge.midpoint.x() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(edge.side[0].distance == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(edge.side[1].distance == doctest::Approx(0.5).epsilon(1e-14));
  // opposite normals across an interior edge
  CHECK((edge.side[0].normal + edge.side[1].normal).norm() <= 1e-14);
}

TEST_CASE("cartesian mesh: degenerate input rejected") {
  CHECK_THROWS_AS(build_cartesian(1, 1, Vec2(0, 0), Vec2(0, 1)), InvalidGeometryError);
  CHECK_THROWS_AS(build_cartesian(0, 1, Vec2(0, 0), Vec2(1, 1)), InvalidGeometryError);
}

TEST_CASE("perturbed mesh: zero amplitude equals the cartesian mesh") {
  const Mesh a = build_cartesian(3, 3, Vec2(0, 0), Vec2(1, 1));
  const Mesh b = build_perturbed_quads(3, 3, Vec2(0, 0), Vec2(1, 1), 0.0, 42);
  REQUIRE(a.n_vertices() == b.n_vertices());
  for (int v = 0; v < a.n_vertices(); ++v) {
    CHECK(a.vertex(v).x() == b.vertex(v).x());
    CHECK(a.vertex(v).y() == b.vertex(v).y());
  }
}

TEST_CASE("perturbed mesh: deterministic in the seed") {
  const Mesh a = build_perturbed_quads(5, 4, Vec2(0, 0), Vec2(1, 1), 0.2, 7);
  const Mesh b = build_perturbed_quads(5, 4, Vec2(0, 0), Vec2(1, 1), 0.2, 7);
  for (int v = 0; v < a.n_vertices(); ++v) {
    CHECK(a.vertex(v).x() == b.vertex(v).x());
    CHECK(a.vertex(v).y() == b.vertex(v).y());
  }
  const Mesh c = build_perturbed_quads(5, 4, Vec2(0, 0), Vec2(1, 1), 0.2, 8);
  bool identical = true;
  for (int v = 0; v < a.n_vertices(); ++v)
    if (a.vertex(v).x() != c.vertex(v).x()) identical = false;
  CHECK_FALSE(identical);
}

TEST_CASE("perturbed mesh: all cell-edge distances stay positive") {
  const Mesh mesh = build_perturbed_quads(4, 4, Vec2(0, 0), Vec2(1, 1), 0.2, 7);
  for (const Edge& edge : mesh.edges())
    for (const EdgeSide& side : edge.side)
      if (side.cell >= 0) CHECK(side.distance > 0.0);
  CHECK_THROWS_AS(build_perturbed_quads(4, 4, Vec2(0, 0), Vec2(1, 1), 0.35, 7), ParameterError);
}

TEST_CASE("regularity of cartesian families") {
  const double expected = 2.0 * std::sqrt(2.0);
  CHECK(regularity(unit_square()) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(regularity(build_cartesian(4, 4, Vec2(0, 0), Vec2(1, 1))) ==
        doctest::Approx(expected).epsilon(1e-13));
  CHECK(regularity(build_cartesian(16, 16, Vec2(0, 0), Vec2(1, 1))) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("mesh io: round trip is exact") {
  const Mesh mesh = build_perturbed_quads(3, 2, Vec2(0, 0), Vec2(1, 1), 0.15, 11);
  const std::string path = temp_path("hmmf_roundtrip.txt");
  write_mesh(mesh, path);
  const Mesh again = read_mesh(path);
  REQUIRE(again.n_vertices() == mesh.n_vertices());
  REQUIRE(again.n_cells() == mesh.n_cells());
  REQUIRE(again.n_edges() == mesh.n_edges());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    CHECK(again.vertex(v).x() == mesh.vertex(v).x());
    CHECK(again.vertex(v).y() == mesh.vertex(v).y());
  }
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CHECK(again.cell(c).vertex_ids == mesh.cell(c).vertex_ids);
    CHECK(again.cell(c).point.x() == mesh.cell(c).point.x());
  }
  std::filesystem::remove(path);
}

TEST_CASE("mesh io: dangling vertex index reports the line") {
  const std::string path = temp_path("hmmf_badvertex.txt");
  {
    std::ofstream out(path);
    out << "polymesh 2d 1\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 99\n";
  }
  CHECK_THROWS_WITH_AS(read_mesh(path), doctest::Contains("references vertex 99 of 4"),
                       ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("mesh io: empty cell list rejected") {
  const std::string path = temp_path("hmmf_nocells.txt");
  {
    std::ofstream out(path);
    out << "polymesh 2d 1\n4 0\n0 0\n1 0\n1 1\n0 1\n";
  }
  CHECK_THROWS_WITH_AS(read_mesh(path), doctest::Contains("no cells"), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("mesh io: malformed header rejected") {
  const std::string path = temp_path("hmmf_badheader.txt");
  {
    std::ofstream out(path);
    out << "trimesh 2d 1\n3 1\n0 0\n1 0\n0 1\n3 0 1 2\n";
  }
  CHECK_THROWS_AS(read_mesh(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("geometry identities: closed polygons and magic formulas") {
  hmmf::SplitMix64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rc = hmmf_tests::random_cell(rng);
    const Mesh& mesh = rc.mesh;
    const Cell& cell = mesh.cell(0);

    Vec2 closure = Vec2::Zero();
    Mat2 magic = Mat2::Zero();       // sum |s| n (xbar - xK)^T, should be |K| Id
    Mat2 magic_dual = Mat2::Zero();  // sum |s| (xbar - xK) n^T
    double cone_area = 0.0;
    for (int e : cell.edge_ids) {
      const Edge& edge = mesh.edge(e);
      const EdgeSide& side = edge.side_of(0);
      closure += edge.length * side.normal;
      magic += edge.length * side.normal * (edge.midpoint - cell.point).transpose();
      magic_dual += edge.length * (edge.midpoint - cell.point) * side.normal.transpose();
      cone_area += 0.5 * edge.length * side.distance;
    }
    CHECK(closure.norm() <= 1e-13 * cell.diameter);
    CHECK((magic - cell.area * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-12 * cell.area);
    CHECK((magic_dual - cell.area * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-12 * cell.area);
    CHECK(cone_area == doctest::Approx(cell.area).epsilon(1e-12));
  }
}

TEST_CASE("hanging node: collinear vertex is supported") {
  // left cell carries the extra mid-edge vertex of the two right cells
  std::vector<Vec2> vertices = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}, {1, 0.5}, {2, 0.5}};
  std::vector<std::vector<int>> cells = {
      {0, 1, 6, 4, 5},      // pentagon with a collinear vertex at (1, 0.5)
      {1, 2, 7, 6},
      {6, 7, 3, 4},
  };
  const Mesh mesh = Mesh::from_polygons(vertices, cells);
  CHECK(mesh.n_cells() == 3);
  for (const Edge& edge : mesh.edges())
    for (const EdgeSide& side : edge.side)
      if (side.cell >= 0) CHECK(side.distance > 0.0);
}
