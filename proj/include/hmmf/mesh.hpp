// 2D polygonal mesh: cells, oriented edges and all geometric quantities
// needed by the discretization (areas, lengths, normals, centers, cell-edge
// distances). Meshes are immutable after construction.

#ifndef HMMF_MESH_HPP
#define HMMF_MESH_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hmmf/errors.hpp"
#include "hmmf/quadrature.hpp"

namespace hmmf {

struct Cell {
  std::vector<int> vertex_ids;  ///< counter-clockwise loop
  std::vector<int> edge_ids;    ///< edge_ids[i] joins vertex_ids[i] to vertex_ids[i+1]
  double area = 0.0;
  double diameter = 0.0;        ///< max pairwise vertex distance
  Vec2 centroid = Vec2::Zero();
  Vec2 point = Vec2::Zero();    ///< cell point x_K (defaults to the centroid)

  int n_edges() const { return static_cast<int>(edge_ids.size()); }
};

/// One side of an edge: the incident cell, the unit normal outward from that
/// cell, and the orthogonal distance from the cell point to the edge line.
struct EdgeSide {
  int cell = -1;
  Vec2 normal = Vec2::Zero();
  double distance = 0.0;
};

struct Edge {
  std::array<int, 2> endpoint_ids{-1, -1};
  double length = 0.0;
  Vec2 midpoint = Vec2::Zero();
  std::array<EdgeSide, 2> side{};

  bool is_boundary() const { return side[1].cell < 0; }

  /// Side record of the given incident cell.
  const EdgeSide& side_of(int cell) const {
    if (side[0].cell == cell) return side[0];
    if (side[1].cell == cell) return side[1];
    throw Error("edge is not incident to the requested cell");
  }

  int other_cell(int cell) const {
    return side[0].cell == cell ? side[1].cell : side[0].cell;
  }
};

class Mesh {
 public:
  /// Builds a mesh from vertex coordinates and per-cell CCW vertex loops.
  /// Optional cell points override the centroid default; each point must be
  /// strictly interior to its cell (positive distance to every edge line).
  static Mesh from_polygons(std::vector<Vec2> vertices,
                            std::vector<std::vector<int>> cell_vertices,
                            std::vector<Vec2> points = {});

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_cells() const { return static_cast<int>(cells_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(int c) const { return cells_[c]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  const std::vector<int>& boundary_edges() const { return boundary_edges_; }
  const std::vector<int>& interior_edges() const { return interior_edges_; }

  /// Largest cell diameter.
  double max_diameter() const;

  /// Copy of the mesh with new cell points (distances revalidated).
  Mesh with_cell_points(const std::vector<Vec2>& points) const;

  /// Quadrature rule over a cell by fan triangulation from its point x_K.
  QuadratureRule cell_quadrature(int c, int degree) const;

 private:
  Mesh() = default;
  void finalize(const std::vector<Vec2>* points);

  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Edge> edges_;
  std::vector<int> boundary_edges_;
  std::vector<int> interior_edges_;
};

/// Uniform nx-by-ny rectangular grid of the axis-aligned rectangle [lo, hi].
Mesh build_cartesian(int nx, int ny, const Vec2& lo, const Vec2& hi);

/// Cartesian grid whose interior vertices are displaced by at most
/// amplitude*h in each direction (deterministic in the seed). Displacements
/// are damped globally until every cell is star-shaped w.r.t. its centroid.
Mesh build_perturbed_quads(int nx, int ny, const Vec2& lo, const Vec2& hi, double amplitude,
                           std::uint64_t seed);

/// Mesh regularity measure: max over interior edges of d_K/d_L (both
/// orders) and over all cell-edge pairs of diam(K)/d_K.
double regularity(const Mesh& mesh);

/// Plain-text mesh I/O. Coordinates are written with 17 significant digits
/// so that a write/read round trip is exact.
Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);

}  // namespace hmmf

#endif
