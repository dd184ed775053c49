#include "hmmf/mesh.hpp"

#include "hmmf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hmmf {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Strict crossing test of open segments (a,b) and (c,d).
bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

}  // namespace

Mesh Mesh::from_polygons(std::vector<Vec2> vertices, std::vector<std::vector<int>> cell_vertices,
                         std::vector<Vec2> points) {
  Mesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.cells_.resize(cell_vertices.size());
  for (std::size_t c = 0; c < cell_vertices.size(); ++c)
    mesh.cells_[c].vertex_ids = std::move(cell_vertices[c]);
  if (!points.empty() && points.size() != mesh.cells_.size())
    throw InvalidGeometryError("cell point list size does not match cell count");
  mesh.finalize(points.empty() ? nullptr : &points);
  return mesh;
}

void Mesh::finalize(const std::vector<Vec2>* points) {
  if (cells_.empty()) throw InvalidGeometryError("no cells");
  const int nv = n_vertices();

  for (int c = 0; c < n_cells(); ++c) {
    Cell& cell = cells_[c];
    const int k = static_cast<int>(cell.vertex_ids.size());
    if (k < 3)
      throw InvalidGeometryError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : cell.vertex_ids)
      if (v < 0 || v >= nv)
        throw InvalidGeometryError("cell " + std::to_string(c) + " references vertex " +
                                   std::to_string(v) + " of " + std::to_string(nv));
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        if (cell.vertex_ids[i] == cell.vertex_ids[j])
          throw InvalidGeometryError("cell " + std::to_string(c) + " repeats vertex " +
                                     std::to_string(cell.vertex_ids[i]));

    // shoelace area and exact first moment
    double area2 = 0.0;
    Vec2 moment = Vec2::Zero();
    for (int i = 0; i < k; ++i) {
      const Vec2& a = vertices_[cell.vertex_ids[i]];
      const Vec2& b = vertices_[cell.vertex_ids[(i + 1) % k]];
      const double w = cross2(a, b);
      area2 += w;
      moment += w * (a + b);
    }
    if (area2 <= 0.0)
      throw InvalidGeometryError("cell " + std::to_string(c) +
                                 " is not a counter-clockwise positive-area polygon");
    cell.area = 0.5 * area2;
    cell.centroid = moment / (3.0 * area2);

    cell.diameter = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        cell.diameter = std::max(
            cell.diameter, (vertices_[cell.vertex_ids[i]] - vertices_[cell.vertex_ids[j]]).norm());

    // simplicity: non-adjacent boundary segments must not cross
    for (int i = 0; i < k; ++i) {
      for (int j = i + 2; j < k; ++j) {
        if (i == 0 && j == k - 1) continue;
        const Vec2& a = vertices_[cell.vertex_ids[i]];
        const Vec2& b = vertices_[cell.vertex_ids[(i + 1) % k]];
        const Vec2& cc = vertices_[cell.vertex_ids[j]];
        const Vec2& d = vertices_[cell.vertex_ids[(j + 1) % k]];
        if (segments_cross(a, b, cc, d))
          throw InvalidGeometryError("cell " + std::to_string(c) + " is not a simple polygon");
      }
    }

    cell.point = points ? (*points)[c] : cell.centroid;
  }

  // edge table keyed by the (sorted) endpoint pair
  edges_.clear();
  std::map<std::pair<int, int>, int> edge_of;
  for (int c = 0; c < n_cells(); ++c) {
    Cell& cell = cells_[c];
    const int k = static_cast<int>(cell.vertex_ids.size());
    cell.edge_ids.resize(k);
    for (int i = 0; i < k; ++i) {
      const int va = cell.vertex_ids[i];
      const int vb = cell.vertex_ids[(i + 1) % k];
      const auto key = std::minmax(va, vb);
      auto it = edge_of.find(key);
      int e;
      if (it == edge_of.end()) {
        e = n_edges();
        edge_of.emplace(key, e);
        Edge edge;
        edge.endpoint_ids = {va, vb};
        const Vec2& a = vertices_[va];
        const Vec2& b = vertices_[vb];
        edge.length = (b - a).norm();
        if (edge.length <= 0.0)
          throw InvalidGeometryError("zero-length edge in cell " + std::to_string(c));
        edge.midpoint = 0.5 * (a + b);
        edges_.push_back(edge);
      } else {
        e = it->second;
      }
      Edge& edge = edges_[e];
      int s;
      if (edge.side[0].cell < 0) s = 0;
      else if (edge.side[1].cell < 0) s = 1;
      else
        throw InvalidGeometryError("edge shared by more than two cells (cell " +
                                   std::to_string(c) + ")");
      const Vec2 t = (vertices_[vb] - vertices_[va]).normalized();
      edge.side[s].cell = c;
      edge.side[s].normal = Vec2(t.y(), -t.x());  // outward of a CCW loop
      cell.edge_ids[i] = e;
    }
  }

  // cell-edge distances d_{K,sigma}; positivity is the star-shape condition
  for (Edge& edge : edges_) {
    for (EdgeSide& side : edge.side) {
      if (side.cell < 0) continue;
      side.distance = side.normal.dot(edge.midpoint - cells_[side.cell].point);
      if (!(side.distance > 0.0))
        throw InvalidGeometryError("cell " + std::to_string(side.cell) +
                                   " is not star-shaped with respect to its point");
    }
  }

  boundary_edges_.clear();
  interior_edges_.clear();
  for (int e = 0; e < n_edges(); ++e)
    (edges_[e].is_boundary() ? boundary_edges_ : interior_edges_).push_back(e);
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const Cell& cell : cells_) h = std::max(h, cell.diameter);
  return h;
}

Mesh Mesh::with_cell_points(const std::vector<Vec2>& points) const {
  std::vector<std::vector<int>> loops(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) loops[c] = cells_[c].vertex_ids;
  return from_polygons(vertices_, std::move(loops), points);
}

QuadratureRule Mesh::cell_quadrature(int c, int degree) const {
  const Cell& cell = cells_[c];
  QuadratureRule rule;
  const int k = static_cast<int>(cell.vertex_ids.size());
  for (int i = 0; i < k; ++i) {
    const Vec2& a = vertices_[cell.vertex_ids[i]];
    const Vec2& b = vertices_[cell.vertex_ids[(i + 1) % k]];
    QuadratureRule tri = triangle_quadrature(cell.point, a, b, degree);
    rule.insert(rule.end(), tri.begin(), tri.end());
  }
  return rule;
}

namespace {

void check_grid_args(int nx, int ny, const Vec2& lo, const Vec2& hi) {
  if (nx < 1 || ny < 1) throw InvalidGeometryError("grid subdivisions must be at least 1");
  if (!(hi.x() > lo.x()) || !(hi.y() > lo.y()))
    throw InvalidGeometryError("zero-size domain");
}

Mesh build_grid(int nx, int ny, const Vec2& lo, const Vec2& hi,
                const std::vector<Vec2>& displacement) {
  const double hx = (hi.x() - lo.x()) / nx;
  const double hy = (hi.y() - lo.y()) / ny;
  std::vector<Vec2> vertices;
  vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      Vec2 v(lo.x() + i * hx, lo.y() + j * hy);
      if (!displacement.empty()) v += displacement[j * (nx + 1) + i];
      vertices.push_back(v);
    }
  std::vector<std::vector<int>> cells;
  cells.reserve(nx * ny);
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  return Mesh::from_polygons(std::move(vertices), std::move(cells));
}

}  // namespace

Mesh build_cartesian(int nx, int ny, const Vec2& lo, const Vec2& hi) {
  check_grid_args(nx, ny, lo, hi);
  return build_grid(nx, ny, lo, hi, {});
}

Mesh build_perturbed_quads(int nx, int ny, const Vec2& lo, const Vec2& hi, double amplitude,
                           std::uint64_t seed) {
  check_grid_args(nx, ny, lo, hi);
  if (amplitude < 0.0 || amplitude >= 0.3)
    throw ParameterError("perturbation amplitude must be in [0, 0.3)");
  const double hx = (hi.x() - lo.x()) / nx;
  const double hy = (hi.y() - lo.y()) / ny;

  SplitMix64 rng(seed);
  std::vector<Vec2> displacement((nx + 1) * (ny + 1), Vec2::Zero());
  for (int j = 1; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      displacement[j * (nx + 1) + i] =
          Vec2(amplitude * hx * (2.0 * rng.uniform01() - 1.0),
               amplitude * hy * (2.0 * rng.uniform01() - 1.0));

  double damping = 1.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<Vec2> scaled = displacement;
    for (Vec2& d : scaled) d *= damping;
    try {
      return build_grid(nx, ny, lo, hi, scaled);
    } catch (const InvalidGeometryError&) {
      damping *= 0.5;
    }
  }
  return build_grid(nx, ny, lo, hi, {});  // unreachable in practice
}

double regularity(const Mesh& mesh) {
  double theta = 0.0;
  for (int e : mesh.interior_edges()) {
    const Edge& edge = mesh.edge(e);
    const double dK = edge.side[0].distance;
    const double dL = edge.side[1].distance;
    theta = std::max(theta, std::max(dK / dL, dL / dK));
  }
  for (const Edge& edge : mesh.edges())
    for (const EdgeSide& side : edge.side)
      if (side.cell >= 0)
        theta = std::max(theta, mesh.cell(side.cell).diameter / side.distance);
  return theta;
}

namespace {

// Whitespace-separated token stream with '#' comments and line tracking.
class TokenStream {
 public:
  explicit TokenStream(std::istream& in) : in_(in) {}

  int line() const { return line_; }

  bool next(std::string& token) {
    token.clear();
    char ch;
    while (in_.get(ch)) {
      if (ch == '#') {
        while (in_.get(ch) && ch != '\n') {}
        if (ch == '\n') ++line_;
        continue;
      }
      if (ch == '\n') {
        ++line_;
        if (!token.empty()) return true;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!token.empty()) return true;
        continue;
      }
      token.push_back(ch);
    }
    return !token.empty();
  }

  std::string require(const char* what) {
    std::string token;
    if (!next(token)) throw ParseError(line_, std::string("unexpected end of file, expected ") + what);
    return token;
  }

  long require_int(const char* what) {
    const std::string token = require(what);
    try {
      std::size_t pos = 0;
      const long v = std::stol(token, &pos);
      if (pos != token.size()) throw std::invalid_argument(token);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_, "expected integer " + std::string(what) + ", got '" + token + "'");
    }
  }

  double require_double(const char* what) {
    const std::string token = require(what);
    try {
      std::size_t pos = 0;
      const double v = std::stod(token, &pos);
      if (pos != token.size()) throw std::invalid_argument(token);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_, "expected number " + std::string(what) + ", got '" + token + "'");
    }
  }

 private:
  std::istream& in_;
  int line_ = 1;
};

std::string format_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file: " + path);
  TokenStream ts(in);

  if (ts.require("header") != "polymesh" || ts.require("header") != "2d" ||
      ts.require("header") != "1")
    throw ParseError(ts.line(), "malformed header, expected 'polymesh 2d 1'");

  const long nv = ts.require_int("vertex count");
  const long nc = ts.require_int("cell count");
  if (nv < 3) throw ParseError(ts.line(), "vertex count must be at least 3");
  if (nc < 1) throw ParseError(ts.line(), "no cells");

  std::vector<Vec2> vertices(nv);
  for (long v = 0; v < nv; ++v) {
    const double x = ts.require_double("vertex x");
    const double y = ts.require_double("vertex y");
    vertices[v] = Vec2(x, y);
  }

  std::vector<std::vector<int>> cells(nc);
  for (long c = 0; c < nc; ++c) {
    const long k = ts.require_int("cell vertex count");
    if (k < 3) throw ParseError(ts.line(), "cell " + std::to_string(c) + " has fewer than 3 vertices");
    cells[c].resize(k);
    for (long i = 0; i < k; ++i) {
      const long v = ts.require_int("vertex index");
      if (v < 0 || v >= nv)
        throw ParseError(ts.line(), "cell " + std::to_string(c) + " references vertex " +
                                        std::to_string(v) + " of " + std::to_string(nv));
      cells[c][i] = static_cast<int>(v);
    }
  }

  std::vector<Vec2> points;
  std::string token;
  if (ts.next(token)) {
    if (token != "points")
      throw ParseError(ts.line(), "unexpected token '" + token + "', expected 'points' or end of file");
    points.resize(nc);
    for (long c = 0; c < nc; ++c) {
      const double x = ts.require_double("cell point x");
      const double y = ts.require_double("cell point y");
      points[c] = Vec2(x, y);
    }
    if (ts.next(token))
      throw ParseError(ts.line(), "unexpected trailing token '" + token + "'");
  }

  try {
    return Mesh::from_polygons(std::move(vertices), std::move(cells), std::move(points));
  } catch (const InvalidGeometryError& err) {
    throw ParseError(ts.line(), err.what());
  }
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open file for writing: " + path);
  out << "polymesh 2d 1\n";
  out << mesh.n_vertices() << ' ' << mesh.n_cells() << '\n';
  for (const Vec2& v : mesh.vertices())
    out << format_coord(v.x()) << ' ' << format_coord(v.y()) << '\n';
  for (const Cell& cell : mesh.cells()) {
    out << cell.vertex_ids.size();
    for (int v : cell.vertex_ids) out << ' ' << v;
    out << '\n';
  }
  out << "points\n";
  for (const Cell& cell : mesh.cells())
    out << format_coord(cell.point.x()) << ' ' << format_coord(cell.point.y()) << '\n';
  if (!out) throw Error("failed writing mesh file: " + path);
}

}  // namespace hmmf
