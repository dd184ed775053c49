// Shared helpers for the test suites: reproducible random star-shaped
// polygonal cells, random SPD matrices and random diffusion tensors.

#ifndef HMMF_TESTS_SUPPORT_HPP
#define HMMF_TESTS_SUPPORT_HPP

#include <cmath>

#include "hmmf/local.hpp"
#include "hmmf/mesh.hpp"
#include "hmmf/rng.hpp"

namespace hmmf_tests {

inline constexpr double kPi = 3.14159265358979323846;

struct RandomCell {
  hmmf::Mesh mesh;  // single-cell mesh, the cell is index 0
  hmmf::Mat2 lambda;
};

inline Eigen::MatrixXd random_spd(hmmf::SplitMix64& rng, int m) {
  Eigen::MatrixXd A(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  Eigen::MatrixXd U = A * A.transpose();
  U += (0.3 * U.trace() / m + 0.1) * Eigen::MatrixXd::Identity(m, m);
  return U;
}

inline hmmf::Mat2 random_tensor(hmmf::SplitMix64& rng) {
  const double phi = rng.uniform(0.0, kPi);
  const double l1 = rng.uniform(0.4, 3.5);
  const double l2 = rng.uniform(0.4, 3.5);
  hmmf::Mat2 Q;
  Q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  hmmf::Mat2 diag;
  diag << l1, 0.0, 0.0, l2;
  return Q * diag * Q.transpose();
}

/// Star-shaped polygon with 3 to 10 edges, random scale, rotation and
/// translation, and a random strictly interior cell point.
inline RandomCell random_cell(hmmf::SplitMix64& rng, int min_edges = 3, int max_edges = 10) {
  const int k = min_edges + static_cast<int>(rng.next() % (max_edges - min_edges + 1));
  const double scale = rng.uniform(0.5, 2.0);
  const double rot = rng.uniform(0.0, 2.0 * kPi);
  const hmmf::Vec2 shift(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
  Eigen::Matrix2d rotation;
  rotation << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);

  // jitter capped so consecutive angular gaps stay well below pi and the
  // kernel of the polygon always contains the origin
  std::vector<hmmf::Vec2> vertices(k);
  for (int i = 0; i < k; ++i) {
    const double theta = 2.0 * kPi * (i + 0.35 * rng.uniform01()) / k;
    const double r = rng.uniform(0.6, 1.4);
    vertices[i] = shift + scale * (rotation * hmmf::Vec2(r * std::cos(theta), r * std::sin(theta)));
  }
  std::vector<int> loop(k);
  for (int i = 0; i < k; ++i) loop[i] = i;

  hmmf::Vec2 offset(rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35));
  for (int attempt = 0; attempt < 10; ++attempt) {
    try {
      const hmmf::Vec2 point = shift + scale * (rotation * offset);
      return {hmmf::Mesh::from_polygons(vertices, {loop}, {point}), random_tensor(rng)};
    } catch (const hmmf::InvalidGeometryError&) {
      offset *= 0.5;
    }
  }
  return {hmmf::Mesh::from_polygons(vertices, {loop}, {shift}), random_tensor(rng)};
}

}  // namespace hmmf_tests

#endif
