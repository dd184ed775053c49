// Quadrature rules: Gauss points on segments, symmetric rules on triangles,
// and composite rules on star-shaped polygonal cells (fan triangulation).

#ifndef HMMF_QUADRATURE_HPP
#define HMMF_QUADRATURE_HPP

#include <Eigen/Dense>
#include <vector>

namespace hmmf {

using Vec2 = Eigen::Vector2d;

struct QuadratureNode {
  Vec2 x;
  double w;
};

using QuadratureRule = std::vector<QuadratureNode>;

/// Symmetric rule on the triangle (a,b,c), exact for polynomials of the
/// requested degree. Supported degrees: 2 (3 points) and 5 (7 points).
QuadratureRule triangle_quadrature(const Vec2& a, const Vec2& b, const Vec2& c, int degree);

/// Gauss-Legendre rule on the segment [a,b] with 1, 2 or 3 points
/// (exact for degrees 1, 3, 5).
QuadratureRule segment_quadrature(const Vec2& a, const Vec2& b, int points);

template <typename F>
double integrate(const QuadratureRule& rule, F&& f) {
  double s = 0.0;
  for (const auto& node : rule) s += node.w * f(node.x);
  return s;
}

}  // namespace hmmf

#endif
