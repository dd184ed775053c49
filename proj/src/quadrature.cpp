#include "hmmf/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace hmmf {

QuadratureRule triangle_quadrature(const Vec2& a, const Vec2& b, const Vec2& c, int degree) {
  const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double area = 0.5 * std::abs(area2);
  QuadratureRule rule;

  auto push = [&](double la, double lb, double lc, double w) {
    rule.push_back({la * a + lb * b + lc * c, w * area});
  };

  if (degree <= 2) {
    // edge-midpoint rule, exact for quadratics
    const double w = 1.0 / 3.0;
    push(0.5, 0.5, 0.0, w);
    push(0.0, 0.5, 0.5, w);
    push(0.5, 0.0, 0.5, w);
  } else if (degree <= 5) {
    // 7-point rule, exact for quintics
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
    const double b2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
    push(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0);
    push(1.0 - 2.0 * b1, b1, b1, w1);
    push(b1, 1.0 - 2.0 * b1, b1, w1);
    push(b1, b1, 1.0 - 2.0 * b1, w1);
    push(1.0 - 2.0 * b2, b2, b2, w2);
    push(b2, 1.0 - 2.0 * b2, b2, w2);
    push(b2, b2, 1.0 - 2.0 * b2, w2);
  } else {
    throw std::invalid_argument("triangle_quadrature: unsupported degree");
  }
  return rule;
}

QuadratureRule segment_quadrature(const Vec2& a, const Vec2& b, int points) {
  const double len = (b - a).norm();
  const Vec2 mid = 0.5 * (a + b);
  const Vec2 half = 0.5 * (b - a);
  QuadratureRule rule;
  switch (points) {
    case 1:
      rule.push_back({mid, len});
      break;
    case 2: {
      const double t = 1.0 / std::sqrt(3.0);
      rule.push_back({mid - t * half, 0.5 * len});
      rule.push_back({mid + t * half, 0.5 * len});
      break;
    }
    case 3: {
      const double t = std::sqrt(3.0 / 5.0);
      rule.push_back({mid - t * half, len * 5.0 / 18.0});
      rule.push_back({mid, len * 8.0 / 18.0});
      rule.push_back({mid + t * half, len * 5.0 / 18.0});
      break;
    }
    default:
      throw std::invalid_argument("segment_quadrature: unsupported point count");
  }
  return rule;
}

}  // namespace hmmf
