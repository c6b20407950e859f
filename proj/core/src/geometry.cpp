#include "rfla/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rfla {

int angle_count(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Line: return 1;
    case ShapeKind::Triangle:
    case ShapeKind::Rectangle: return 2;
    case ShapeKind::Pentagon:
    case ShapeKind::Hexagon: return 3;
  }
  return 0;
}

int vertex_count(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Line: return 2;
    case ShapeKind::Triangle: return 3;
    case ShapeKind::Rectangle: return 4;
    case ShapeKind::Pentagon: return 5;
    case ShapeKind::Hexagon: return 6;
  }
  return 0;
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Line: return "line";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Pentagon: return "pentagon";
    case ShapeKind::Hexagon: return "hexagon";
  }
  return "unknown";
}

ShapeKind parse_shape(std::string_view name) {
  for (auto kind : {ShapeKind::Line, ShapeKind::Triangle, ShapeKind::Rectangle, ShapeKind::Pentagon,
                    ShapeKind::Hexagon}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown shape '" + std::string(name) + "'");
}

Point point_on_circle(const Circle& c, double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0.0) a += 360.0;
  const double rad = a * std::numbers::pi / 180.0;
  return {c.cx + c.r * std::sin(rad), c.cy + c.r * std::cos(rad)};
}

// 2c is exact, so each coordinate is a single correctly rounded subtraction.
// Applying it twice returns p exactly whenever 2c - p is representable.
Point symmetric_point(const Circle& c, const Point& p) {
  return {2.0 * c.cx - p.x, 2.0 * c.cy - p.y};
}

std::vector<Point> shape_vertices(const Circle& c, std::span<const double> angles, ShapeKind kind) {
  if (static_cast<int>(angles.size()) != angle_count(kind)) {
    throw std::invalid_argument(std::string(to_string(kind)) + " expects " +
                                std::to_string(angle_count(kind)) + " angles, got " +
                                std::to_string(angles.size()));
  }
  std::vector<Point> p;
  p.reserve(angles.size());
  for (double a : angles) p.push_back(point_on_circle(c, a));
  auto sym = [&](std::size_t i) { return symmetric_point(c, p[i]); };

  switch (kind) {
    case ShapeKind::Line: return {p[0], sym(0)};
    case ShapeKind::Triangle: return {p[0], p[1], sym(0)};
    case ShapeKind::Rectangle: return {p[0], p[1], sym(0), sym(1)};
    case ShapeKind::Pentagon: return {p[0], p[1], p[2], sym(0), sym(2)};
    case ShapeKind::Hexagon: return {p[0], p[1], p[2], sym(0), sym(1), sym(2)};
  }
  return {};
}

std::vector<Point> order_vertices(std::span<const Point> pts, const Circle& c) {
  struct Key {
    double theta;
    double dist;
    std::size_t index;
  };
  // A segment has no orientation to fix.
  if (pts.size() <= 2) return {pts.begin(), pts.end()};
  std::vector<Key> keys;
  keys.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x - c.cx;
    const double dy = pts[i].y - c.cy;
    double theta = std::atan2(dy, dx);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    keys.push_back({theta, std::hypot(dx, dy), i});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.theta != b.theta) return a.theta < b.theta;
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
  });
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const auto& k : keys) out.push_back(pts[k.index]);
  return out;
}

}  // namespace rfla
