#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace rfla {

// x indexes columns and y indexes rows; origin at the top-left pixel.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 1.0;
};

enum class ShapeKind { Line, Triangle, Rectangle, Pentagon, Hexagon };

/// Number of free angles a shape carries (Line 1, Triangle/Rectangle 2,
/// Pentagon/Hexagon 3).
int angle_count(ShapeKind kind);

/// Number of polygon vertices the shape produces.
int vertex_count(ShapeKind kind);

std::string_view to_string(ShapeKind kind);

/// Parses the lowercase shape name; throws std::invalid_argument otherwise.
ShapeKind parse_shape(std::string_view name);

/// Point on the circle at `angle_deg`: (cx + r sin a, cy + r cos a).
Point point_on_circle(const Circle& c, double angle_deg);

/// Reflection of `p` through the circle center. An exact involution when
/// 2c - p is representable (e.g. coordinates on a common dyadic grid);
/// otherwise the round trip is off by at most one rounding.
Point symmetric_point(const Circle& c, const Point& p);

/// Vertex set of the shape before ordering. Throws std::invalid_argument if
/// the number of angles does not match the shape.
std::vector<Point> shape_vertices(const Circle& c, std::span<const double> angles, ShapeKind kind);

/// Orders vertices by polar angle in [0, 2pi) about the circle center,
/// ties broken by distance from the center and then by input position.
/// Points sharing one circle come out in convex order. Two or fewer points
/// are returned unchanged.
std::vector<Point> order_vertices(std::span<const Point> pts, const Circle& c);

}  // namespace rfla
