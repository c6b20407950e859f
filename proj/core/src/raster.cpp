#include "rfla/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfla {

namespace {

double signed_area2(std::span<const Point> v) {
  double acc = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) acc += v[j].x * v[i].y - v[i].x * v[j].y;
  return acc;
}

// Saturating conversion for pixel bounds; the result is clamped by callers.
int to_pixel(double v) { return static_cast<int>(std::clamp(v, -1.0, 1.0e9)); }

bool is_integral(double v) { return std::floor(v) == v; }

void cover_if_inside(MaskBuffer& mask, double x, double y) {
  if (x >= 0.0 && y >= 0.0 && x < mask.width() && y < mask.height()) {
    mask.set(static_cast<int>(x), static_cast<int>(y), true);
  }
}

void cover_segment(MaskBuffer& mask, const Point& a, const Point& b, double half) {
  const int x0 = std::max(0, to_pixel(std::ceil(std::min(a.x, b.x) - half)));
  const int x1 = std::min(mask.width() - 1, to_pixel(std::floor(std::max(a.x, b.x) + half)));
  const int y0 = std::max(0, to_pixel(std::ceil(std::min(a.y, b.y) - half)));
  const int y1 = std::min(mask.height() - 1, to_pixel(std::floor(std::max(a.y, b.y) + half)));
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double t = len2 > 0.0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = a.x + t * dx - x;
      const double ey = a.y + t * dy - y;
      if (ex * ex + ey * ey <= half * half) mask.set(x, y, true);
    }
  }
}

void fill_polygon(MaskBuffer& mask, std::span<const Point> v) {
  double ymin = v[0].y, ymax = v[0].y;
  for (const auto& p : v) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row0 = std::max(0, to_pixel(std::ceil(ymin)));
  const int row1 = std::min(mask.height() - 1, to_pixel(std::floor(ymax)));
  std::vector<double> xs;
  for (int row = row0; row <= row1; ++row) {
    const double y = row;
    xs.clear();
    // Half-open rule: an edge crosses row y when min(y0, y1) <= y < max(y0, y1).
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      const Point& a = v[j];
      const Point& b = v[i];
      if ((a.y <= y) != (b.y <= y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = std::max(0, to_pixel(std::ceil(xs[k])));
      const int c1 = std::min(mask.width() - 1, to_pixel(std::floor(xs[k + 1])));
      for (int col = c0; col <= c1; ++col) mask.set(col, row, true);
    }
  }

  // Boundary pixels the half-open rule misses: integral vertices and the
  // integral points of horizontal edges.
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const Point& a = v[j];
    const Point& b = v[i];
    if (is_integral(b.x) && is_integral(b.y)) cover_if_inside(mask, b.x, b.y);
    if (a.y == b.y && is_integral(a.y) && a.y >= 0.0 && a.y < mask.height()) {
      const int c0 = std::max(0, to_pixel(std::ceil(std::min(a.x, b.x))));
      const int c1 = std::min(mask.width() - 1, to_pixel(std::floor(std::max(a.x, b.x))));
      for (int col = c0; col <= c1; ++col) mask.set(col, static_cast<int>(a.y), true);
    }
  }
}

void check_same_dims(const MaskBuffer& m, const ImageBuffer& img, const char* what) {
  if (m.width() != img.width() || m.height() != img.height()) {
    throw std::invalid_argument(std::string(what) + " is " + std::to_string(m.width()) + "x" +
                                std::to_string(m.height()) + " but image is " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()));
  }
}

}  // namespace

std::uint8_t quantize_channel(double value) {
  if (!(value > 0.0)) return 0;  // also maps NaN to 0
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

MaskBuffer polygon_coverage(std::span<const Point> vertices, int width, int height, double line_thickness) {
  if (vertices.size() < 2) throw std::invalid_argument("polygon needs at least two vertices");
  MaskBuffer mask(width, height);
  if (vertices.size() == 2) {
    cover_segment(mask, vertices[0], vertices[1], line_thickness / 2.0);
  } else if (signed_area2(vertices) != 0.0) {
    fill_polygon(mask, vertices);
  }
  return mask;
}

ImageBuffer blend(const ImageBuffer& img, const MaskBuffer& coverage, const MaskBuffer& permission,
                  const FillStyle& style) {
  check_same_dims(coverage, img, "coverage");
  check_same_dims(permission, img, "permission mask");
  if (!(style.alpha >= 0.0 && style.alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(style.alpha));
  }
  ImageBuffer out = img;
  // Same arithmetic as per pixel, tabulated once per channel.
  const std::array<double, 3> color{static_cast<double>(style.red), static_cast<double>(style.green),
                                    static_cast<double>(style.blue)};
  const double keep = 1.0 - style.alpha;
  std::array<std::array<std::uint8_t, 256>, 3> lut;
  for (std::size_t c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) lut[c][v] = quantize_channel(keep * v + style.alpha * color[c]);
  }
  auto cov = coverage.data();
  auto perm = permission.data();
  auto px = out.data();
  for (std::size_t i = 0; i < cov.size(); ++i) {
    if (!cov[i] || !perm[i]) continue;
    for (std::size_t c = 0; c < 3; ++c) px[i * 3 + c] = lut[c][px[i * 3 + c]];
  }
  return out;
}

ImageBuffer apply_particle(const ImageBuffer& img, const MaskBuffer& permission, const Particle& particle,
                           ShapeKind kind, const RenderOptions& options) {
  const Circle circle = particle.circle();
  const auto verts = order_vertices(shape_vertices(circle, particle.angles, kind), circle);
  const auto coverage = polygon_coverage(verts, img.width(), img.height(), options.line_thickness);
  const FillStyle style{quantize_channel(particle.rgb[0]), quantize_channel(particle.rgb[1]),
                        quantize_channel(particle.rgb[2]), std::clamp(particle.alpha, 0.0, 1.0)};
  return blend(img, coverage, permission, style);
}

MaskBuffer mask_from_average(std::span<const ImageBuffer> images, double threshold) {
  if (images.empty()) throw std::invalid_argument("mask_from_average needs at least one image");
  const int w = images.front().width();
  const int h = images.front().height();
  std::vector<double> sum(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  for (const auto& img : images) {
    if (img.width() != w || img.height() != h) {
      throw std::invalid_argument("mask_from_average: images differ in size");
    }
    auto px = img.data();
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += (299.0 * px[i * 3] + 587.0 * px[i * 3 + 1] + 114.0 * px[i * 3 + 2]) / 1000.0;
    }
  }
  MaskBuffer mask(w, h);
  const double n = static_cast<double>(images.size());
  for (std::size_t i = 0; i < sum.size(); ++i) mask.data()[i] = sum[i] / n >= threshold ? 1 : 0;
  return mask;
}

}  // namespace rfla
