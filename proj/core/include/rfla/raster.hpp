#pragma once

#include <span>

#include "rfla/geometry.hpp"
#include "rfla/image.hpp"
#include "rfla/particle.hpp"

namespace rfla {

struct FillStyle {
  std::uint8_t red = 0;
  std::uint8_t green = 0;
  std::uint8_t blue = 0;
  double alpha = 1.0;
};

/// Quantizes a continuous color sample: round half away from zero, clamp to [0, 255].
std::uint8_t quantize_channel(double value);

/// Binary coverage of a closed polygon on a width x height pixel grid.
///
/// Pixel (i, j) is sampled at its center (i, j). For three or more vertices a
/// pixel is covered when its center is inside the polygon under the even-odd
/// rule or lies exactly on an edge; polygons with zero signed area cover
/// nothing. Two vertices describe a segment, and every pixel whose center is
/// within `line_thickness / 2` of it is covered. Geometry outside the canvas is
/// clipped.
MaskBuffer polygon_coverage(std::span<const Point> vertices, int width, int height, double line_thickness = 2.0);

/// Paints `style` over `img` where both `coverage` and `permission` are set:
/// out = round((1 - alpha) * in + alpha * color). Other pixels are untouched.
/// Throws std::invalid_argument on a dimension mismatch or alpha outside [0, 1].
ImageBuffer blend(const ImageBuffer& img, const MaskBuffer& coverage, const MaskBuffer& permission,
                  const FillStyle& style);

struct RenderOptions {
  double line_thickness = 2.0;
};

/// Renders a particle's polygon onto the image inside the permission mask.
ImageBuffer apply_particle(const ImageBuffer& img, const MaskBuffer& permission, const Particle& particle,
                           ShapeKind kind, const RenderOptions& options = {});

/// Mean grayscale intensity over `images`, set where the mean is at least
/// `threshold`. Gray is (299 R + 587 G + 114 B) / 1000.
MaskBuffer mask_from_average(std::span<const ImageBuffer> images, double threshold);

}  // namespace rfla
