#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "brute_force.hpp"
#include "rfla/raster.hpp"

using namespace rfla;

namespace {

ImageBuffer gradient_image(int w, int h) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>(8 * x);
      p[1] = static_cast<std::uint8_t>(8 * y);
      p[2] = static_cast<std::uint8_t>(((x + y) * 4) % 256);
    }
  }
  return img;
}

// Fixed inputs of the golden render.
Particle golden_particle() { return {15.5, 14.2, 11.3, 0.6, {200.0, 30.4, 90.6}, {10.0, 75.0, 140.0}}; }

MaskBuffer golden_permission() {
  MaskBuffer m(32, 32, 1);
  for (int y = 0; y < 32; ++y) {
    for (int x = 20; x < 24; ++x) m.set(x, y, false);
  }
  return m;
}

}  // namespace

TEST_CASE("quantize_channel rounds half away from zero and clamps") {
  CHECK(quantize_channel(0.5) == 1);
  CHECK(quantize_channel(1.49) == 1);
  CHECK(quantize_channel(254.5) == 255);
  CHECK(quantize_channel(300) == 255);
  CHECK(quantize_channel(-3) == 0);
}

TEST_CASE("polygon_coverage examples") {
  SUBCASE("axis-aligned square covers 11x11 pixel centers") {
    const std::vector<Point> sq{{10, 10}, {10, 20}, {20, 20}, {20, 10}};
    const MaskBuffer m = polygon_coverage(sq, 32, 32);
    CHECK(m.count() == 121);
    CHECK(m == testing::brute_force_coverage(sq, 32, 32));
    CHECK(m.at(10, 10) == 1);
    CHECK(m.at(20, 20) == 1);
    CHECK(m.at(21, 15) == 0);
  }
  SUBCASE("polygon outside the canvas covers nothing") {
    const std::vector<Point> tri{{-50, -50}, {-10, -40}, {-30, -5}};
    CHECK(polygon_coverage(tri, 32, 32).count() == 0);
    const std::vector<Point> far{{100, 100}, {140, 100}, {120, 130}};
    CHECK(polygon_coverage(far, 32, 32).count() == 0);
  }
  SUBCASE("vertical line of thickness 2 along the left border") {
    const std::vector<Point> line{{0, 0}, {0, 31}};
    const MaskBuffer m = polygon_coverage(line, 32, 32, 2.0);
    CHECK(m.count() == 64);
    CHECK(m == testing::brute_force_line({0, 0}, {0, 31}, 2.0, 32, 32));
  }
  SUBCASE("zero-area polygons cover nothing") {
    const std::vector<Point> collinear{{2, 2}, {10, 10}, {20, 20}};
    CHECK(polygon_coverage(collinear, 32, 32).count() == 0);
    const std::vector<Point> dup{{5, 5}, {5, 5}, {5, 5}};
    CHECK(polygon_coverage(dup, 32, 32).count() == 0);
  }
  SUBCASE("degenerate hexagon with duplicate vertices") {
    const Circle c{16, 16, 10};
    const double angles[] = {0, 90, 180};
    const auto v = order_vertices(shape_vertices(c, angles, ShapeKind::Hexagon), c);
    const MaskBuffer m = polygon_coverage(v, 32, 32);
    CHECK(m == testing::brute_force_coverage(v, 32, 32));
    CHECK(m.count() > 0);
  }
  SUBCASE("huge coordinates are clipped") {
    const std::vector<Point> big{{-1e12, -1e12}, {1e12, -1e12}, {1e12, 1e12}, {-1e12, 1e12}};
    CHECK(polygon_coverage(big, 16, 16).count() == 256);
  }
}

TEST_CASE("polygon_coverage agrees with the brute-force oracle on random polygons") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> real(-8, 40);
  std::uniform_int_distribution<int> integral(-4, 36), nverts(3, 6);
  for (int i = 0; i < 300; ++i) {
    const int n = nverts(rng);
    std::vector<Point> v;
    for (int k = 0; k < n; ++k) {
      if (i % 2 == 0) {
        v.push_back({double(integral(rng)), double(integral(rng))});
      } else {
        v.push_back({real(rng), real(rng)});
      }
    }
    CAPTURE(i);
    CHECK(polygon_coverage(v, 32, 32) == testing::brute_force_coverage(v, 32, 32));
  }
}

TEST_CASE("segments agree with the distance oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-5, 37), thick(0.5, 6);
  for (int i = 0; i < 200; ++i) {
    const Point a{pos(rng), pos(rng)}, b{pos(rng), pos(rng)};
    const double t = thick(rng);
    const std::vector<Point> seg{a, b};
    CHECK(polygon_coverage(seg, 32, 32, t) == testing::brute_force_line(a, b, t, 32, 32));
  }
}

TEST_CASE("blend examples") {
  ImageBuffer img(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = 30;
      p[1] = 40;
      p[2] = 50;
    }
  }
  const MaskBuffer all(4, 4, 1);
  SUBCASE("alpha 1 substitutes the color") {
    const ImageBuffer out = blend(img, all, all, {200, 10, 10, 1.0});
    CHECK(out.pixel(2, 3)[0] == 200);
    CHECK(out.pixel(2, 3)[1] == 10);
    CHECK(out.pixel(2, 3)[2] == 10);
    CHECK(blend(out, all, all, {200, 10, 10, 1.0}) == out);
  }
  SUBCASE("alpha 0 is the identity") { CHECK(blend(img, all, all, {200, 10, 10, 0.0}) == img); }
  SUBCASE("alpha 0.5 averages") {
    ImageBuffer g(1, 1, 100);
    const MaskBuffer one(1, 1, 1);
    const ImageBuffer out = blend(g, one, one, {200, 200, 200, 0.5});
    CHECK(out.pixel(0, 0)[0] == 150);
    // 0.5 * 101 + 0.5 * 200 = 150.5 rounds up.
    ImageBuffer h(1, 1, 101);
    CHECK(blend(h, one, one, {200, 200, 200, 0.5}).pixel(0, 0)[0] == 151);
  }
  SUBCASE("only coverage and permission pixels change") {
    MaskBuffer cov(4, 4), perm(4, 4, 1);
    cov.set(1, 1, true);
    cov.set(2, 2, true);
    perm.set(2, 2, false);
    const ImageBuffer out = blend(img, cov, perm, {0, 0, 0, 1.0});
    CHECK(out.pixel(1, 1)[0] == 0);
    CHECK(out.pixel(2, 2)[0] == 30);
    CHECK(out.pixel(0, 0)[0] == 30);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(blend(img, MaskBuffer(3, 4), all, {}), std::invalid_argument);
    CHECK_THROWS_AS(blend(img, all, all, {0, 0, 0, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(blend(img, all, all, {0, 0, 0, -0.1}), std::invalid_argument);
  }
}

TEST_CASE("apply_particle") {
  const ImageBuffer img = gradient_image(32, 32);
  SUBCASE("alpha 0 returns the clean image") {
    Particle p = golden_particle();
    p.alpha = 0.0;
    CHECK(apply_particle(img, MaskBuffer(32, 32, 1), p, ShapeKind::Hexagon) == img);
  }
  SUBCASE("an all-zero permission mask returns the clean image") {
    CHECK(apply_particle(img, MaskBuffer(32, 32, 0), golden_particle(), ShapeKind::Hexagon) == img);
  }
  SUBCASE("matches coverage plus blend") {
    const Particle p = golden_particle();
    const MaskBuffer perm = golden_permission();
    const auto v = order_vertices(shape_vertices(p.circle(), p.angles, ShapeKind::Hexagon), p.circle());
    const MaskBuffer cov = testing::brute_force_coverage(v, 32, 32);
    const ImageBuffer out = apply_particle(img, perm, p, ShapeKind::Hexagon);
    const int color[3] = {200, 30, 91};
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        for (int c = 0; c < 3; ++c) {
          const int in = img.pixel(x, y)[c];
          const int want = cov.at(x, y) && perm.at(x, y) ? int(std::lround(0.4 * in + 0.6 * color[c])) : in;
          CHECK(out.pixel(x, y)[c] == want);
        }
      }
    }
  }
  SUBCASE("golden render") {
    const ImageBuffer out = apply_particle(img, golden_permission(), golden_particle(), ShapeKind::Hexagon);
    const ImageBuffer golden = read_ppm(std::filesystem::path(RFLA_TEST_DATA) / "golden_hexagon_32.ppm");
    CHECK(out == golden);
  }
  SUBCASE("lines render at the configured thickness") {
    const Particle p{16, 16, 10, 1.0, {0, 0, 0}, {0}};
    const ImageBuffer out = apply_particle(img, MaskBuffer(32, 32, 1), p, ShapeKind::Line, {3.0});
    const MaskBuffer cov = testing::brute_force_line({16, 26}, {16, 6}, 3.0, 32, 32);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const bool black = out.pixel(x, y)[0] == 0 && out.pixel(x, y)[1] == 0 && out.pixel(x, y)[2] == 0;
        if (cov.at(x, y)) CHECK(black);
      }
    }
  }
}

TEST_CASE("permission-zero pixels never change under random particles") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const ImageBuffer img = testing::random_image(rng, 24, 24);
    const MaskBuffer perm = testing::random_mask(rng, 24, 24, 0.5);
    const Particle p{u(rng) * 30 - 3, u(rng) * 30 - 3, 1 + u(rng) * 15, u(rng), {u(rng) * 255, u(rng) * 255, u(rng) * 255},
                     {u(rng) * 360, u(rng) * 360, u(rng) * 360}};
    const auto kind = i % 2 ? ShapeKind::Hexagon : ShapeKind::Pentagon;
    const ImageBuffer out = apply_particle(img, perm, p, kind);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        if (perm.at(x, y)) continue;
        for (int c = 0; c < 3; ++c) CHECK(out.pixel(x, y)[c] == img.pixel(x, y)[c]);
      }
    }
  }
}

TEST_CASE("mask_from_average") {
  const ImageBuffer white(8, 8, 255), black(8, 8, 0);
  CHECK(mask_from_average(std::vector{white}, 128).count() == 64);
  CHECK(mask_from_average(std::vector{black}, 128).count() == 0);
  CHECK(mask_from_average(std::vector{black, white}, 128).count() == 0);
  CHECK(mask_from_average(std::vector{black, white}, 127.5).count() == 64);

  ImageBuffer red(1, 1);
  red.pixel(0, 0)[0] = 255;  // gray 76.245
  CHECK(mask_from_average(std::vector{red}, 76.245).count() == 1);
  CHECK(mask_from_average(std::vector{red}, 76.3).count() == 0);

  CHECK_THROWS_AS(mask_from_average(std::vector<ImageBuffer>{}, 128), std::invalid_argument);
  CHECK_THROWS_AS(mask_from_average(std::vector{white, ImageBuffer(4, 8)}, 128), std::invalid_argument);
}
