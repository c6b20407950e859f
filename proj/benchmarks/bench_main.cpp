#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rfla/oracle.hpp"
#include "rfla/raster.hpp"
#include "rfla/swarm.hpp"

using namespace rfla;

namespace {

ImageBuffer noise(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.pixel(x, y)[c] = static_cast<std::uint8_t>(rng());
    }
  }
  return img;
}

Particle hexagon_particle(int size) {
  const double s = size;
  return {0.5 * s, 0.45 * s, 0.3 * s, 0.6, {200, 30, 90}, {10, 75, 140}};
}

}  // namespace

static void BM_PolygonCoverage(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Particle p = hexagon_particle(n);
  const auto v = order_vertices(shape_vertices(p.circle(), p.angles, ShapeKind::Hexagon), p.circle());
  for (auto _ : state) benchmark::DoNotOptimize(polygon_coverage(v, n, n));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_PolygonCoverage)->Arg(32)->Arg(224);

static void BM_Blend(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ImageBuffer img = noise(n, n, 1);
  const MaskBuffer all(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(blend(img, all, all, {200, 30, 90, 0.6}));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Blend)->Arg(32)->Arg(224);

static void BM_ApplyParticle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ImageBuffer img = noise(n, n, 2);
  const MaskBuffer all(n, n, 1);
  const Particle p = hexagon_particle(n);
  for (auto _ : state) benchmark::DoNotOptimize(apply_particle(img, all, p, ShapeKind::Hexagon));
}
BENCHMARK(BM_ApplyParticle)->Arg(32)->Arg(224);

// One swarm step at the default 50 x 50 size.
static void BM_Step(benchmark::State& state) {
  const PsoConfig cfg;
  const SearchSpace space = SearchSpace::for_image(ShapeKind::Hexagon, 224, 224);
  Rng rng(3);
  Swarm sw = init_swarm(cfg, space, nullptr, rng);
  const std::vector<double> fitness(sw.size(), 1.0);
  update_bests(sw, fitness);
  for (auto _ : state) {
    step(sw, cfg, space, rng);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sw.size()));
}
BENCHMARK(BM_Step);

static void BM_LinearPredict(benchmark::State& state) {
  const int n = 32;
  const std::size_t k = 10;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 0.05);
  std::vector<double> w(k * n * n * 3), b(k);
  for (auto& x : w) x = g(rng);
  LinearSoftmaxOracle oracle(k, n, n, w, b);
  std::vector<ImageBuffer> batch;
  for (int i = 0; i < 50; ++i) batch.push_back(noise(n, n, 10 + i));
  for (auto _ : state) benchmark::DoNotOptimize(oracle.predict(batch));
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_LinearPredict);
BENCHMARK_MAIN();
