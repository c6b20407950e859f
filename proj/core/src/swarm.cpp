#include "rfla/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfla {

namespace {

constexpr int kMaxCenterResamples = 1000;

bool allowed(const MaskBuffer& mask, double cx, double cy) {
  const double x = std::round(cx);
  const double y = std::round(cy);
  if (x < 0.0 || y < 0.0 || x >= mask.width() || y >= mask.height()) return false;
  return mask.at(static_cast<int>(x), static_cast<int>(y)) != 0;
}

Bounds center_range(const SearchSpace& space, std::size_t axis, double r) {
  const Bounds b = space.position[axis];
  if (!space.canvas) return b;
  const double extent = (*space.canvas)[axis];
  Bounds inset{std::max(b.lower, r), std::min(b.upper, extent - r)};
  if (inset.lower > inset.upper) {
    const double mid = b.clamp(extent / 2.0);
    inset = {mid, mid};
  }
  return inset;
}

}  // namespace

std::size_t Rng::index(std::size_t n) {
  const auto i = static_cast<std::size_t>(next() * static_cast<double>(n));
  return std::min(i, n - 1);
}

SearchSpace SearchSpace::for_image(ShapeKind kind, int width, int height, double alpha_max) {
  const double r_hi = 0.4 * std::min(width, height);
  return for_image(kind, width, height, alpha_max, {std::min(10.0, r_hi), r_hi});
}

SearchSpace SearchSpace::for_image(ShapeKind kind, int width, int height, double alpha_max, Bounds radius) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("search space needs a non-empty image");
  if (!(alpha_max >= 0.0 && alpha_max <= 1.0)) throw std::invalid_argument("alpha_max must lie in [0, 1]");
  if (!(radius.lower > 0.0 && radius.lower <= radius.upper)) {
    throw std::invalid_argument("radius bounds must satisfy 0 < lower <= upper");
  }
  SearchSpace s;
  s.position = {{0.0, width - 1.0}, {0.0, height - 1.0}, radius};
  s.velocity = {5.0, 5.0, 10.0};
  if (kind == ShapeKind::Line) {
    s.position.push_back({1.0, 1.0});
    s.velocity.push_back(0.0);
  } else {
    s.position.push_back({0.0, alpha_max});
    s.velocity.push_back(0.05);
  }
  for (int c = 0; c < 3; ++c) {
    s.position.push_back({0.0, 255.0});
    s.velocity.push_back(5.0);
  }
  for (int a = 0; a < angle_count(kind); ++a) {
    s.position.push_back({0.0, 360.0});
    s.velocity.push_back(10.0);
  }
  s.canvas = std::array<int, 2>{width, height};
  return s;
}

Particle to_particle(std::span<const double> q) {
  if (q.size() < kFirstAngleDim) throw std::invalid_argument("particle vector too short");
  Particle p;
  p.cx = q[0];
  p.cy = q[1];
  p.r = q[2];
  p.alpha = q[kAlphaDim];
  p.rgb = {q[4], q[5], q[6]};
  p.angles.assign(q.begin() + kFirstAngleDim, q.end());
  return p;
}

std::vector<double> to_vector(const Particle& p) {
  std::vector<double> q{p.cx, p.cy, p.r, p.alpha, p.rgb[0], p.rgb[1], p.rgb[2]};
  q.insert(q.end(), p.angles.begin(), p.angles.end());
  return q;
}

void PsoConfig::validate() const {
  if (swarm_size < 1 || subswarm_size < 1) throw std::invalid_argument("swarm sizes must be at least 1");
  if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
}

std::size_t Swarm::size() const {
  std::size_t n = 0;
  for (const auto& c : circles) n += c.subs.size();
  return n;
}

std::vector<double> Swarm::position(std::size_t circle, std::size_t sub) const {
  const auto& c = circles[circle];
  std::vector<double> q(c.position.begin(), c.position.end());
  q.insert(q.end(), c.subs[sub].shape.begin(), c.subs[sub].shape.end());
  return q;
}

std::vector<Particle> Swarm::particles() const {
  std::vector<Particle> out;
  out.reserve(size());
  for (std::size_t i = 0; i < circles.size(); ++i) {
    for (std::size_t j = 0; j < circles[i].subs.size(); ++j) out.push_back(to_particle(position(i, j)));
  }
  return out;
}

Swarm init_swarm(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask, UniformSource& rng) {
  cfg.validate();
  if (space.dims() < kFirstAngleDim || space.velocity.size() != space.dims()) {
    throw std::invalid_argument("search space is malformed");
  }
  std::vector<std::size_t> allowed_pixels;
  if (mask) {
    for (std::size_t i = 0; i < mask->data().size(); ++i) {
      if (mask->data()[i]) allowed_pixels.push_back(i);
    }
    if (allowed_pixels.empty()) throw std::invalid_argument("permission mask allows no pixel");
  }

  Swarm sw;
  sw.circles.resize(static_cast<std::size_t>(cfg.swarm_size));
  for (auto& circle : sw.circles) {
    const double r = rng.uniform(space.position[2].lower, space.position[2].upper);
    const Bounds xr = center_range(space, 0, r);
    const Bounds yr = center_range(space, 1, r);
    double cx = rng.uniform(xr.lower, xr.upper);
    double cy = rng.uniform(yr.lower, yr.upper);
    if (mask) {
      int tries = 0;
      while (!allowed(*mask, cx, cy) && tries < kMaxCenterResamples) {
        cx = rng.uniform(xr.lower, xr.upper);
        cy = rng.uniform(yr.lower, yr.upper);
        ++tries;
      }
      if (!allowed(*mask, cx, cy)) {
        const std::size_t pix = allowed_pixels[static_cast<std::size_t>(
            std::min(rng.next() * static_cast<double>(allowed_pixels.size()),
                     static_cast<double>(allowed_pixels.size() - 1)))];
        cx = space.position[0].clamp(static_cast<double>(pix % static_cast<std::size_t>(mask->width())));
        cy = space.position[1].clamp(static_cast<double>(pix / static_cast<std::size_t>(mask->width())));
      }
    }
    circle.position = {cx, cy, r};
    for (std::size_t d = 0; d < kCircleDims; ++d) {
      circle.velocity[d] = rng.uniform(-space.velocity[d], space.velocity[d]);
    }

    circle.subs.resize(static_cast<std::size_t>(cfg.subswarm_size));
    for (auto& sub : circle.subs) {
      sub.shape.resize(space.dims() - kCircleDims);
      sub.velocity.resize(space.dims() - kCircleDims);
      for (std::size_t d = kCircleDims; d < space.dims(); ++d) {
        sub.shape[d - kCircleDims] = rng.uniform(space.position[d].lower, space.position[d].upper);
      }
      for (std::size_t d = kCircleDims; d < space.dims(); ++d) {
        sub.velocity[d - kCircleDims] = rng.uniform(-space.velocity[d], space.velocity[d]);
      }
    }
  }
  return sw;
}

void update_bests(Swarm& sw, std::span<const double> fitness) {
  if (fitness.size() != sw.size()) {
    throw std::invalid_argument("expected " + std::to_string(sw.size()) + " fitness values, got " +
                                std::to_string(fitness.size()));
  }
  std::size_t k = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best_circle;
  for (std::size_t i = 0; i < sw.circles.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < sw.circles[i].subs.size(); ++j, ++k) {
      if (std::isnan(fitness[k])) throw std::invalid_argument("fitness is NaN");
      auto& sub = sw.circles[i].subs[j];
      sub.fitness = fitness[k];
      sum += fitness[k];
      if (sub.fitness < sub.pbest_fitness) {
        sub.pbest_fitness = sub.fitness;
        sub.pbest = sw.position(i, j);
      }
      if (sub.pbest_fitness < sw.gbest_fitness) {
        sw.gbest_fitness = sub.pbest_fitness;
        sw.gbest = sub.pbest;
      }
    }
    if (!best_circle || sum < best_sum) {
      best_sum = sum;
      best_circle = i;
    }
  }

  sw.sgbest_circle = best_circle.value_or(0);
  const auto& subs = sw.circles[sw.sgbest_circle].subs;
  std::size_t rep = 0;
  for (std::size_t j = 1; j < subs.size(); ++j) {
    if (subs[j].fitness < subs[rep].fitness) rep = j;
  }
  sw.sgbest = sw.position(sw.sgbest_circle, rep);
  // A swarm whose candidates were all unevaluated has no gbest yet; fall back
  // to the sgbest representative so step() has a target.
  if (sw.gbest.empty()) sw.gbest = sw.sgbest;
  sw.has_bests = true;
}

double update_velocity(double v, double q, double pbest, double gbest, double sgbest,
                       const std::array<double, 3>& kappa, const PsoConfig& cfg) {
  return cfg.inertia * v + cfg.c1 * kappa[0] * (pbest - q) + cfg.c2 * kappa[1] * (gbest - q) +
         cfg.c3 * kappa[2] * (sgbest - q);
}

double wrap_degrees(double a) {
  double w = std::fmod(a, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

void step(Swarm& sw, const PsoConfig& cfg, const SearchSpace& space, UniformSource& rng) {
  if (!sw.has_bests) throw std::logic_error("step() requires update_bests() first");

  auto draw = [&] { return std::array<double, 3>{rng.next(), rng.next(), rng.next()}; };
  auto move = [&](double& q, double& v, std::size_t d, double pbest, const std::array<double, 3>& kappa) {
    const double vmax = space.velocity[d];
    v = std::clamp(update_velocity(v, q, pbest, sw.gbest[d], sw.sgbest[d], kappa, cfg), -vmax, vmax);
    q += v;
    if (d >= kFirstAngleDim) q = wrap_degrees(q);
    q = space.position[d].clamp(q);
  };

  for (auto& circle : sw.circles) {
    std::size_t leader = 0;
    for (std::size_t j = 1; j < circle.subs.size(); ++j) {
      if (circle.subs[j].pbest_fitness < circle.subs[leader].pbest_fitness) leader = j;
    }
    const auto& leader_pbest = circle.subs[leader].pbest;
    std::array<double, 3> kappa = cfg.per_dimension_kappa ? std::array<double, 3>{} : draw();
    for (std::size_t d = 0; d < kCircleDims; ++d) {
      if (cfg.per_dimension_kappa) kappa = draw();
      const double pbest = leader_pbest.empty() ? circle.position[d] : leader_pbest[d];
      move(circle.position[d], circle.velocity[d], d, pbest, kappa);
    }

    for (auto& sub : circle.subs) {
      if (!cfg.per_dimension_kappa) kappa = draw();
      for (std::size_t s = 0; s < sub.shape.size(); ++s) {
        if (cfg.per_dimension_kappa) kappa = draw();
        const std::size_t d = s + kCircleDims;
        const double pbest = sub.pbest.empty() ? sub.shape[s] : sub.pbest[d];
        move(sub.shape[s], sub.velocity[s], d, pbest, kappa);
      }
    }
  }
}

}  // namespace rfla
