#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rfla/geometry.hpp"
#include "rfla/image.hpp"
#include "rfla/particle.hpp"

namespace rfla {

/// Source of uniform [0, 1) draws. The optimizer only talks to this
/// interface, so tests can script the random coefficients.
class UniformSource {
 public:
  virtual ~UniformSource() = default;
  virtual double next() = 0;

  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }
};

/// Seeded 64-bit Mersenne Twister. Draws use the top 53 bits, so streams are
/// identical across standard library implementations.
class Rng final : public UniformSource {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double next() override { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;

  double clamp(double v) const { return v < lower ? lower : (v > upper ? upper : v); }
  bool contains(double v) const { return v >= lower && v <= upper; }
};

// Layout of a particle vector: [cx, cy, r, alpha, red, green, blue, a1..ak].
inline constexpr std::size_t kCircleDims = 3;
inline constexpr std::size_t kAlphaDim = 3;
inline constexpr std::size_t kFirstAngleDim = 7;

/// Per-dimension position and velocity bounds for one shape kind.
struct SearchSpace {
  std::vector<Bounds> position;
  std::vector<double> velocity;  // symmetric: v in [-velocity[d], velocity[d]]
  /// When set, initial circle centers are drawn from [r, W - r] x [r, H - r]
  /// of this canvas instead of the full position bounds.
  std::optional<std::array<int, 2>> canvas;

  std::size_t dims() const { return position.size(); }
  std::size_t num_angles() const { return dims() - kFirstAngleDim; }

  /// Default bounds for attacking a width x height image: centers clamp to
  /// the pixel grid, r in [min(10, 0.4 min(W, H)), 0.4 min(W, H)], alpha in
  /// [0, alpha_max] (fixed at 1 for lines), colors in [0, 255], angles in
  /// [0, 360]. Velocity limits are (5, 5, 10, 0.05, 5, 5, 5, 10, ...).
  static SearchSpace for_image(ShapeKind kind, int width, int height, double alpha_max = 0.7);

  /// Same limits with an explicit radius range.
  static SearchSpace for_image(ShapeKind kind, int width, int height, double alpha_max, Bounds radius);
};

Particle to_particle(std::span<const double> q);
std::vector<double> to_vector(const Particle& p);

struct PsoConfig {
  int swarm_size = 50;     // circles
  int subswarm_size = 50;  // shapes per circle
  int max_iter = 200;
  double inertia = 0.7298;
  double c1 = 2.05;
  double c2 = 2.05;
  double c3 = 2.05;
  /// Draw kappa per dimension instead of one scalar per term and particle.
  bool per_dimension_kappa = false;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on non-positive sizes or negative iterations.
  void validate() const;
};

struct SubParticle {
  std::vector<double> shape;     // dims kCircleDims.. of the particle vector
  std::vector<double> velocity;  // same layout as `shape`
  double fitness = std::numeric_limits<double>::infinity();
  std::vector<double> pbest;  // full particle vector
  double pbest_fitness = std::numeric_limits<double>::infinity();

  friend bool operator==(const SubParticle&, const SubParticle&) = default;
};

/// A circle shared by its sub-swarm of shapes.
struct CircleGroup {
  std::array<double, kCircleDims> position{};
  std::array<double, kCircleDims> velocity{};
  std::vector<SubParticle> subs;

  friend bool operator==(const CircleGroup&, const CircleGroup&) = default;
};

struct Swarm {
  std::vector<CircleGroup> circles;
  std::vector<double> gbest;
  double gbest_fitness = std::numeric_limits<double>::infinity();
  std::size_t sgbest_circle = 0;
  std::vector<double> sgbest;  // best current shape of the best-sum circle
  bool has_bests = false;

  std::size_t size() const;
  /// Full particle vector of candidate `circle * subswarm + sub`.
  std::vector<double> position(std::size_t circle, std::size_t sub) const;
  std::vector<Particle> particles() const;

  friend bool operator==(const Swarm&, const Swarm&) = default;
};

/// Draws the initial population. Radii are uniform in the radius bounds;
/// centers are resampled (up to 1000 times) until they land on an allowed
/// mask pixel, then fall back to a uniformly chosen allowed pixel. The circle
/// velocity is drawn once per circle, before its sub-particles.
/// Throws std::invalid_argument if `mask` allows no pixel.
Swarm init_swarm(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask, UniformSource& rng);

/// Records fitness of the current positions (candidate-major order,
/// circle * subswarm + sub). Strict improvement updates personal and global
/// bests; the sgbest circle minimizes the summed current fitness. Lowest
/// index wins every tie. Infinite fitness marks an unevaluated candidate.
void update_bests(Swarm& sw, std::span<const double> fitness);

/// v <- W v + C1 k1 (pbest - q) + C2 k2 (gbest - q) + C3 k3 (sgbest - q).
double update_velocity(double v, double q, double pbest, double gbest, double sgbest,
                       const std::array<double, 3>& kappa, const PsoConfig& cfg);

/// Reduces an angle into [0, 360).
double wrap_degrees(double a);

/// One velocity and position update of the whole swarm.
///
/// Each circle moves once, pulled toward the pbest of its best sub-particle,
/// gbest and sgbest, and its sub-particles share the new center and radius.
/// Shape dims move per sub-particle. Random draws are consumed circle by
/// circle: the circle's kappa triple, then each sub-particle's triple in
/// index order. Velocities and positions are clamped, angles wrapped first.
/// Throws std::logic_error if update_bests has not run.
void step(Swarm& sw, const PsoConfig& cfg, const SearchSpace& space, UniformSource& rng);

}  // namespace rfla
