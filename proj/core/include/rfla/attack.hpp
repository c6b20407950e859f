#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfla/oracle.hpp"
#include "rfla/palette.hpp"
#include "rfla/raster.hpp"
#include "rfla/swarm.hpp"

namespace rfla {

/// Fitness of a batch of candidates plus the index of the first candidate
/// that met the stop condition, if any. Candidates after a stop may be left
/// unevaluated (infinite fitness).
struct BatchOutcome {
  std::vector<double> fitness;
  std::optional<std::size_t> stop_index;
};

using BatchEvaluator = std::function<BatchOutcome(std::span<const Particle>)>;

/// State of an optimization run. Filled in as the run progresses, so a caller
/// that catches an exception from the evaluator still sees the partial trace.
struct PsoRun {
  Swarm swarm;
  std::vector<double> trace;  // gbest fitness after init and after every iteration
  int iterations = 0;         // completed step() calls
  std::optional<Particle> stopped_at;
  double stopped_fitness = std::numeric_limits<double>::infinity();
};

/// Initializes a swarm, then alternates evaluate / update_bests / step for up
/// to cfg.max_iter iterations, stopping early when the evaluator reports a
/// stop index.
void run_pso(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask,
             const BatchEvaluator& evaluate, PsoRun& run);

/// Baseline that draws every candidate afresh from the initial distribution,
/// with the same number of rounds and candidates per round as run_pso.
void run_random_search(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask,
                       const BatchEvaluator& evaluate, PsoRun& run);

struct AttackOptions {
  ShapeKind kind = ShapeKind::Triangle;
  PsoConfig pso;
  double alpha_max = 0.7;
  std::optional<Bounds> radius;  // default: SearchSpace::for_image
  RenderOptions render;
  std::optional<Palette> palette;
  bool early_stop = true;
  /// Images per predict call; 0 means one circle's sub-swarm.
  std::size_t batch_size = 0;

  SearchSpace search_space(int width, int height) const;
};

enum class AttackStatus { Success, Failed, OracleFailure };

struct AttackResult {
  AttackStatus status = AttackStatus::Failed;
  bool success = false;
  std::optional<Particle> best;  // as rendered, i.e. after palette snapping
  double best_fitness = std::numeric_limits<double>::infinity();
  ImageBuffer adversarial;
  OracleScores clean_scores;
  std::optional<OracleScores> adversarial_scores;
  std::uint64_t queries = 0;
  int iterations = 0;
  std::vector<double> trace;
  std::string error;
};

/// Searches for a shape whose rendering flips the oracle. The clean image is
/// queried first; if it already meets the success condition the attack ends
/// at iteration 0. Oracle failures end the run with status OracleFailure and
/// the trace gathered so far.
AttackResult attack(const ImageBuffer& image, const MaskBuffer& permission, Oracle& oracle, const FitnessMode& mode,
                    const AttackOptions& options);

/// Random-search ablation with the same query budget as attack().
AttackResult random_search_baseline(const ImageBuffer& image, const MaskBuffer& permission, Oracle& oracle,
                                    const FitnessMode& mode, const AttackOptions& options);

/// Renders a particle the way the attack evaluates it (palette snapping
/// included).
struct CandidateRenderer {
  const ImageBuffer& image;
  const MaskBuffer& permission;
  ShapeKind kind;
  RenderOptions render;
  const Palette* palette = nullptr;

  Particle evaluated(const Particle& p) const { return palette ? palette->constrain(p) : p; }
  ImageBuffer operator()(const Particle& p) const;
};

}  // namespace rfla
