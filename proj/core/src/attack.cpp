#include "rfla/attack.hpp"

#include <algorithm>
#include <limits>

namespace rfla {

namespace {

void evaluate_into(Swarm& sw, const BatchEvaluator& evaluate, PsoRun& run) {
  const auto candidates = sw.particles();
  BatchOutcome out = evaluate(candidates);
  if (out.fitness.size() != candidates.size()) throw std::logic_error("evaluator returned wrong fitness count");
  update_bests(sw, out.fitness);
  run.trace.push_back(sw.gbest_fitness);
  if (out.stop_index) {
    run.stopped_at = candidates.at(*out.stop_index);
    run.stopped_fitness = out.fitness[*out.stop_index];
  }
}

}  // namespace

void run_pso(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask,
             const BatchEvaluator& evaluate, PsoRun& run) {
  cfg.validate();
  Rng rng(cfg.seed);
  run = PsoRun{};
  run.swarm = init_swarm(cfg, space, mask, rng);
  evaluate_into(run.swarm, evaluate, run);
  for (int it = 1; it <= cfg.max_iter && !run.stopped_at; ++it) {
    step(run.swarm, cfg, space, rng);
    run.iterations = it;
    evaluate_into(run.swarm, evaluate, run);
  }
}

void run_random_search(const PsoConfig& cfg, const SearchSpace& space, const MaskBuffer* mask,
                       const BatchEvaluator& evaluate, PsoRun& run) {
  cfg.validate();
  Rng rng(cfg.seed);
  run = PsoRun{};
  for (int round = 0; round <= cfg.max_iter && !run.stopped_at; ++round) {
    Swarm fresh = init_swarm(cfg, space, mask, rng);
    // Carry the incumbent so gbest stays the best over all rounds.
    fresh.gbest = std::move(run.swarm.gbest);
    fresh.gbest_fitness = run.swarm.gbest_fitness;
    run.swarm = std::move(fresh);
    run.iterations = round;
    evaluate_into(run.swarm, evaluate, run);
  }
}

SearchSpace AttackOptions::search_space(int width, int height) const {
  if (radius) return SearchSpace::for_image(kind, width, height, alpha_max, *radius);
  return SearchSpace::for_image(kind, width, height, alpha_max);
}

ImageBuffer CandidateRenderer::operator()(const Particle& p) const {
  return apply_particle(image, permission, evaluated(p), kind, render);
}

namespace {

using Driver = void (*)(const PsoConfig&, const SearchSpace&, const MaskBuffer*, const BatchEvaluator&, PsoRun&);

AttackResult run_attack(const ImageBuffer& image, const MaskBuffer& permission, Oracle& oracle,
                        const FitnessMode& mode, const AttackOptions& options, Driver driver) {
  if (image.empty()) throw std::invalid_argument("attack needs a non-empty image");
  if (permission.width() != image.width() || permission.height() != image.height()) {
    throw std::invalid_argument("permission mask and image differ in size");
  }
  options.pso.validate();
  const SearchSpace space = options.search_space(image.width(), image.height());
  const CandidateRenderer renderer{image, permission, options.kind, options.render,
                                   options.palette ? &*options.palette : nullptr};
  const std::size_t batch =
      options.batch_size ? options.batch_size : static_cast<std::size_t>(options.pso.subswarm_size);

  AttackResult result;
  const std::uint64_t queries_before = oracle.queries();

  // Best evaluated candidate so far, tracked in candidate order with strict
  // improvement so it coincides with the swarm's gbest.
  std::optional<Particle> best;
  OracleScores best_scores;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::optional<Particle> winner;
  OracleScores winner_scores;

  const BatchEvaluator evaluate = [&](std::span<const Particle> candidates) {
    BatchOutcome out;
    out.fitness.assign(candidates.size(), std::numeric_limits<double>::infinity());
    std::vector<ImageBuffer> images;
    for (std::size_t start = 0; start < candidates.size() && !out.stop_index; start += batch) {
      const std::size_t end = std::min(candidates.size(), start + batch);
      images.clear();
      for (std::size_t i = start; i < end; ++i) images.push_back(renderer(candidates[i]));
      const auto scores = oracle.predict(images);
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = scores[i - start];
        const double f = fitness(s, mode);
        out.fitness[i] = f;
        if (f < best_fitness) {
          best_fitness = f;
          best = renderer.evaluated(candidates[i]);
          best_scores = s;
        }
        if (options.early_stop && success(s, mode)) {
          out.stop_index = i;
          winner = renderer.evaluated(candidates[i]);
          winner_scores = s;
          break;
        }
      }
    }
    return out;
  };

  PsoRun run;
  try {
    result.clean_scores = oracle.predict_one(image);
    (void)fitness(result.clean_scores, mode);  // validates the label against K
    if (success(result.clean_scores, mode)) {
      result.status = AttackStatus::Success;
      result.success = true;
      result.adversarial = image;
      result.adversarial_scores = result.clean_scores;
      result.best_fitness = fitness(result.clean_scores, mode);
      result.queries = oracle.queries() - queries_before;
      return result;
    }
    driver(options.pso, space, &permission, evaluate, run);
  } catch (const OracleError& e) {
    result.status = AttackStatus::OracleFailure;
    result.error = e.what();
    result.trace = run.trace;
    result.iterations = run.iterations;
    result.queries = oracle.queries() - queries_before;
    result.adversarial = image;
    return result;
  }

  result.trace = run.trace;
  result.iterations = run.iterations;
  result.queries = oracle.queries() - queries_before;
  if (winner) {
    result.best = winner;
    result.best_fitness = fitness(winner_scores, mode);
    result.adversarial_scores = winner_scores;
  } else if (best) {
    result.best = best;
    result.best_fitness = best_fitness;
    result.adversarial_scores = best_scores;
  }
  result.success = result.adversarial_scores && success(*result.adversarial_scores, mode);
  result.status = result.success ? AttackStatus::Success : AttackStatus::Failed;
  result.adversarial = result.best ? apply_particle(image, permission, *result.best, options.kind, options.render)
                                   : image;
  return result;
}

}  // namespace

AttackResult attack(const ImageBuffer& image, const MaskBuffer& permission, Oracle& oracle, const FitnessMode& mode,
                    const AttackOptions& options) {
  return run_attack(image, permission, oracle, mode, options, &run_pso);
}

AttackResult random_search_baseline(const ImageBuffer& image, const MaskBuffer& permission, Oracle& oracle,
                                    const FitnessMode& mode, const AttackOptions& options) {
  return run_attack(image, permission, oracle, mode, options, &run_random_search);
}

}  // namespace rfla
