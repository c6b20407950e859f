#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rfla/attack.hpp"
#include "rfla/oracle.hpp"

namespace rfla::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kAttackFailed = 1, kUsageError = 2, kOracleError = 3 };

/// Everything that determines a run. Serialized verbatim into the manifest.
struct AttackConfig {
  std::string shape = "triangle";
  int iters = 200;
  int swarm = 50;
  int subswarm = 50;
  std::uint64_t seed = 0;
  std::string mask;     // permission mask PNG; empty means every pixel
  std::string palette;  // "", "nominal", "white" or a palette JSON path
  std::string oracle = "uniform";
  std::optional<std::size_t> target;
  double alpha_max = 0.7;
  double line_thickness = 2.0;
  bool random_search = false;
  std::string out = "out";

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  AttackOptions attack_options() const;

  nlohmann::json to_json() const;
  static AttackConfig from_json(const nlohmann::json& j);
};

/// Builds an oracle from its command-line spec:
///   uniform[:K] | planted[:X,Y[,THRESHOLD,SCALE]] | linear:WEIGHTS.json |
///   cmd:COMMAND | tcp:HOST:PORT
/// Without coordinates the planted region is centered on a width x height image.
std::unique_ptr<Oracle> make_oracle(const std::string& spec, int width, int height);

nlohmann::json particle_to_json(const Particle& p);
Particle particle_from_json(const nlohmann::json& j);

struct AttackInputs {
  std::filesystem::path image;
  std::optional<std::size_t> label;
};

int cmd_attack(const AttackConfig& config, const AttackInputs& inputs, std::ostream& log);

struct EvalInputs {
  std::filesystem::path dataset;
  std::filesystem::path labels;  // empty: <dataset>/labels.txt
};

int cmd_eval(const AttackConfig& config, const EvalInputs& inputs, std::ostream& log);

enum class SweepKind { Alpha, Color, Position };

struct SweepInputs {
  std::filesystem::path image;
  std::optional<std::size_t> label;
  std::filesystem::path particle;  // result JSON; empty runs an attack first
};

int cmd_sweep(SweepKind kind, const AttackConfig& config, const SweepInputs& inputs, std::ostream& log);

int cmd_mask(const std::filesystem::path& images, double threshold, const std::filesystem::path& out,
             std::ostream& log);

/// Re-runs the command recorded in a manifest, optionally into another
/// output directory.
int cmd_replay(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out,
               std::ostream& log);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& log);

}  // namespace rfla::cli
