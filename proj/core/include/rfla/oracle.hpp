#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rfla/image.hpp"

namespace rfla {

/// Probability vector over the classifier's classes.
struct OracleScores {
  std::vector<double> probs;

  /// Index of the largest probability; lowest index wins ties.
  std::size_t argmax() const;
};

/// Raised when a classifier cannot be reached or answers with something
/// that is not a valid probability vector.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Untargeted {
  std::size_t orig_label = 0;
};
struct Targeted {
  std::size_t target_label = 0;
};
using FitnessMode = std::variant<Untargeted, Targeted>;

/// Quantity the attack minimizes: probs[orig] when untargeted,
/// 1 - probs[target] when targeted. Throws std::invalid_argument when the
/// label is out of range.
double fitness(const OracleScores& scores, const FitnessMode& mode);

/// Untargeted: argmax differs from the original label. Targeted: argmax hits
/// the target.
bool success(const OracleScores& scores, const FitnessMode& mode);

/// Identification the classifier reports about itself.
struct OracleInfo {
  int protocol = 1;
  std::size_t num_classes = 0;
  std::string name;
};

/// Black-box classifier queried only through predict(). Every image sent
/// counts as one query; replies are validated before they reach the caller.
class Oracle {
 public:
  virtual ~Oracle() = default;

  std::vector<OracleScores> predict(std::span<const ImageBuffer> images);
  OracleScores predict_one(const ImageBuffer& image);

  std::uint64_t queries() const { return queries_; }
  virtual OracleInfo info() const = 0;
  std::size_t num_classes() const { return info().num_classes; }

 protected:
  virtual std::vector<OracleScores> do_predict(std::span<const ImageBuffer> images) = 0;

 private:
  std::uint64_t queries_ = 0;
};

/// Checks K >= 2, non-negative entries, and sum within 1e-4 of one.
/// Throws OracleError with a diagnostic otherwise.
void validate_scores(const OracleScores& scores, std::size_t num_classes);

class UniformOracle final : public Oracle {
 public:
  explicit UniformOracle(std::size_t num_classes = 10);
  OracleInfo info() const override;

 protected:
  std::vector<OracleScores> do_predict(std::span<const ImageBuffer> images) override;

 private:
  std::size_t num_classes_;
};

/// Geometry and response curve of the planted-region oracle.
struct PlantedRegion {
  int x = 0;      // left column of the region
  int y = 0;      // top row of the region
  int size = 8;   // side length in pixels
  double threshold = 100.0;
  double scale = 10.0;
};

/// Two-class oracle driven by the mean gray level m of a hidden square:
///   P(class 1) = 1 / (1 + exp(-(threshold - m) / scale)),  P(class 0) = 1 - P(class 1).
/// With a positive scale, darkening the region moves mass to class 1; a
/// negative scale makes brightening do so. Gray is (299 R + 587 G + 114 B) / 1000
/// and the region is clipped to the image.
class PlantedRegionOracle final : public Oracle {
 public:
  explicit PlantedRegionOracle(PlantedRegion region);
  OracleInfo info() const override;

  const PlantedRegion& region() const { return region_; }
  double region_mean(const ImageBuffer& image) const;
  double class1_probability(double mean) const;

 protected:
  std::vector<OracleScores> do_predict(std::span<const ImageBuffer> images) override;

 private:
  PlantedRegion region_;
};

/// Softmax over logits_k = bias_k + sum_{y,x,c} w[k][y][x][c] * pixel[y][x][c] / 255.
class LinearSoftmaxOracle final : public Oracle {
 public:
  LinearSoftmaxOracle(std::size_t num_classes, int height, int width, std::vector<double> weights,
                      std::vector<double> bias);

  /// Loads {"K":int,"H":int,"W":int,"weights":[K*H*W*3 values],"bias":[K values]}.
  static LinearSoftmaxOracle from_json_file(const std::filesystem::path& path);

  OracleInfo info() const override;
  std::vector<double> logits(const ImageBuffer& image) const;
  double weight(std::size_t k, int y, int x, int c) const;

 protected:
  std::vector<OracleScores> do_predict(std::span<const ImageBuffer> images) override;

 private:
  std::size_t num_classes_;
  int height_;
  int width_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace rfla
