#include "rfla/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace rfla {

std::size_t OracleScores::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

namespace {

std::size_t label_of(const FitnessMode& mode) {
  return std::visit(
      [](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Untargeted>) {
          return m.orig_label;
        } else {
          return m.target_label;
        }
      },
      mode);
}

}  // namespace

double fitness(const OracleScores& scores, const FitnessMode& mode) {
  const std::size_t label = label_of(mode);
  if (label >= scores.probs.size()) {
    throw std::invalid_argument("label " + std::to_string(label) + " out of range for " +
                                std::to_string(scores.probs.size()) + " classes");
  }
  if (std::holds_alternative<Untargeted>(mode)) return scores.probs[label];
  return 1.0 - scores.probs[label];
}

bool success(const OracleScores& scores, const FitnessMode& mode) {
  const std::size_t top = scores.argmax();
  if (const auto* u = std::get_if<Untargeted>(&mode)) return top != u->orig_label;
  return top == std::get<Targeted>(mode).target_label;
}

void validate_scores(const OracleScores& scores, std::size_t num_classes) {
  const auto& p = scores.probs;
  if (p.size() < 2) throw OracleError("score vector has " + std::to_string(p.size()) + " classes, need >= 2");
  if (p.size() != num_classes) {
    throw OracleError("score vector has " + std::to_string(p.size()) + " classes, oracle reported " +
                      std::to_string(num_classes));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!std::isfinite(p[k]) || p[k] < 0.0) {
      throw OracleError("probability " + std::to_string(k) + " is invalid: " + std::to_string(p[k]));
    }
    sum += p[k];
  }
  if (std::abs(sum - 1.0) > 1e-4) throw OracleError("probabilities sum to " + std::to_string(sum));
}

std::vector<OracleScores> Oracle::predict(std::span<const ImageBuffer> images) {
  if (images.empty()) throw std::invalid_argument("predict needs a non-empty batch");
  auto scores = do_predict(images);
  queries_ += images.size();
  if (scores.size() != images.size()) {
    throw OracleError("oracle returned " + std::to_string(scores.size()) + " score rows for " +
                      std::to_string(images.size()) + " images");
  }
  const std::size_t k = num_classes();
  for (const auto& s : scores) validate_scores(s, k);
  return scores;
}

OracleScores Oracle::predict_one(const ImageBuffer& image) {
  return std::move(predict(std::span<const ImageBuffer>(&image, 1)).front());
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

UniformOracle::UniformOracle(std::size_t num_classes) : num_classes_(num_classes) {
  if (num_classes < 2) throw std::invalid_argument("uniform oracle needs at least two classes");
}

OracleInfo UniformOracle::info() const { return {1, num_classes_, "uniform"}; }

std::vector<OracleScores> UniformOracle::do_predict(std::span<const ImageBuffer> images) {
  const OracleScores row{std::vector<double>(num_classes_, 1.0 / static_cast<double>(num_classes_))};
  return std::vector<OracleScores>(images.size(), row);
}

PlantedRegionOracle::PlantedRegionOracle(PlantedRegion region) : region_(region) {
  if (region.size <= 0) throw std::invalid_argument("planted region size must be positive");
  if (region.scale == 0.0 || !std::isfinite(region.scale)) {
    throw std::invalid_argument("planted region scale must be finite and non-zero");
  }
}

OracleInfo PlantedRegionOracle::info() const { return {1, 2, "planted"}; }

double PlantedRegionOracle::region_mean(const ImageBuffer& image) const {
  const int x0 = std::max(0, region_.x);
  const int y0 = std::max(0, region_.y);
  const int x1 = std::min(image.width(), region_.x + region_.size);
  const int y1 = std::min(image.height(), region_.y + region_.size);
  if (x0 >= x1 || y0 >= y1) throw std::invalid_argument("planted region lies outside the image");
  double sum = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const auto* p = image.pixel(x, y);
      sum += (299.0 * p[0] + 587.0 * p[1] + 114.0 * p[2]) / 1000.0;
    }
  }
  return sum / static_cast<double>((x1 - x0) * (y1 - y0));
}

double PlantedRegionOracle::class1_probability(double mean) const {
  return 1.0 / (1.0 + std::exp(-(region_.threshold - mean) / region_.scale));
}

std::vector<OracleScores> PlantedRegionOracle::do_predict(std::span<const ImageBuffer> images) {
  std::vector<OracleScores> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    const double p1 = class1_probability(region_mean(img));
    out.push_back({{1.0 - p1, p1}});
  }
  return out;
}

LinearSoftmaxOracle::LinearSoftmaxOracle(std::size_t num_classes, int height, int width,
                                         std::vector<double> weights, std::vector<double> bias)
    : num_classes_(num_classes), height_(height), width_(width), weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (num_classes < 2) throw std::invalid_argument("linear oracle needs at least two classes");
  if (height <= 0 || width <= 0) throw std::invalid_argument("linear oracle dimensions must be positive");
  const std::size_t expect = num_classes * static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3;
  if (weights_.size() != expect) {
    throw std::invalid_argument("linear oracle expects " + std::to_string(expect) + " weights, got " +
                                std::to_string(weights_.size()));
  }
  if (bias_.size() != num_classes) {
    throw std::invalid_argument("linear oracle expects " + std::to_string(num_classes) + " biases, got " +
                                std::to_string(bias_.size()));
  }
}

LinearSoftmaxOracle LinearSoftmaxOracle::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open weights file " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    return LinearSoftmaxOracle(doc.at("K").get<std::size_t>(), doc.at("H").get<int>(), doc.at("W").get<int>(),
                               doc.at("weights").get<std::vector<double>>(),
                               doc.at("bias").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

OracleInfo LinearSoftmaxOracle::info() const { return {1, num_classes_, "linear"}; }

double LinearSoftmaxOracle::weight(std::size_t k, int y, int x, int c) const {
  return weights_[((k * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
                       static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)) *
                      3 +
                  static_cast<std::size_t>(c)];
}

std::vector<double> LinearSoftmaxOracle::logits(const ImageBuffer& image) const {
  if (image.width() != width_ || image.height() != height_) {
    throw std::invalid_argument("linear oracle expects " + std::to_string(width_) + "x" + std::to_string(height_) +
                                " images");
  }
  const auto px = image.data();
  const std::size_t plane = px.size();
  std::vector<double> z(bias_);
  for (std::size_t k = 0; k < num_classes_; ++k) {
    const double* w = weights_.data() + k * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += w[i] * px[i];
    z[k] += acc / 255.0;
  }
  return z;
}

std::vector<OracleScores> LinearSoftmaxOracle::do_predict(std::span<const ImageBuffer> images) {
  std::vector<OracleScores> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back({softmax(logits(img))});
  return out;
}

}  // namespace rfla
