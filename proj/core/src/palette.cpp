#include "rfla/palette.hpp"

#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rfla {

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("palette must hold at least one color");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i].rgb == entries_[j].rgb) {
        throw std::invalid_argument("palette entries '" + entries_[j].name + "' and '" + entries_[i].name +
                                    "' share a color");
      }
    }
  }
}

Palette Palette::nominal() {
  return Palette({
      {"red", {255, 0, 0}},
      {"orange", {255, 128, 0}},
      {"yellow", {255, 255, 0}},
      {"green", {0, 255, 0}},
      {"cyan", {0, 255, 255}},
      {"blue", {0, 0, 255}},
      {"purple", {128, 0, 255}},
      {"white", {255, 255, 255}},
  });
}

Palette Palette::single(const std::string& name, Rgb rgb) { return Palette({{name, rgb}}); }

Palette Palette::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open palette file " + path.string());
  std::vector<PaletteEntry> entries;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (!doc.is_array()) throw std::invalid_argument(path.string() + ": palette must be a JSON array");
    for (const auto& item : doc) {
      const auto rgb = item.at("rgb").get<std::vector<int>>();
      if (rgb.size() != 3) throw std::invalid_argument(path.string() + ": rgb must have three components");
      Rgb c{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (rgb[k] < 0 || rgb[k] > 255) throw std::invalid_argument(path.string() + ": rgb component out of range");
        c[k] = static_cast<std::uint8_t>(rgb[k]);
      }
      entries.push_back({item.at("name").get<std::string>(), c});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return Palette(std::move(entries));
}

Snapped Palette::snap(const std::array<double, 3>& color) const {
  Snapped best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = color[k] - entries_[i].rgb[k];
      d2 += d * d;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {i, entries_[i].rgb};
    }
  }
  return best;
}

Particle Palette::constrain(const Particle& p) const {
  Particle out = p;
  const auto s = snap(p.rgb);
  for (std::size_t k = 0; k < 3; ++k) out.rgb[k] = s.rgb[k];
  return out;
}

}  // namespace rfla
