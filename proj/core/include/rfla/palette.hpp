#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfla/particle.hpp"

namespace rfla {

using Rgb = std::array<std::uint8_t, 3>;

struct PaletteEntry {
  std::string name;
  Rgb rgb{};
};

struct Snapped {
  std::size_t index = 0;
  Rgb rgb{};
};

/// Set of colors the attack may paint with, e.g. the reflected-light colors
/// measured through a set of tinted sheets.
class Palette {
 public:
  /// Throws std::invalid_argument when empty or when two entries share a color.
  explicit Palette(std::vector<PaletteEntry> entries);

  /// Seven nominal sheet hues plus white. Replace with measured colors for
  /// physical deployment.
  static Palette nominal();
  static Palette single(const std::string& name, Rgb rgb);

  /// JSON array of {"name": string, "rgb": [r, g, b]}.
  static Palette from_json_file(const std::filesystem::path& path);

  const std::vector<PaletteEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Nearest entry in RGB Euclidean distance; lowest index wins ties.
  Snapped snap(const std::array<double, 3>& color) const;

  /// Copy of `p` with its color replaced by the snapped palette color. The
  /// optimizer keeps the continuous color; this is applied at evaluation time.
  Particle constrain(const Particle& p) const;

 private:
  std::vector<PaletteEntry> entries_;
};

}  // namespace rfla
