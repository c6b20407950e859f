#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfla {

/// 8-bit RGB raster, row-major, three interleaved channels.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, std::uint8_t fill = 0);
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t* pixel(int x, int y) { return data_.data() + index(x, y); }
  const std::uint8_t* pixel(int x, int y) const { return data_.data() + index(x, y); }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Binary per-pixel mask with values in {0, 1}.
class MaskBuffer {
 public:
  MaskBuffer() = default;
  MaskBuffer(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  void set(int x, int y, bool on) { data_[index(x, y)] = on ? 1 : 0; }

  std::size_t count() const;

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const MaskBuffer&, const MaskBuffer&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PNG files are decoded to 8-bit RGB; any alpha channel is dropped.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageBuffer& img);

/// Dispatches on the extension: .ppm reads binary P6, anything else PNG.
ImageBuffer read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const ImageBuffer& img);

// Masks are single-channel PNGs holding 0 or 255. Any non-zero sample
// loads as 1.
MaskBuffer read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const MaskBuffer& mask);

}  // namespace rfla
