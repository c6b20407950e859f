#include "rfla/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

namespace rfla {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image dimensions must be positive, got " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("short write to " + path.string());
}

// Wraps the libpng simplified API for one decode, converting to `format`.
std::vector<std::uint8_t> png_decode(std::span<const std::uint8_t> bytes, png_uint_32 format, int& width,
                                     int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("png decode: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageIoError("png decode: " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return pixels;
}

std::vector<std::uint8_t> png_encode(std::span<const std::uint8_t> pixels, int width, int height,
                                     png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

// Reads the next whitespace-delimited PPM header token, skipping comments.
int ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw ImageIoError("ppm: malformed header");
  long value = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1 << 24)) throw ImageIoError("ppm: header value too large");
    ++pos;
  }
  return static_cast<int>(value);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw std::invalid_argument("image data length does not match " + std::to_string(width) + "x" +
                                std::to_string(height) + "x3");
  }
}

MaskBuffer::MaskBuffer(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t MaskBuffer::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  return png_encode(img.data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto rgba = png_decode(bytes, PNG_FORMAT_RGBA, w, h);
  std::vector<std::uint8_t> rgb;
  rgb.reserve(rgba.size() / 4 * 3);
  for (std::size_t i = 0; i < rgba.size(); i += 4) rgb.insert(rgb.end(), rgba.begin() + i, rgba.begin() + i + 3);
  return ImageBuffer(w, h, std::move(rgb));
}

ImageBuffer read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) { write_file(path, encode_png(img)); }

ImageBuffer read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ImageIoError(path.string() + ": not a P6 PPM");
  std::size_t pos = 2;
  const int w = ppm_token(bytes, pos);
  const int h = ppm_token(bytes, pos);
  const int maxval = ppm_token(bytes, pos);
  if (maxval != 255) throw ImageIoError(path.string() + ": only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageIoError(path.string() + ": malformed header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - pos < n) throw ImageIoError(path.string() + ": truncated pixel data");
  return ImageBuffer(w, h, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + n)));
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.data().begin(), img.data().end());
  write_file(path, bytes);
}

ImageBuffer read_image(const std::filesystem::path& path) {
  return lower_extension(path) == ".ppm" ? read_ppm(path) : read_png(path);
}

void write_image(const std::filesystem::path& path, const ImageBuffer& img) {
  if (lower_extension(path) == ".ppm") {
    write_ppm(path, img);
  } else {
    write_png(path, img);
  }
}

MaskBuffer read_mask(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<std::uint8_t> gray;
  try {
    gray = png_decode(read_file(path), PNG_FORMAT_GRAY, w, h);
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
  MaskBuffer mask(w, h);
  std::transform(gray.begin(), gray.end(), mask.data().begin(), [](std::uint8_t v) { return v ? 1 : 0; });
  return mask;
}

void write_mask(const std::filesystem::path& path, const MaskBuffer& mask) {
  std::vector<std::uint8_t> gray(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), gray.begin(),
                 [](std::uint8_t v) { return v ? 255 : 0; });
  write_file(path, png_encode(gray, mask.width(), mask.height(), PNG_FORMAT_GRAY));
}

}  // namespace rfla
