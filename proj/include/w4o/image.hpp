#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace w4o {

/// Interleaved 8-bit RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::array<std::uint8_t, 3> at(int u, int v) const;
  void set(int u, int v, std::array<std::uint8_t, 3> rgb);

  /// 64-bit FNV-1a digest over dimensions and pixel bytes.
  std::uint64_t digest() const;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Per-pixel object id; 0 is background.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> ids;

  LabelImage() = default;
  LabelImage(int w, int h) : width(w), height(h), ids(static_cast<std::size_t>(w) * h, 0) {}

  std::uint16_t at(int u, int v) const { return ids[static_cast<std::size_t>(v) * width + u]; }

  friend bool operator==(const LabelImage&, const LabelImage&) = default;
};

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  PixelMask() = default;
  PixelMask(int w, int h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  bool at(std::size_t index) const { return bits[index] != 0; }
  void set(int u, int v, bool on) { bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const PixelMask&, const PixelMask&) = default;
};

PixelMask mask_for_label(const LabelImage& labels, std::uint16_t id);

// PNG codec (8-bit RGB images, 8-bit grayscale masks with 255 = on).
std::string encode_png(const RgbImage& image);
RgbImage decode_png_rgb(std::string_view png);
std::string encode_mask_png(const PixelMask& mask);
PixelMask decode_mask_png(std::string_view png);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace w4o
