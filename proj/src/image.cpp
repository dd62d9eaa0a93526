#include "w4o/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>

#include "w4o/error.hpp"

namespace w4o {

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    std::copy(fill.begin(), fill.end(), data.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
}

std::array<std::uint8_t, 3> RgbImage::at(int u, int v) const {
  const std::size_t i = 3 * (static_cast<std::size_t>(v) * width + u);
  return {data[i], data[i + 1], data[i + 2]};
}

void RgbImage::set(int u, int v, std::array<std::uint8_t, 3> rgb) {
  const std::size_t i = 3 * (static_cast<std::size_t>(v) * width + u);
  data[i] = rgb[0];
  data[i + 1] = rgb[1];
  data[i + 2] = rgb[2];
}

std::uint64_t RgbImage::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (int shift = 0; shift < 32; shift += 8) {
    mix(static_cast<std::uint8_t>(static_cast<std::uint32_t>(width) >> shift));
    mix(static_cast<std::uint8_t>(static_cast<std::uint32_t>(height) >> shift));
  }
  for (std::uint8_t b : data) mix(b);
  return h;
}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

PixelMask mask_for_label(const LabelImage& labels, std::uint16_t id) {
  PixelMask mask(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.ids.size(); ++i) mask.bits[i] = labels.ids[i] == id ? 1 : 0;
  return mask;
}

namespace {

std::string write_png(const void* pixels, int width, int height, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::InvalidArgument, std::string("png encode failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw Error(ErrorCode::InvalidArgument, std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_png(std::string_view png, png_uint_32 format, int& width, int& height) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw Error(ErrorCode::MalformedResponse, std::string("png decode failed: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::MalformedResponse, std::string("png decode failed: ") + image.message);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return pixels;
}

}  // namespace

std::string encode_png(const RgbImage& image) {
  return write_png(image.data.data(), image.width, image.height, PNG_FORMAT_RGB);
}

RgbImage decode_png_rgb(std::string_view png) {
  RgbImage out;
  out.data = read_png(png, PNG_FORMAT_RGB, out.width, out.height);
  return out;
}

std::string encode_mask_png(const PixelMask& mask) {
  std::vector<std::uint8_t> gray(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), gray.begin(),
                 [](std::uint8_t b) -> std::uint8_t { return b ? 255 : 0; });
  return write_png(gray.data(), mask.width, mask.height, PNG_FORMAT_GRAY);
}

PixelMask decode_mask_png(std::string_view png) {
  PixelMask out;
  auto gray = read_png(png, PNG_FORMAT_GRAY, out.width, out.height);
  out.bits.resize(gray.size());
  std::transform(gray.begin(), gray.end(), out.bits.begin(),
                 [](std::uint8_t g) -> std::uint8_t { return g >= 128 ? 1 : 0; });
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_encode(std::string_view bytes) {
  return base64_encode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::MalformedResponse, "base64 length not a multiple of 4");
  if (text.empty()) return {};
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::MalformedResponse, "invalid base64");
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace w4o
