#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "facegrade/image.hpp"

namespace facegrade {

// 8-bit PNG I/O. Loading maps sample k to k/255; saving rounds half-up.
// Masks are 8-bit grayscale: a sample >= 128 means member.

namespace detail {

inline std::vector<std::uint8_t> read_png_bytes(const std::string& path,
                                                png_uint_32 format, int channels,
                                                int& width, int& height) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw Error(errc::invalid_input,
                "cannot read PNG '" + path + "': " + img.message);
  img.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(errc::invalid_input, "cannot decode PNG '" + path + "': " + msg);
  }
  width = static_cast<int>(img.width);
  height = static_cast<int>(img.height);
  if (buffer.size() != static_cast<std::size_t>(width) * height * channels)
    throw Error(errc::invalid_input, "unexpected PNG buffer size for " + path);
  return buffer;
}

inline void write_png_bytes(const std::string& path, png_uint_32 format,
                            const std::uint8_t* data, int width, int height) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr))
    throw Error(errc::invalid_input,
                "cannot write PNG '" + path + "': " + img.message);
}

inline std::uint8_t to_byte(double v) {
  const int b = static_cast<int>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
  return static_cast<std::uint8_t>(std::clamp(b, 0, 255));
}

}  // namespace detail

inline ImageRGB load_png(const std::string& path) {
  int w = 0, h = 0;
  const auto bytes = detail::read_png_bytes(path, PNG_FORMAT_RGB, 3, w, h);
  ImageRGB out(w, h);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    out.channel[0][i] = bytes[3 * i + 0] / 255.0;
    out.channel[1][i] = bytes[3 * i + 1] / 255.0;
    out.channel[2][i] = bytes[3 * i + 2] / 255.0;
  }
  return out;
}

inline void save_png(const std::string& path, const ImageRGB& img) {
  std::vector<std::uint8_t> bytes(img.pixel_count() * 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    bytes[3 * i + 0] = detail::to_byte(img.channel[0][i]);
    bytes[3 * i + 1] = detail::to_byte(img.channel[1][i]);
    bytes[3 * i + 2] = detail::to_byte(img.channel[2][i]);
  }
  detail::write_png_bytes(path, PNG_FORMAT_RGB, bytes.data(), img.width(),
                          img.height());
}

inline RegionMask load_mask_png(const std::string& path) {
  int w = 0, h = 0;
  const auto bytes = detail::read_png_bytes(path, PNG_FORMAT_GRAY, 1, w, h);
  RegionMask out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out.set(i, bytes[i] >= 128);
  return out;
}

inline void save_mask_png(const std::string& path, const RegionMask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.test(i) ? 255 : 0;
  detail::write_png_bytes(path, PNG_FORMAT_GRAY, bytes.data(), mask.width(),
                          mask.height());
}

/// Grayscale image in [0,1]; used for alpha mattes.
inline void save_gray_png(const std::string& path, const Plane& plane) {
  std::vector<std::uint8_t> bytes(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) bytes[i] = detail::to_byte(plane[i]);
  detail::write_png_bytes(path, PNG_FORMAT_GRAY, bytes.data(), plane.width(),
                          plane.height());
}

inline Plane load_gray_png(const std::string& path) {
  int w = 0, h = 0;
  const auto bytes = detail::read_png_bytes(path, PNG_FORMAT_GRAY, 1, w, h);
  Plane out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

}  // namespace facegrade
