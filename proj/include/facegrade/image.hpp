#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "facegrade/error.hpp"

namespace facegrade {

/// Single real-valued channel, row-major.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& at(int x, int y) { return data_[index(x, y)]; }
  double at(int x, int y) const { return data_[index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::size_t index(int x, int y) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return static_cast<std::size_t>(y) * width_ + x;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_size(const Plane& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }
  bool same_size_dims(int w, int h) const noexcept {
    return width_ == w && height_ == h;
  }

  bool all_finite() const noexcept {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void clamp(double lo, double hi) {
    for (double& v : data_) v = std::clamp(v, lo, hi);
  }

  bool operator==(const Plane& o) const = default;

 private:
  int width_ = 0, height_ = 0;
  std::vector<double> data_;
};

/// Triplet of planes; used for RGB images and other per-pixel 3-vector
/// fields (gradients, HSV).
struct PlaneTriple {
  std::array<Plane, 3> channel;

  PlaneTriple() = default;
  PlaneTriple(int width, int height, double fill = 0.0)
      : channel{Plane(width, height, fill), Plane(width, height, fill),
                Plane(width, height, fill)} {}

  int width() const noexcept { return channel[0].width(); }
  int height() const noexcept { return channel[0].height(); }
  std::size_t pixel_count() const noexcept { return channel[0].size(); }

  std::array<double, 3> pixel(std::size_t i) const {
    return {channel[0][i], channel[1][i], channel[2][i]};
  }
  void set_pixel(std::size_t i, const std::array<double, 3>& v) {
    channel[0][i] = v[0];
    channel[1][i] = v[1];
    channel[2][i] = v[2];
  }

  bool same_size(const PlaneTriple& o) const noexcept {
    return width() == o.width() && height() == o.height();
  }
  bool all_finite() const noexcept {
    return channel[0].all_finite() && channel[1].all_finite() &&
           channel[2].all_finite();
  }
  bool operator==(const PlaneTriple& o) const = default;
};

/// RGB image, channels normalized to [0,1].
struct ImageRGB : PlaneTriple {
  ImageRGB() = default;
  ImageRGB(int width, int height, double fill = 0.0)
      : PlaneTriple(width, height, fill) {}

  Plane& r() { return channel[0]; }
  Plane& g() { return channel[1]; }
  Plane& b() { return channel[2]; }
  const Plane& r() const { return channel[0]; }
  const Plane& g() const { return channel[1]; }
  const Plane& b() const { return channel[2]; }

  void clamp01() {
    for (Plane& p : channel) p.clamp(0.0, 1.0);
  }
};

/// HSV image; hue in [0,1) (circular), saturation and value in [0,1].
struct ImageHSV : PlaneTriple {
  ImageHSV() = default;
  ImageHSV(int width, int height) : PlaneTriple(width, height) {}

  Plane& h() { return channel[0]; }
  Plane& s() { return channel[1]; }
  Plane& v() { return channel[2]; }
  const Plane& h() const { return channel[0]; }
  const Plane& s() const { return channel[1]; }
  const Plane& v() const { return channel[2]; }
};

/// Boolean per-pixel mask.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int width, int height, bool fill = false)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool test(int x, int y) const { return bits_[index(x, y)] != 0; }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }

  std::size_t index(int x, int y) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (std::uint8_t b : bits_) n += b;
    return n;
  }
  bool empty() const noexcept { return count() == 0; }

  RegionMask complement() const {
    RegionMask out(width_, height_);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] ? 0 : 1;
    return out;
  }

  bool same_size(const RegionMask& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  bool operator==(const RegionMask& o) const = default;

 private:
  int width_ = 0, height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline RegionMask mask_union(const RegionMask& a, const RegionMask& b) {
  assert(a.same_size(b));
  RegionMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.test(i) || b.test(i));
  return out;
}

inline RegionMask mask_intersection(const RegionMask& a, const RegionMask& b) {
  assert(a.same_size(b));
  RegionMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.test(i) && b.test(i));
  return out;
}

inline RegionMask mask_difference(const RegionMask& a, const RegionMask& b) {
  assert(a.same_size(b));
  RegionMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.test(i) && !b.test(i));
  return out;
}

inline bool masks_disjoint(const RegionMask& a, const RegionMask& b) {
  assert(a.same_size(b));
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.test(i) && b.test(i)) return false;
  return true;
}

/// Axis-aligned pixel rectangle, inclusive bounds. Empty when x1 < x0 or
/// y1 < y0.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  bool empty() const noexcept { return x1 < x0 || y1 < y0; }
  int width() const noexcept { return empty() ? 0 : x1 - x0 + 1; }
  int height() const noexcept { return empty() ? 0 : y1 - y0 + 1; }
  std::size_t area() const noexcept {
    return static_cast<std::size_t>(width()) * height();
  }

  PixelRect clipped(int image_width, int image_height) const {
    PixelRect out = *this;
    out.x0 = std::max(out.x0, 0);
    out.y0 = std::max(out.y0, 0);
    out.x1 = std::min(out.x1, image_width - 1);
    out.y1 = std::min(out.y1, image_height - 1);
    return out;
  }

  bool contains(int x, int y) const noexcept {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

inline RegionMask mask_from_rect(int width, int height, const PixelRect& r) {
  RegionMask out(width, height);
  PixelRect c = r.clipped(width, height);
  for (int y = c.y0; y <= c.y1; ++y)
    for (int x = c.x0; x <= c.x1; ++x) out.set(x, y, true);
  return out;
}

/// Rounds half away from zero; used everywhere a real coordinate or size
/// becomes a pixel count so rounding is consistent across modules.
inline int round_half_up(double v) {
  return static_cast<int>(std::floor(v + 0.5));
}

}  // namespace facegrade
