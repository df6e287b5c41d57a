#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "facegrade/image.hpp"

namespace facegrade {

/// Hexcone RGB -> HSV for one pixel. Hue is scaled to [0,1); achromatic
/// pixels get hue 0 by convention.
inline std::array<double, 3> rgb_to_hsv_pixel(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;

  const double v = mx;
  const double s = mx > 0.0 ? d / mx : 0.0;

  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) {
      h = (g - b) / d;
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / d + 2.0;
    } else {
      h = (r - g) / d + 4.0;
    }
    h /= 6.0;
    if (h >= 1.0) h -= 1.0;
  }
  return {h, s, v};
}

inline std::array<double, 3> hsv_to_rgb_pixel(double h, double s, double v) {
  if (s <= 0.0) return {v, v, v};
  double hh = h - std::floor(h);  // wrap into [0,1)
  hh *= 6.0;
  const int sector = std::min(5, static_cast<int>(hh));
  const double f = hh - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

inline ImageHSV rgb_to_hsv(const ImageRGB& img) {
  ImageHSV out(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto hsv =
        rgb_to_hsv_pixel(img.channel[0][i], img.channel[1][i], img.channel[2][i]);
    out.set_pixel(i, hsv);
  }
  return out;
}

inline ImageRGB hsv_to_rgb(const ImageHSV& img) {
  ImageRGB out(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto rgb =
        hsv_to_rgb_pixel(img.channel[0][i], img.channel[1][i], img.channel[2][i]);
    out.set_pixel(i, rgb);
  }
  return out;
}

/// Circular distance between two hues in [0,1).
inline double hue_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

/// Circular mean of hues; returns value in [0,1). Falls back to 0 when the
/// resultant vector vanishes.
template <typename It>
double circular_mean_hue(It first, It last) {
  double cx = 0.0, sy = 0.0;
  for (It it = first; it != last; ++it) {
    const double a = 2.0 * M_PI * (*it);
    cx += std::cos(a);
    sy += std::sin(a);
  }
  if (cx == 0.0 && sy == 0.0) return 0.0;
  double h = std::atan2(sy, cx) / (2.0 * M_PI);
  if (h < 0.0) h += 1.0;
  if (h >= 1.0) h -= 1.0;
  return h;
}

}  // namespace facegrade
