#pragma once

#include <algorithm>
#include <cmath>

#include "facegrade/image.hpp"

namespace facegrade {

// Intensity/color decomposition: I = (R^2+G^2+B^2)/(R+G+B) and C = x/I, so
// I*C reconstructs the pixel exactly. Grafting the input's intensity onto
// the filtered image's color keeps shading that the filtering flattened.

struct IntensityColorPair {
  Plane intensity;    // x^I, >= 0
  PlaneTriple color;  // x^C, unitless ratios
};

/// Black pixels (zero L1 norm) take I = 0 and C = (1,1,1), so recombining
/// yields black; the formula is 0/0 there.
inline IntensityColorPair decompose(const ImageRGB& img) {
  IntensityColorPair out;
  out.intensity = Plane(img.width(), img.height());
  out.color = PlaneTriple(img.width(), img.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double r = img.channel[0][i], g = img.channel[1][i],
                 b = img.channel[2][i];
    const double l1 = r + g + b;
    if (l1 <= 0.0) {
      out.intensity[i] = 0.0;
      out.color.channel[0][i] = 1.0;
      out.color.channel[1][i] = 1.0;
      out.color.channel[2][i] = 1.0;
      continue;
    }
    const double intensity = (r * r + g * g + b * b) / l1;
    out.intensity[i] = intensity;
    out.color.channel[0][i] = r / intensity;
    out.color.channel[1][i] = g / intensity;
    out.color.channel[2][i] = b / intensity;
  }
  return out;
}

/// x' = y^I * x^C per pixel, clipped to [0,1]. Clipping (not renormalizing)
/// keeps the operation local when the product exceeds 1.
inline ImageRGB recombine_luminance(const IntensityColorPair& input_pair,
                                    const IntensityColorPair& filtered_pair) {
  if (!input_pair.intensity.same_size(filtered_pair.intensity))
    throw Error(errc::invalid_input, "luminance pair size mismatch");
  const int w = input_pair.intensity.width(), h = input_pair.intensity.height();
  ImageRGB out(w, h);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const double yi = input_pair.intensity[i];
    for (int c = 0; c < 3; ++c) {
      out.channel[c][i] =
          std::clamp(yi * filtered_pair.color.channel[c][i], 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace facegrade
