#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "facegrade/faceprep.hpp"
#include "facegrade/image.hpp"
#include "facegrade/rng.hpp"

namespace facegrade {

// Deterministic synthetic portrait scenes: an elliptical face with radial
// shading, a dark hair cap, a neck joining a clothes block, and a flat
// wall. Used by the bundled test corpus and the demo corpus generator.
// Shading multiplies RGB uniformly, which leaves hue and saturation
// unchanged; small per-channel noise makes hue values distinct enough for
// clustering.

struct PortraitSpec {
  int width = 360, height = 440;
  std::array<double, 3> skin_color = {0.85, 0.62, 0.50};
  std::array<double, 3> wall_color = {0.62, 0.66, 0.72};
  std::array<double, 3> hair_color = {0.16, 0.12, 0.19};
  std::array<double, 3> clothes_color = {0.25, 0.45, 0.28};
  int face_center_x = 180, face_center_y = 190;
  int face_rx = 55, face_ry = 75;
  int neck_half_width = 20;
  int neck_gap = 4;        // rows between the face bottom and the torso top
  int hair_pad_x = 12;     // hair ellipse growth over the face ellipse
  int hair_pad_y = 14;
  double torso_width_factor = 2.4;  // torso half-width = factor * face_rx
  double shading = 0.22;            // radial value falloff on the face
  double noise_amplitude = 0.008;
  std::uint64_t noise_seed = 7;
  double candidate_size = 40.0;  // detector box side fed to the face window
};

inline ImageRGB render_portrait(const PortraitSpec& spec) {
  const int w = spec.width, h = spec.height;
  const int cx = spec.face_center_x, cy = spec.face_center_y;
  ImageRGB img(w, h);

  const auto put = [&](int x, int y, const std::array<double, 3>& c) {
    for (int ch = 0; ch < 3; ++ch) img.channel[ch].at(x, y) = c[ch];
  };
  const auto inside_ellipse = [](int x, int y, int ex, int ey, int rx, int ry) {
    const double dx = static_cast<double>(x - ex) / rx;
    const double dy = static_cast<double>(y - ey) / ry;
    return dx * dx + dy * dy <= 1.0;
  };

  const int face_bottom = cy + spec.face_ry;
  const int torso_top = face_bottom + spec.neck_gap;
  const int torso_half = static_cast<int>(spec.torso_width_factor * spec.face_rx);
  const int hair_cx = cx;
  const int hair_cy = cy - static_cast<int>(spec.face_ry * 0.45);
  const int hair_rx = spec.face_rx + spec.hair_pad_x;
  const int hair_ry = static_cast<int>(spec.face_ry * 0.75) + spec.hair_pad_y;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      put(x, y, spec.wall_color);
      if (y >= torso_top && std::abs(x - cx) <= torso_half)
        put(x, y, spec.clothes_color);
      if (y >= face_bottom - 8 && y < torso_top &&
          std::abs(x - cx) <= spec.neck_half_width)
        put(x, y, spec.skin_color);
      if (inside_ellipse(x, y, hair_cx, hair_cy, hair_rx, hair_ry))
        put(x, y, spec.hair_color);
      if (inside_ellipse(x, y, cx, cy, spec.face_rx, spec.face_ry)) {
        const double dx = static_cast<double>(x - cx) / spec.face_rx;
        const double dy = static_cast<double>(y - cy) / spec.face_ry;
        const double factor = 1.0 - spec.shading * (dx * dx + dy * dy);
        put(x, y,
            {spec.skin_color[0] * factor, spec.skin_color[1] * factor,
             spec.skin_color[2] * factor});
      }
    }
  }

  Rng rng(spec.noise_seed);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double n = spec.noise_amplitude * (rng.uniform01() - 0.5) * 2.0;
      img.channel[c][i] = std::clamp(img.channel[c][i] + n, 0.0, 1.0);
    }
  }
  return img;
}

/// Jittered detector boxes around the face center, deterministic for a
/// given spec.
inline std::vector<RectCandidate> portrait_candidates(const PortraitSpec& spec,
                                                      int count = 5,
                                                      double jitter = 3.0) {
  Rng rng(spec.noise_seed ^ 0x5deece66dull);
  std::vector<RectCandidate> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    RectCandidate c;
    c.x = spec.face_center_x + jitter * (rng.uniform01() - 0.5) * 2.0;
    c.y = spec.face_center_y + jitter * (rng.uniform01() - 0.5) * 2.0;
    c.w = spec.candidate_size + jitter * (rng.uniform01() - 0.5) * 2.0;
    c.h = spec.candidate_size + jitter * (rng.uniform01() - 0.5) * 2.0;
    out.push_back(c);
  }
  return out;
}

/// Ready-made scenes for the bundled corpus.
namespace corpus {

/// Neutral-skin reference portrait.
inline PortraitSpec target_spec() {
  PortraitSpec s;
  s.noise_seed = 11;
  return s;
}

/// Blue-tinted skin on a warm wall; the headline correction case.
inline PortraitSpec tinted_input_spec() {
  PortraitSpec s;
  s.skin_color = {0.52, 0.58, 0.74};
  s.wall_color = {0.78, 0.70, 0.60};
  s.clothes_color = {0.30, 0.50, 0.33};
  s.hair_color = {0.17, 0.13, 0.20};
  s.face_center_x = 176;
  s.face_center_y = 194;
  s.noise_seed = 23;
  return s;
}

/// Near-neutral skin on a saturated skin-toned wall; the yearbook /
/// matting stress case. The torso is narrow so the crop corners stay on
/// the wall.
inline PortraitSpec skin_wall_input_spec() {
  PortraitSpec s;
  s.skin_color = {0.85, 0.62, 0.50};
  s.wall_color = {0.80, 0.48, 0.26};
  s.clothes_color = {0.26, 0.44, 0.30};
  s.hair_color = {0.15, 0.12, 0.18};
  s.face_center_x = 182;
  s.face_center_y = 188;
  s.torso_width_factor = 1.1;
  s.noise_seed = 31;
  return s;
}

}  // namespace corpus
}  // namespace facegrade
