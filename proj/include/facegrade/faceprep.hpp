#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "facegrade/image.hpp"

namespace facegrade {

/// One externally supplied face-detector candidate: barycentric center
/// (x,y) and rectangle size (w,h), all in pixels.
struct RectCandidate {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

/// Final face area: coordinate-wise median of the candidates plus the
/// derived square working window.
struct FaceArea {
  double center_x = 0.0, center_y = 0.0;
  double base_w = 0.0;
  double base_h = 0.0;  // carried but unused by the window formula
  int window_side = 0;  // before clipping; always odd
  PixelRect window;     // clipped to the image
  RegionMask window_mask;
};

inline std::vector<RectCandidate> load_candidates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::invalid_input, "cannot open candidates file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::invalid_input,
                "malformed candidates file " + path + ": " + e.what());
  }
  if (!j.is_array())
    throw Error(errc::invalid_input, "candidates file must hold a JSON array");
  std::vector<RectCandidate> out;
  for (const auto& item : j) {
    RectCandidate c;
    try {
      c.x = item.at("x").get<double>();
      c.y = item.at("y").get<double>();
      c.w = item.at("w").get<double>();
      c.h = item.at("h").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::invalid_input,
                  "candidate entry missing field: " + std::string(e.what()));
    }
    out.push_back(c);
  }
  return out;
}

inline void validate_candidates(std::span<const RectCandidate> cands, int width,
                                int height) {
  for (const auto& c : cands) {
    if (!(c.w > 0.0) || !(c.h > 0.0))
      throw Error(errc::invalid_input, "candidate with non-positive size");
    if (c.x < 0.0 || c.x >= width || c.y < 0.0 || c.y >= height)
      throw Error(errc::invalid_input, "candidate center outside image bounds");
  }
}

namespace detail {

/// Lower median: for even counts the smaller of the two middle values, so
/// the result always equals an actual sample.
inline double lower_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace detail

struct MedianRect {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

/// Coordinate-wise median of the candidate rectangles.
inline MedianRect aggregate_candidates(std::span<const RectCandidate> cands) {
  if (cands.empty()) throw Error(errc::invalid_input, "no face candidates");
  std::vector<double> xs, ys, ws, hs;
  xs.reserve(cands.size());
  ys.reserve(cands.size());
  ws.reserve(cands.size());
  hs.reserve(cands.size());
  for (const auto& c : cands) {
    xs.push_back(c.x);
    ys.push_back(c.y);
    ws.push_back(c.w);
    hs.push_back(c.h);
  }
  return {detail::lower_median(std::move(xs)), detail::lower_median(std::move(ys)),
          detail::lower_median(std::move(ws)), detail::lower_median(std::move(hs))};
}

/// Square working window of side round(2*l*w)+1 centered on the median
/// center, clipped to the image. A non-integer size rounds half-up; an
/// even result is bumped to the next odd value so a center pixel exists.
inline FaceArea face_window(const MedianRect& rect, double scale_factor,
                            int image_width, int image_height) {
  if (!(scale_factor > 0.0))
    throw Error(errc::invalid_input, "scale factor must be positive");
  FaceArea area;
  area.center_x = rect.x;
  area.center_y = rect.y;
  area.base_w = rect.w;
  area.base_h = rect.h;

  int side = round_half_up(2.0 * scale_factor * rect.w) + 1;
  if (side % 2 == 0) ++side;
  area.window_side = side;

  const int cx = round_half_up(rect.x);
  const int cy = round_half_up(rect.y);
  const int half = side / 2;
  area.window = PixelRect{cx - half, cy - half, cx + half, cy + half}.clipped(
      image_width, image_height);
  area.window_mask = mask_from_rect(image_width, image_height, area.window);
  return area;
}

/// Crops the working window and resamples it to out_side x out_side with
/// bilinear interpolation. Sampling clamps at the crop border.
inline ImageRGB crop_resize(const ImageRGB& img, const FaceArea& area,
                            int out_side) {
  if (out_side < 1) throw Error(errc::invalid_input, "output side must be >= 1");
  const PixelRect crop = area.window.clipped(img.width(), img.height());
  if (crop.empty()) throw Error(errc::invalid_input, "degenerate crop window");

  const int cw = crop.width(), ch = crop.height();
  ImageRGB out(out_side, out_side);
  const double sx = static_cast<double>(cw) / out_side;
  const double sy = static_cast<double>(ch) / out_side;
  for (int y = 0; y < out_side; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(ch - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, ch - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_side; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(cw - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, cw - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const Plane& src = img.channel[c];
        const double v00 = src.at(crop.x0 + x0, crop.y0 + y0);
        const double v10 = src.at(crop.x0 + x1, crop.y0 + y0);
        const double v01 = src.at(crop.x0 + x0, crop.y0 + y1);
        const double v11 = src.at(crop.x0 + x1, crop.y0 + y1);
        out.channel[c].at(x, y) = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) +
                                  wy * ((1.0 - wx) * v01 + wx * v11);
      }
    }
  }
  return out;
}

}  // namespace facegrade
