#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "facegrade/image.hpp"

namespace facegrade {

/// Offsets of the discrete Euclidean disc {(dx,dy) : dx^2+dy^2 <= r^2}.
inline std::vector<std::pair<int, int>> disc_offsets(int radius) {
  std::vector<std::pair<int, int>> out;
  const long r2 = static_cast<long>(radius) * radius;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy <= r2)
        out.emplace_back(dx, dy);
  return out;
}

/// Morphological dilation with a disc structuring element. A pixel is set
/// in the output iff some input pixel lies within Euclidean distance
/// <= radius, so the output always contains the input.
inline RegionMask dilate_disc(const RegionMask& mask, int radius) {
  if (radius < 0) throw Error(errc::invalid_input, "dilation radius must be >= 0");
  const int w = mask.width(), h = mask.height();
  RegionMask out(w, h);
  const auto offsets = disc_offsets(radius);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.test(x, y)) continue;
      for (const auto& [dx, dy] : offsets) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && nx < w && ny >= 0 && ny < h) out.set(nx, ny, true);
      }
    }
  }
  return out;
}

/// 4-connected components of an integer label map. Two pixels share a
/// component iff they are joined by a 4-connected path of equal labels.
/// Component ids follow row-major discovery order.
struct Components {
  std::vector<std::int32_t> id_map;               // per pixel
  std::vector<std::vector<std::int32_t>> members;  // linear pixel indices
  int width = 0, height = 0;
};

inline Components connected_components(const std::vector<int>& labels, int width,
                                       int height) {
  if (labels.size() != static_cast<std::size_t>(width) * height)
    throw Error(errc::invalid_input, "label map size mismatch");

  Components out;
  out.width = width;
  out.height = height;
  out.id_map.assign(labels.size(), -1);

  std::vector<std::int32_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (out.id_map[start] >= 0) continue;
    const std::int32_t id = static_cast<std::int32_t>(out.members.size());
    out.members.emplace_back();
    const int label = labels[start];
    stack.push_back(static_cast<std::int32_t>(start));
    out.id_map[start] = id;
    while (!stack.empty()) {
      const std::int32_t p = stack.back();
      stack.pop_back();
      out.members[id].push_back(p);
      const int x = p % width, y = p / width;
      const std::int32_t nb[4] = {p - 1, p + 1, p - width, p + width};
      const bool ok[4] = {x > 0, x < width - 1, y > 0, y < height - 1};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const std::int32_t q = nb[k];
        if (out.id_map[q] < 0 && labels[q] == label) {
          out.id_map[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  return out;
}

inline Components connected_components(const RegionMask& mask) {
  std::vector<int> labels(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) labels[i] = mask.test(i) ? 1 : 0;
  return connected_components(labels, mask.width(), mask.height());
}

}  // namespace facegrade
