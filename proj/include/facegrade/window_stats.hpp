#pragma once

#include <map>
#include <utility>
#include <vector>

#include "facegrade/image.hpp"

namespace facegrade {

// Windowed statistics over clipped square windows. Windows are clipped at
// the image border and |w_i| is reported per pixel; nothing is padded, so
// means divide by the true in-window count.
//
// Accumulation order is fixed: the summed-area table is built row-major
// (left to right, top to bottom), which makes every windowed sum
// bit-reproducible across runs.

class SummedAreaTable {
 public:
  SummedAreaTable() = default;
  explicit SummedAreaTable(const Plane& p) { build(p.data(), p.width(), p.height()); }

  void build(const double* src, int width, int height) {
    width_ = width;
    height_ = height;
    table_.assign(static_cast<std::size_t>(width + 1) * (height + 1), 0.0);
    const int stride = width + 1;
    for (int y = 0; y < height; ++y) {
      double* row = table_.data() + static_cast<std::size_t>(y + 1) * stride;
      const double* prev = row - stride;
      const double* s = src + static_cast<std::size_t>(y) * width;
      for (int x = 0; x < width; ++x) {
        row[x + 1] = s[x] + prev[x + 1] + row[x] - prev[x];
      }
    }
  }

  /// Builds from the elementwise product a*b without materializing it.
  void build_product(const double* a, const double* b, int width, int height) {
    width_ = width;
    height_ = height;
    table_.assign(static_cast<std::size_t>(width + 1) * (height + 1), 0.0);
    const int stride = width + 1;
    for (int y = 0; y < height; ++y) {
      double* row = table_.data() + static_cast<std::size_t>(y + 1) * stride;
      const double* prev = row - stride;
      const std::size_t off = static_cast<std::size_t>(y) * width;
      for (int x = 0; x < width; ++x) {
        row[x + 1] = a[off + x] * b[off + x] + prev[x + 1] + row[x] - prev[x];
      }
    }
  }

  /// Sum over the inclusive rectangle [x0,x1]x[y0,y1]; caller clips.
  double window_sum(int x0, int y0, int x1, int y1) const {
    const int stride = width_ + 1;
    const double* t = table_.data();
    return t[static_cast<std::size_t>(y1 + 1) * stride + (x1 + 1)] -
           t[static_cast<std::size_t>(y0) * stride + (x1 + 1)] -
           t[static_cast<std::size_t>(y1 + 1) * stride + x0] +
           t[static_cast<std::size_t>(y0) * stride + x0];
  }

  void extract_box_sums(int radius, Plane& out) const {
    if (!out.same_size_dims(width_, height_)) out = Plane(width_, height_);
    for (int y = 0; y < height_; ++y) {
      const int y0 = std::max(y - radius, 0);
      const int y1 = std::min(y + radius, height_ - 1);
      for (int x = 0; x < width_; ++x) {
        const int x0 = std::max(x - radius, 0);
        const int x1 = std::min(x + radius, width_ - 1);
        out.at(x, y) = window_sum(x0, y0, x1, y1);
      }
    }
  }

 private:
  int width_ = 0, height_ = 0;
  std::vector<double> table_;
};

/// Per-pixel count of in-bounds pixels of the clipped square window.
inline Plane window_counts(int width, int height, int radius) {
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    const int ny = std::min(y + radius, height - 1) - std::max(y - radius, 0) + 1;
    for (int x = 0; x < width; ++x) {
      const int nx = std::min(x + radius, width - 1) - std::max(x - radius, 0) + 1;
      out.at(x, y) = static_cast<double>(nx) * ny;
    }
  }
  return out;
}

/// Reusable workspace for repeated box sums over same-size planes.
class BoxFilter {
 public:
  BoxFilter(int width, int height) : width_(width), height_(height) {}

  void sums(const Plane& src, int radius, Plane& out) {
    sat_.build(src.data(), width_, height_);
    sat_.extract_box_sums(radius, out);
  }

  void product_sums(const Plane& a, const Plane& b, int radius, Plane& out) {
    sat_.build_product(a.data(), b.data(), width_, height_);
    sat_.extract_box_sums(radius, out);
  }

  const Plane& counts(int radius) {
    auto it = counts_cache_.find(radius);
    if (it == counts_cache_.end())
      it = counts_cache_.emplace(radius, window_counts(width_, height_, radius)).first;
    return it->second;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  int width_, height_;
  SummedAreaTable sat_;
  std::map<int, Plane> counts_cache_;
};

inline Plane box_sum(const Plane& src, int radius) {
  Plane out(src.width(), src.height());
  SummedAreaTable sat(src);
  sat.extract_box_sums(radius, out);
  return out;
}

/// Windowed sums of one or more planes and of requested pairwise products.
struct WindowStats {
  int width = 0, height = 0;
  int window_side = 0;
  Plane counts;                                   // |w_i|
  std::vector<Plane> sums;                        // one per input plane
  std::vector<Plane> product_sums;                // one per requested pair
  std::vector<std::pair<int, int>> product_pairs;

  double mean(int plane, int x, int y) const {
    return sums[plane].at(x, y) / counts.at(x, y);
  }
};

inline WindowStats windowed_sums(
    const std::vector<const Plane*>& planes, int window_side,
    const std::vector<std::pair<int, int>>& product_pairs = {}) {
  if (window_side < 1 || window_side % 2 == 0)
    throw Error(errc::invalid_input, "window side must be odd and positive");
  if (planes.empty())
    throw Error(errc::invalid_input, "windowed_sums needs at least one plane");

  const int w = planes[0]->width(), h = planes[0]->height();
  const int radius = window_side / 2;

  WindowStats out;
  out.width = w;
  out.height = h;
  out.window_side = window_side;
  out.counts = window_counts(w, h, radius);
  out.product_pairs = product_pairs;

  BoxFilter filter(w, h);
  out.sums.resize(planes.size());
  for (std::size_t i = 0; i < planes.size(); ++i)
    filter.sums(*planes[i], radius, out.sums[i]);
  out.product_sums.resize(product_pairs.size());
  for (std::size_t i = 0; i < product_pairs.size(); ++i) {
    const auto [a, b] = product_pairs[i];
    filter.product_sums(*planes[a], *planes[b], radius, out.product_sums[i]);
  }
  return out;
}

}  // namespace facegrade
