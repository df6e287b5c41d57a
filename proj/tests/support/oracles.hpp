// Independent reference implementations used as test oracles. These stay
// deliberately naive (dense matrices, direct double loops, QR least
// squares) and never share code with the library paths they check.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <vector>

#include "facegrade/gifopt.hpp"
#include "facegrade/image.hpp"

namespace oracles {

using facegrade::ImageRGB;
using facegrade::Plane;
using facegrade::RegionMask;

// --- windowed statistics ---------------------------------------------------

/// O(n k^2) brute-force windowed sum with border clipping.
inline Plane brute_force_box_sum(const Plane& p, int radius) {
  Plane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      double s = 0.0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx >= 0 && nx < p.width() && ny >= 0 && ny < p.height())
            s += p.at(nx, ny);
        }
      out.at(x, y) = s;
    }
  return out;
}

// --- connected components --------------------------------------------------

/// BFS flood fill; returns a component id per pixel (row-major discovery).
inline std::vector<int> flood_fill_components(const std::vector<int>& labels,
                                              int width, int height) {
  std::vector<int> ids(labels.size(), -1);
  int next = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (ids[s] >= 0) continue;
    std::deque<std::size_t> queue{s};
    ids[s] = next;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      const int x = static_cast<int>(p % width), y = static_cast<int>(p / width);
      const auto visit = [&](int nx, int ny) {
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) return;
        const std::size_t q = static_cast<std::size_t>(ny) * width + nx;
        if (ids[q] < 0 && labels[q] == labels[p]) {
          ids[q] = next;
          queue.push_back(q);
        }
      };
      visit(x - 1, y);
      visit(x + 1, y);
      visit(x, y - 1);
      visit(x, y + 1);
    }
    ++next;
  }
  return ids;
}

// --- quantile mapping ------------------------------------------------------

/// Exact sorting-based quantile map: mid-rank source quantiles inverted
/// through the interpolated target order statistics.
inline std::vector<double> sorting_quantile_map(const std::vector<double>& src,
                                                const std::vector<double>& tgt) {
  std::vector<double> src_sorted = src, tgt_sorted = tgt;
  std::sort(src_sorted.begin(), src_sorted.end());
  std::sort(tgt_sorted.begin(), tgt_sorted.end());
  const std::size_t n = src_sorted.size(), m = tgt_sorted.size();

  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src[i];
    const auto lo = std::lower_bound(src_sorted.begin(), src_sorted.end(), v);
    const auto hi = std::upper_bound(src_sorted.begin(), src_sorted.end(), v);
    const double less = static_cast<double>(lo - src_sorted.begin());
    const double equal = static_cast<double>(hi - lo);
    const double u = (less + 0.5 * equal) / n;

    double pos = u * m - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(m - 1));
    const std::size_t j = static_cast<std::size_t>(pos);
    const std::size_t j1 = std::min(j + 1, m - 1);
    const double frac = pos - j;
    out[i] = (1.0 - frac) * tgt_sorted[j] + frac * tgt_sorted[j1];
  }
  return out;
}

// --- matting Laplacian -----------------------------------------------------

/// Dense closed-form matting Laplacian, built element by element:
/// L[j,k] = sum over windows containing both pixels of
/// delta_jk - (1/|w|)(1 + (y_j - mu)^T Delta^{-1} (y_k - mu)).
inline Eigen::MatrixXd dense_matting_laplacian(const ImageRGB& y, int window_side,
                                               double epsilon) {
  const int w = y.width(), h = y.height();
  const int radius = window_side / 2;
  const int n = w * h;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);

  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      const int x0 = std::max(cx - radius, 0), x1 = std::min(cx + radius, w - 1);
      const int y0 = std::max(cy - radius, 0), y1 = std::min(cy + radius, h - 1);
      std::vector<int> members;
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) members.push_back(yy * w + xx);
      const double wn = static_cast<double>(members.size());

      Eigen::Vector3d mu = Eigen::Vector3d::Zero();
      for (int p : members)
        mu += Eigen::Vector3d(y.channel[0][p], y.channel[1][p], y.channel[2][p]);
      mu /= wn;

      Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
      for (int p : members) {
        const Eigen::Vector3d c(y.channel[0][p], y.channel[1][p], y.channel[2][p]);
        sigma += (c - mu) * (c - mu).transpose();
      }
      sigma /= wn;
      const Eigen::Matrix3d delta =
          sigma + (epsilon / wn) * Eigen::Matrix3d::Identity();
      const Eigen::Matrix3d pinv = delta.inverse();

      for (int j : members) {
        const Eigen::Vector3d cj(y.channel[0][j], y.channel[1][j], y.channel[2][j]);
        for (int k : members) {
          const Eigen::Vector3d ck(y.channel[0][k], y.channel[1][k],
                                   y.channel[2][k]);
          const double corr =
              (1.0 + (cj - mu).dot(pinv * (ck - mu))) / wn;
          lap(j, k) += (j == k ? 1.0 : 0.0) - corr;
        }
      }
    }
  }
  return lap;
}

// --- per-window least squares ----------------------------------------------

struct WindowFit {
  Eigen::Matrix3d a;
  Eigen::Vector3d b;
};

/// Ridge least squares for one window, solved through the raw design
/// matrix with QR (the intercept is not regularized).
inline WindowFit direct_window_fit(const ImageRGB& x, const ImageRGB& y, int cx,
                                   int cy, int window_side, double epsilon) {
  const int radius = window_side / 2;
  const int x0 = std::max(cx - radius, 0), x1 = std::min(cx + radius, x.width() - 1);
  const int y0 = std::max(cy - radius, 0), y1 = std::min(cy + radius, x.height() - 1);
  std::vector<int> members;
  for (int yy = y0; yy <= y1; ++yy)
    for (int xx = x0; xx <= x1; ++xx) members.push_back(yy * x.width() + xx);
  const int wn = static_cast<int>(members.size());

  Eigen::MatrixXd design(wn + 3, 4);
  for (int r = 0; r < wn; ++r) {
    const int p = members[r];
    design(r, 0) = y.channel[0][p];
    design(r, 1) = y.channel[1][p];
    design(r, 2) = y.channel[2][p];
    design(r, 3) = 1.0;
  }
  design.bottomRows(3).setZero();
  const double s = std::sqrt(epsilon);
  design(wn + 0, 0) = s;
  design(wn + 1, 1) = s;
  design(wn + 2, 2) = s;

  WindowFit fit;
  for (int ch = 0; ch < 3; ++ch) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(wn + 3);
    for (int r = 0; r < wn; ++r) rhs(r) = x.channel[ch][members[r]];
    const Eigen::Vector4d theta = design.colPivHouseholderQr().solve(rhs);
    fit.a.row(ch) = theta.head<3>().transpose();
    fit.b(ch) = theta(3);
  }
  return fit;
}

/// Raw data-fidelity sum: sum_i ( sum_{j in w_i} ||x_j - A_i y_j - b_i||^2
/// + eps ||A_i||_F^2 ) with per-window fits from the QR route.
inline double objective_direct_sum(const ImageRGB& x, const ImageRGB& y,
                                   int window_side, double epsilon) {
  const int radius = window_side / 2;
  double total = 0.0;
  for (int cy = 0; cy < x.height(); ++cy) {
    for (int cx = 0; cx < x.width(); ++cx) {
      const WindowFit fit = direct_window_fit(x, y, cx, cy, window_side, epsilon);
      const int x0 = std::max(cx - radius, 0),
                x1 = std::min(cx + radius, x.width() - 1);
      const int y0 = std::max(cy - radius, 0),
                y1 = std::min(cy + radius, x.height() - 1);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) {
          const int p = yy * x.width() + xx;
          const Eigen::Vector3d xv(x.channel[0][p], x.channel[1][p],
                                   x.channel[2][p]);
          const Eigen::Vector3d yv(y.channel[0][p], y.channel[1][p],
                                   y.channel[2][p]);
          total += (xv - fit.a * yv - fit.b).squaredNorm();
        }
      total += epsilon * fit.a.squaredNorm();
    }
  }
  return total;
}

// --- finite differences ----------------------------------------------------

/// Smooth objective through the library's evaluation path (fresh fit each
/// call); its agreement with objective_direct_sum is tested separately.
inline double eval_smooth_objective(const ImageRGB& x, const ImageRGB& y,
                                    int window_side, double epsilon,
                                    facegrade::LocalLinearModel& model,
                                    facegrade::PlaneTriple& scratch) {
  model.fit(x, y, window_side, epsilon);
  facegrade::grad_f(x, y, model, scratch);
  double s = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < x.pixel_count(); ++i)
      s += x.channel[c][i] * scratch.channel[c][i];
  return 0.5 * s;
}

inline facegrade::PlaneTriple fd_gradient(const ImageRGB& x, const ImageRGB& y,
                                          int window_side, double epsilon,
                                          double h = 1e-5) {
  facegrade::LocalLinearModel model;
  facegrade::PlaneTriple scratch;
  facegrade::PlaneTriple out(x.width(), x.height());
  ImageRGB probe = x;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < x.pixel_count(); ++i) {
      const double base = x.channel[c][i];
      probe.channel[c][i] = base + h;
      const double fp =
          eval_smooth_objective(probe, y, window_side, epsilon, model, scratch);
      probe.channel[c][i] = base - h;
      const double fm =
          eval_smooth_objective(probe, y, window_side, epsilon, model, scratch);
      probe.channel[c][i] = base;
      out.channel[c][i] = (fp - fm) / (2.0 * h);
    }
  }
  return out;
}

// --- circular k-means ------------------------------------------------------

inline double circular_kmeans_cost(const std::vector<double>& hues,
                                   const std::vector<int>& assign, int k) {
  std::vector<double> sx(k, 0.0), sy(k, 0.0);
  std::vector<int> cnt(k, 0);
  for (std::size_t i = 0; i < hues.size(); ++i) {
    const double a = 2.0 * M_PI * hues[i];
    sx[assign[i]] += std::cos(a);
    sy[assign[i]] += std::sin(a);
    ++cnt[assign[i]];
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < hues.size(); ++i) {
    const int c = assign[i];
    const double norm = std::hypot(sx[c], sy[c]);
    double cxv = 1.0, cyv = 0.0;
    if (norm > 0.0) {
      cxv = sx[c] / norm;
      cyv = sy[c] / norm;
    }
    const double a = 2.0 * M_PI * hues[i];
    const double dx = std::cos(a) - cxv, dy = std::sin(a) - cyv;
    cost += dx * dx + dy * dy;
  }
  return cost;
}

/// Global optimum of the circular k-means objective by enumerating all k^n
/// assignments. Only sane for n <= 12, k <= 3.
inline double exhaustive_kmeans_optimum(const std::vector<double>& hues, int k) {
  const std::size_t n = hues.size();
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = static_cast<int>(c % k);
      c /= k;
    }
    best = std::min(best, circular_kmeans_cost(hues, assign, k));
  }
  return best;
}

}  // namespace oracles
