#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "facegrade/color.hpp"
#include "facegrade/image.hpp"
#include "facegrade/morphology.hpp"
#include "facegrade/rng.hpp"

namespace facegrade {

// Skin extraction: k-means clustering of the hue distribution of the whole
// image, component selection near the face window, then saturation/value
// thresholding. Hue is circular, so clustering runs on the unit-circle
// embedding (cos 2*pi*h, sin 2*pi*h); skin hues straddle the wrap at h=0
// and a plain 1-D clustering would split them.

struct HueClusterModel {
  int k = 0;
  int width = 0, height = 0;
  std::vector<double> centers;      // hue values in [0,1)
  std::vector<int> assignment;      // per pixel, 0..k-1
  std::uint64_t seed = 0;
  std::vector<double> cost_history; // within-cluster squared chord distance
};

namespace detail {

struct UnitVec {
  double x, y;
};

inline UnitVec hue_to_vec(double h) {
  const double a = 2.0 * M_PI * h;
  return {std::cos(a), std::sin(a)};
}

inline double vec_to_hue(double x, double y) {
  double h = std::atan2(y, x) / (2.0 * M_PI);
  if (h < 0.0) h += 1.0;
  if (h >= 1.0) h -= 1.0;
  return h;
}

inline double chord_sq(const UnitVec& a, const UnitVec& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace detail

namespace detail {

struct LloydRun {
  std::vector<UnitVec> centers;
  std::vector<int> assignment;
  std::vector<double> cost_history;
  double final_cost = 0.0;
};

inline LloydRun lloyd_once(const std::vector<UnitVec>& pts, int k, Rng& rng) {
  const std::size_t n = pts.size();
  LloydRun run;
  run.centers.reserve(k);

  // k-means++ seeding: D^2 sampling against the nearest chosen center.
  run.centers.push_back(pts[rng.index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = chord_sq(pts[i], run.centers[0]);
  while (static_cast<int>(run.centers.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    run.centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], chord_sq(pts[i], run.centers.back()));
  }

  run.assignment.assign(n, 0);
  std::vector<double> sum_x(k), sum_y(k);
  std::vector<std::size_t> count(k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = chord_sq(pts[i], run.centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = chord_sq(pts[i], run.centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (run.assignment[i] != best) {
        run.assignment[i] = best;
        changed = true;
      }
    }

    std::fill(sum_x.begin(), sum_x.end(), 0.0);
    std::fill(sum_y.begin(), sum_y.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = run.assignment[i];
      sum_x[c] += pts[i].x;
      sum_y[c] += pts[i].y;
      ++count[c];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // empty cluster keeps its center
      const double norm = std::hypot(sum_x[c], sum_y[c]);
      if (norm > 0.0) run.centers[c] = {sum_x[c] / norm, sum_y[c] / norm};
    }

    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      cost += chord_sq(pts[i], run.centers[run.assignment[i]]);
    run.cost_history.push_back(cost);

    if (!changed && iter > 0) break;
  }
  run.final_cost = run.cost_history.back();
  return run;
}

}  // namespace detail

/// k-means with k-means++ seeding on the hue circle. Lloyd iterations run
/// until assignments are stable or 100 iterations; several seeded restarts
/// are taken and the lowest-cost run wins, which keeps single runs out of
/// shallow local optima. Deterministic under a fixed seed. Centers are
/// circular means of their members.
inline HueClusterModel kmeans_hue(const Plane& hues, int k, std::uint64_t seed,
                                  int restarts = 8) {
  const std::size_t n = hues.size();
  if (k < 1) throw Error(errc::invalid_input, "cluster count must be >= 1");
  if (restarts < 1) throw Error(errc::invalid_input, "restarts must be >= 1");
  {
    std::vector<double> distinct(hues.data(), hues.data() + n);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<std::size_t>(k) > distinct.size())
      throw Error(errc::invalid_input,
                  "cluster count exceeds number of distinct hues");
  }

  std::vector<detail::UnitVec> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = detail::hue_to_vec(hues[i]);

  Rng rng(seed);
  detail::LloydRun best;
  for (int attempt = 0; attempt < restarts; ++attempt) {
    detail::LloydRun run = detail::lloyd_once(pts, k, rng);
    if (attempt == 0 || run.final_cost < best.final_cost) best = std::move(run);
  }

  HueClusterModel model;
  model.k = k;
  model.width = hues.width();
  model.height = hues.height();
  model.seed = seed;
  model.assignment = std::move(best.assignment);
  model.cost_history = std::move(best.cost_history);
  model.centers.resize(k);
  for (int c = 0; c < k; ++c)
    model.centers[c] = detail::vec_to_hue(best.centers[c].x, best.centers[c].y);
  return model;
}

/// Selects the skin hue region: the modal cluster label inside the face
/// window, as the union of that label's connected components that have at
/// least 10% of their own area inside the window.
inline RegionMask skin_hue_region(const HueClusterModel& model,
                                  const RegionMask& face_window,
                                  double overlap_min = 0.10) {
  if (face_window.width() != model.width || face_window.height() != model.height)
    throw Error(errc::invalid_input, "face window does not match cluster model");
  if (face_window.empty())
    throw Error(errc::invalid_input, "empty face window");

  std::vector<std::size_t> votes(model.k, 0);
  for (std::size_t i = 0; i < face_window.size(); ++i)
    if (face_window.test(i)) ++votes[model.assignment[i]];
  int modal = 0;
  for (int c = 1; c < model.k; ++c)
    if (votes[c] > votes[modal]) modal = c;

  const Components comps =
      connected_components(model.assignment, model.width, model.height);

  RegionMask out(model.width, model.height);
  for (const auto& members : comps.members) {
    if (model.assignment[members.front()] != modal) continue;
    std::size_t overlap = 0;
    for (std::int32_t p : members)
      if (face_window.test(static_cast<std::size_t>(p))) ++overlap;
    if (static_cast<double>(overlap) >= overlap_min * members.size() &&
        overlap > 0) {
      for (std::int32_t p : members) out.set(static_cast<std::size_t>(p), true);
    }
  }
  return out;
}

/// Lower median of saturation over a mask.
inline double median_saturation(const ImageHSV& hsv, const RegionMask& mask) {
  std::vector<double> s;
  s.reserve(mask.count());
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.test(i)) s.push_back(hsv.s()[i]);
  if (s.empty())
    throw Error(errc::invalid_input, "cannot take median over empty region");
  std::sort(s.begin(), s.end());
  return s[(s.size() - 1) / 2];
}

/// Saturation/value thresholding of the hue region: keeps pixels with
/// saturation within +-sat_band of the face-window median and value within
/// [value_min, value_max], bounds inclusive. The result may be empty;
/// downstream stages reject that case.
inline RegionMask refine_sv(const RegionMask& hue_region, const ImageHSV& hsv,
                            const RegionMask& face_window, double sat_band = 0.2,
                            double value_min = 0.15, double value_max = 0.95) {
  const double s_hat = median_saturation(hsv, face_window);
  RegionMask out(hue_region.width(), hue_region.height());
  for (std::size_t i = 0; i < hue_region.size(); ++i) {
    if (!hue_region.test(i)) continue;
    const double s = hsv.s()[i];
    const double v = hsv.v()[i];
    if (s >= s_hat - sat_band && s <= s_hat + sat_band && v >= value_min &&
        v <= value_max)
      out.set(i, true);
  }
  return out;
}

/// The region system derived from the skin region: its disc dilation, the
/// background (complement of the dilation), and the free boundary band
/// between them. The three parts partition the pixel set.
struct RegionSystem {
  RegionMask skin;          // Omega_S
  RegionMask skin_dilated;  // Omega'_S
  RegionMask background;    // Omega_B
  RegionMask boundary;      // Omega_dS
  double median_saturation = 0.0;
};

inline RegionSystem build_regions(const RegionMask& skin, double median_sat = 0.0,
                                  int dilation_radius = 20) {
  RegionSystem sys;
  sys.skin = skin;
  sys.skin_dilated = dilate_disc(skin, dilation_radius);
  sys.background = sys.skin_dilated.complement();
  sys.boundary = mask_difference(sys.skin_dilated, skin);
  sys.median_saturation = median_sat;
  return sys;
}

}  // namespace facegrade
