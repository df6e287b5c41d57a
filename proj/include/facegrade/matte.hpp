#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "facegrade/faceprep.hpp"
#include "facegrade/gifopt.hpp"
#include "facegrade/image.hpp"
#include "facegrade/morphology.hpp"
#include "facegrade/window_stats.hpp"

namespace facegrade {

// Fore/background separation by closed-form matting with iterative region
// growing. The matting Laplacian reuses the same windowed machinery as the
// guided filter, with a scalar output channel; the linear system
// (L + lambda_c D) alpha = lambda_c v is solved by Jacobi-preconditioned
// conjugate gradient. Convention: alpha = 1 means foreground, and
// compositing blends y' = alpha*y + (1-alpha)*z.

struct Trimap {
  RegionMask foreground;  // seed pixels with alpha pinned to 1
  RegionMask background;  // seed pixels with alpha pinned to 0
};

struct AlphaMat {
  Plane alpha;  // in [0,1]; 1 = foreground
};

struct MattingConfig {
  double lambda_c = 100.0;  // seed-pinning weight
  double epsilon = 1e-7;    // Laplacian regularizer
  double pcg_tol = 1e-6;    // relative residual
  int pcg_max_iters = 2000;
  int outer_iterations = 4;
  double grow_low = 0.2;   // alpha <= low joins the background seeds
  double grow_high = 0.8;  // alpha >= high joins the foreground seeds
  double sigmoid_slope = 10.0;
  double sigmoid_center = 0.5;
  int window_radius = 15;  // from the 31x31 matting window; halved per round
  // seed geometry
  double hair_value_threshold = 0.35;
  int clothes_erode_px = 5;
  double side_rect_width_frac = 0.1;
};

namespace detail {

/// Matting Laplacian of a color image at a fixed window radius, applied
/// matrix-free through the local linear coefficients of the operand.
class MattingKernel {
 public:
  MattingKernel(const ImageRGB& img, int radius, double epsilon)
      : img_(&img), radius_(radius), filter_(img.width(), img.height()) {
    const int w = img.width(), h = img.height();
    counts_ = window_counts(w, h, radius);

    for (int c = 0; c < 3; ++c) {
      filter_.sums(img.channel[c], radius, mean_[c]);
      for (std::size_t i = 0; i < mean_[c].size(); ++i) mean_[c][i] /= counts_[i];
    }

    std::array<Plane, 6> syy;
    int s = 0;
    for (int c = 0; c < 3; ++c)
      for (int d = c; d < 3; ++d)
        filter_.product_sums(img.channel[c], img.channel[d], radius, syy[s++]);

    for (auto& p : delta_inv_) p = Plane(w, h);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const double inv_n = 1.0 / counts_[i];
      std::array<double, 6> delta;
      int t = 0;
      for (int c = 0; c < 3; ++c)
        for (int d = c; d < 3; ++d) {
          delta[t] = syy[t][i] * inv_n - mean_[c][i] * mean_[d][i];
          if (c == d) delta[t] += epsilon * inv_n;
          ++t;
        }
      const auto inv = sym_inverse(delta);
      for (int k = 0; k < 6; ++k) delta_inv_[k][i] = inv[k];
    }
  }

  /// out = L p.
  void apply(const Plane& p, Plane& out) {
    const int w = img_->width(), h = img_->height();
    filter_.sums(p, radius_, sum_p_);
    for (int c = 0; c < 3; ++c)
      filter_.product_sums(img_->channel[c], p, radius_, sum_yp_[c]);

    for (int c = 0; c < 3; ++c)
      if (!a_[c].same_size_dims(w, h)) a_[c] = Plane(w, h);
    if (!b_.same_size_dims(w, h)) b_ = Plane(w, h);

    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const double inv_n = 1.0 / counts_[i];
      const double pbar = sum_p_[i] * inv_n;
      double cross[3];
      for (int c = 0; c < 3; ++c)
        cross[c] = sum_yp_[c][i] * inv_n - mean_[c][i] * pbar;
      double bi = pbar;
      for (int c = 0; c < 3; ++c) {
        double ac = 0.0;
        for (int k = 0; k < 3; ++k)
          ac += delta_inv_[sym_index(c, k)][i] * cross[k];
        a_[c][i] = ac;
        bi -= ac * mean_[c][i];
      }
      b_[i] = bi;
    }

    for (int c = 0; c < 3; ++c) filter_.sums(a_[c], radius_, sum_a_[c]);
    filter_.sums(b_, radius_, sum_b_);

    if (!out.same_size_dims(w, h)) out = Plane(w, h);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      out[i] = counts_[i] * p[i] -
               (sum_a_[0][i] * img_->channel[0][i] +
                sum_a_[1][i] * img_->channel[1][i] +
                sum_a_[2][i] * img_->channel[2][i] + sum_b_[i]);
    }
  }

  /// diag(L), exact: L_kk = |w_k| - sum_{i in w_k} (1/|w_i|)
  /// (1 + (y_k - mu_i)^T Delta_i^{-1} (y_k - mu_i)).
  Plane diagonal() {
    const int w = img_->width(), h = img_->height();
    Plane inv_n(w, h), m0(w, h);
    std::array<Plane, 3> q;
    std::array<Plane, 6> pn;
    for (auto& p : q) p = Plane(w, h);
    for (auto& p : pn) p = Plane(w, h);

    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const double in = 1.0 / counts_[i];
      inv_n[i] = in;
      double mu[3] = {mean_[0][i], mean_[1][i], mean_[2][i]};
      double s0 = 0.0;
      for (int c = 0; c < 3; ++c) {
        double qc = 0.0;
        for (int k = 0; k < 3; ++k)
          qc += delta_inv_[sym_index(c, k)][i] * mu[k];
        q[c][i] = qc * in;
        s0 += qc * mu[c];
      }
      m0[i] = s0 * in;
      for (int k = 0; k < 6; ++k) pn[k][i] = delta_inv_[k][i] * in;
    }

    Plane t1(w, h), sm0(w, h);
    std::array<Plane, 3> sq;
    std::array<Plane, 6> spn;
    filter_.sums(inv_n, radius_, t1);
    filter_.sums(m0, radius_, sm0);
    for (int c = 0; c < 3; ++c) filter_.sums(q[c], radius_, sq[c]);
    for (int k = 0; k < 6; ++k) filter_.sums(pn[k], radius_, spn[k]);

    Plane out(w, h);
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      const double y0 = img_->channel[0][i], y1 = img_->channel[1][i],
                   y2 = img_->channel[2][i];
      const double quad = y0 * y0 * spn[0][i] + 2.0 * y0 * y1 * spn[1][i] +
                          2.0 * y0 * y2 * spn[2][i] + y1 * y1 * spn[3][i] +
                          2.0 * y1 * y2 * spn[4][i] + y2 * y2 * spn[5][i];
      const double lin = y0 * sq[0][i] + y1 * sq[1][i] + y2 * sq[2][i];
      out[i] = counts_[i] - t1[i] - (quad - 2.0 * lin + sm0[i]);
    }
    return out;
  }

  const Plane& counts() const noexcept { return counts_; }

 private:
  const ImageRGB* img_;
  int radius_;
  BoxFilter filter_;
  Plane counts_;
  std::array<Plane, 3> mean_;
  std::array<Plane, 6> delta_inv_;
  Plane sum_p_, b_, sum_b_;
  std::array<Plane, 3> sum_yp_, a_, sum_a_;
};

}  // namespace detail

struct PcgDiagnostics {
  int iterations = 0;
  double residual = 0.0;              // final relative residual
  std::vector<double> energy;         // quadratic energy per iteration
};

/// Closed-form matting solve: (L + lambda_c D) alpha = lambda_c v with D
/// the seed indicator and v = 1 on foreground seeds. Jacobi-preconditioned
/// CG to the configured relative residual; the result is clamped to [0,1].
inline AlphaMat solve_alpha_pcg(const ImageRGB& img, const Trimap& trimap,
                                int window_radius, const MattingConfig& cfg,
                                const Plane* warm_start = nullptr,
                                PcgDiagnostics* diag = nullptr) {
  if (!trimap.foreground.same_size(trimap.background) ||
      trimap.foreground.width() != img.width() ||
      trimap.foreground.height() != img.height())
    throw Error(errc::invalid_input, "trimap does not match image");
  if (trimap.foreground.empty() || trimap.background.empty())
    throw Error(errc::invalid_input, "matting needs both seed kinds");
  if (!masks_disjoint(trimap.foreground, trimap.background))
    throw Error(errc::invalid_input, "foreground and background seeds overlap");

  const std::size_t n = img.pixel_count();
  detail::MattingKernel kernel(img, window_radius, cfg.epsilon);

  Plane rhs(img.width(), img.height());
  for (std::size_t i = 0; i < n; ++i)
    rhs[i] = trimap.foreground.test(i) ? cfg.lambda_c : 0.0;

  const auto apply_system = [&](const Plane& p, Plane& out) {
    kernel.apply(p, out);
    for (std::size_t i = 0; i < n; ++i)
      if (trimap.foreground.test(i) || trimap.background.test(i))
        out[i] += cfg.lambda_c * p[i];
  };

  Plane precond = kernel.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (trimap.foreground.test(i) || trimap.background.test(i))
      precond[i] += cfg.lambda_c;
    precond[i] = std::max(precond[i], 1e-12);
  }

  Plane x = warm_start ? *warm_start
                       : Plane(img.width(), img.height());
  if (!warm_start)
    for (std::size_t i = 0; i < n; ++i)
      x[i] = trimap.foreground.test(i) ? 1.0 : 0.0;

  Plane ax(img.width(), img.height());
  apply_system(x, ax);

  Plane r(img.width(), img.height()), z(img.width(), img.height());
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ax[i];

  double b_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) b_norm += rhs[i] * rhs[i];
  b_norm = std::sqrt(b_norm);

  const auto record_energy = [&]() {
    if (!diag) return;
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += x[i] * ax[i] - 2.0 * rhs[i] * x[i];
    diag->energy.push_back(e);
  };
  record_energy();

  double r_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) r_norm += r[i] * r[i];
  r_norm = std::sqrt(r_norm);

  Plane p(img.width(), img.height()), ap(img.width(), img.height());
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = r[i] / precond[i];
    p[i] = z[i];
    rz += r[i] * z[i];
  }

  int iter = 0;
  while (r_norm / b_norm > cfg.pcg_tol) {
    if (iter >= cfg.pcg_max_iters)
      throw Error(errc::solver_failure,
                  "matting PCG did not converge; relative residual " +
                      std::to_string(r_norm / b_norm));
    apply_system(p, ap);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (!(pap > 0.0))
      throw Error(errc::solver_failure, "matting system is not positive definite");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      ax[i] += alpha * ap[i];
      r[i] -= alpha * ap[i];
    }
    record_energy();
    double rz_new = 0.0;
    r_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / precond[i];
      rz_new += r[i] * z[i];
      r_norm += r[i] * r[i];
    }
    r_norm = std::sqrt(r_norm);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++iter;
  }

  if (diag) {
    diag->iterations = iter;
    diag->residual = r_norm / b_norm;
  }

  AlphaMat out;
  out.alpha = std::move(x);
  out.alpha.clamp(0.0, 1.0);
  return out;
}

/// Region growing: pixels with alpha <= grow_low join the background
/// seeds, alpha >= grow_high the foreground seeds (already-seeded pixels
/// keep their kind), then alpha is pinned to 0/1 on the enlarged sets.
inline Trimap grow_seeds(AlphaMat& mat, const Trimap& trimap,
                         const MattingConfig& cfg = {}) {
  Trimap out = trimap;
  for (std::size_t i = 0; i < mat.alpha.size(); ++i) {
    if (trimap.foreground.test(i) || trimap.background.test(i)) continue;
    if (mat.alpha[i] <= cfg.grow_low) out.background.set(i, true);
    else if (mat.alpha[i] >= cfg.grow_high) out.foreground.set(i, true);
  }
  for (std::size_t i = 0; i < mat.alpha.size(); ++i) {
    if (out.foreground.test(i)) mat.alpha[i] = 1.0;
    else if (out.background.test(i)) mat.alpha[i] = 0.0;
  }
  return out;
}

struct MatteDiagnostics {
  struct Round {
    int radius = 0;
    std::size_t fg_seeds = 0, bg_seeds = 0;
    int pcg_iterations = 0;
  };
  std::vector<Round> rounds;
};

/// Outer matting loop: solve + grow for outer_iterations rounds with the
/// window radius halved each round (floor, not below 1), then the sigmoid
/// sharpening alpha := 1 / (1 + exp(-slope (alpha - center))).
inline AlphaMat matte_iterate(const ImageRGB& img, const Trimap& trimap,
                              const MattingConfig& cfg = {},
                              MatteDiagnostics* diag = nullptr) {
  Trimap tri = trimap;
  AlphaMat mat;
  int radius = cfg.window_radius;
  const Plane* warm = nullptr;
  for (int round = 0; round < cfg.outer_iterations; ++round) {
    PcgDiagnostics pcg;
    mat = solve_alpha_pcg(img, tri, radius, cfg, warm, diag ? &pcg : nullptr);
    tri = grow_seeds(mat, tri, cfg);
    if (diag)
      diag->rounds.push_back({radius, tri.foreground.count(),
                              tri.background.count(), pcg.iterations});
    warm = &mat.alpha;
    radius = std::max(radius / 2, 1);
  }
  for (std::size_t i = 0; i < mat.alpha.size(); ++i)
    mat.alpha[i] =
        1.0 / (1.0 + std::exp(-cfg.sigmoid_slope * (mat.alpha[i] - cfg.sigmoid_center)));
  mat.alpha.clamp(0.0, 1.0);
  return mat;
}

/// Automatic trimap: foreground = skin + the dark hair component above the
/// face window + a clothes rectangle below it; background = two side
/// rectangles at the image margins. Background wins on conflicts.
inline Trimap init_trimap(const FaceArea& face, const RegionMask& skin,
                          const ImageRGB& img, const MattingConfig& cfg = {},
                          std::vector<std::string>* warnings = nullptr) {
  const int w = img.width(), h = img.height();
  if (skin.width() != w || skin.height() != h)
    throw Error(errc::invalid_input, "skin mask does not match image");

  RegionMask fg = skin;

  // hair: largest dark component touching the band directly above the window
  const PixelRect band = PixelRect{face.window.x0,
                                   face.window.y0 - round_half_up(face.base_h / 2.0),
                                   face.window.x1, face.window.y0 - 1}
                             .clipped(w, h);
  if (!band.empty()) {
    RegionMask dark(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = std::max({img.channel[0].at(x, y), img.channel[1].at(x, y),
                                   img.channel[2].at(x, y)});
        if (v < cfg.hair_value_threshold) dark.set(x, y, true);
      }
    const Components comps = connected_components(dark);
    std::size_t best = 0;
    const std::vector<std::int32_t>* best_members = nullptr;
    for (const auto& members : comps.members) {
      if (!dark.test(static_cast<std::size_t>(members.front()))) continue;
      bool touches = false;
      for (std::int32_t pix : members) {
        const int x = pix % w, y = pix / w;
        if (band.contains(x, y)) {
          touches = true;
          break;
        }
      }
      if (touches && members.size() > best) {
        best = members.size();
        best_members = &members;
      }
    }
    if (best_members)
      for (std::int32_t pix : *best_members)
        fg.set(static_cast<std::size_t>(pix), true);
  }

  // clothes: rectangle of width 2*w_hat centered below the window, down to
  // the image bottom, eroded by a fixed margin
  {
    const int cx = round_half_up(face.center_x);
    const int half = round_half_up(face.base_w);
    PixelRect clothes{cx - half + cfg.clothes_erode_px,
                      face.window.y1 + 1 + cfg.clothes_erode_px,
                      cx + half - cfg.clothes_erode_px,
                      h - 1 - cfg.clothes_erode_px};
    clothes = clothes.clipped(w, h);
    for (int y = clothes.y0; y <= clothes.y1; ++y)
      for (int x = clothes.x0; x <= clothes.x1; ++x) fg.set(x, y, true);
  }

  // background: side rectangles spanning the face-center row +- h_hat
  RegionMask bg(w, h);
  {
    const int sw = static_cast<int>(std::ceil(cfg.side_rect_width_frac * w));
    const int cy = round_half_up(face.center_y);
    const int hh = round_half_up(face.base_h);
    const PixelRect rows{0, cy - hh, w - 1, cy + hh};
    for (const PixelRect rect :
         {PixelRect{0, rows.y0, sw - 1, rows.y1},
          PixelRect{w - sw, rows.y0, w - 1, rows.y1}}) {
      const PixelRect c = rect.clipped(w, h);
      for (int y = c.y0; y <= c.y1; ++y)
        for (int x = c.x0; x <= c.x1; ++x) bg.set(x, y, true);
    }
  }

  std::size_t conflicts = 0;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    if (fg.test(i) && bg.test(i)) {
      fg.set(i, false);
      ++conflicts;
    }
  }
  if (conflicts > 0 && warnings)
    warnings->push_back("trimap seed conflict on " + std::to_string(conflicts) +
                        " pixels; background seeds kept");

  return Trimap{std::move(fg), std::move(bg)};
}

/// y' = alpha*y + (1-alpha)*z per pixel (alpha = 1 keeps the foreground).
inline ImageRGB replace_background(const ImageRGB& y, const AlphaMat& mat,
                                   const ImageRGB& z) {
  if (!y.same_size(z) || y.width() != mat.alpha.width() ||
      y.height() != mat.alpha.height())
    throw Error(errc::invalid_input, "background replacement size mismatch");
  ImageRGB out(y.width(), y.height());
  for (std::size_t i = 0; i < y.pixel_count(); ++i) {
    const double a = mat.alpha[i];
    for (int c = 0; c < 3; ++c)
      out.channel[c][i] =
          std::clamp(a * y.channel[c][i] + (1.0 - a) * z.channel[c][i], 0.0, 1.0);
  }
  return out;
}

}  // namespace facegrade
