#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "facegrade/image.hpp"
#include "facegrade/window_stats.hpp"

namespace facegrade {

// Guided image filtering as constrained optimization: the data term is the
// local linear model (x_j ~ A_i y_j + b_i inside each window), whose
// partial minimum over (A, b) is the matting-Laplacian quadratic of the
// guide y, one independent scalar problem per color channel. The l2-ball
// constraints tie the skin region to the guide image and the background to
// the input, and MFISTA solves the sum.

namespace detail {

inline std::uint64_t fnv1a(const double* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t image_hash(const PlaneTriple& img) {
  std::uint64_t h = 1469598103934665603ull;
  h ^= static_cast<std::uint64_t>(img.width()) * 0x9e3779b97f4a7c15ull;
  h ^= static_cast<std::uint64_t>(img.height());
  for (const Plane& p : img.channel) h = fnv1a(p.data(), p.size(), h);
  return h;
}

/// Index into the packed symmetric 3x3 layout (00,01,02,11,12,22).
inline constexpr int sym_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return i == 0 ? j : (i == 1 ? 2 + j : 5);
}

/// Inverse of a symmetric positive definite 3x3 matrix via Cholesky.
/// The adjugate route loses the determinant to cancellation when the
/// covariance is near rank-deficient (flat image regions with a tiny
/// ridge); the factorization stays accurate there.
inline std::array<double, 6> sym_inverse(const std::array<double, 6>& m) {
  const auto safe_sqrt = [](double v) { return std::sqrt(std::max(v, 1e-300)); };
  const double l11 = safe_sqrt(m[0]);
  const double l21 = m[1] / l11;
  const double l31 = m[2] / l11;
  const double l22 = safe_sqrt(m[3] - l21 * l21);
  const double l32 = (m[4] - l31 * l21) / l22;
  const double l33 = safe_sqrt(m[5] - l31 * l31 - l32 * l32);

  // rows of L^{-1}
  const double i11 = 1.0 / l11;
  const double i22 = 1.0 / l22;
  const double i33 = 1.0 / l33;
  const double i21 = -l21 * i11 * i22;
  const double i32 = -l32 * i22 * i33;
  const double i31 = (-l31 * i11 - l32 * i21) * i33;

  // M^{-1} = L^{-T} L^{-1}
  return {i11 * i11 + i21 * i21 + i31 * i31,
          i21 * i22 + i31 * i32,
          i31 * i33,
          i22 * i22 + i32 * i32,
          i32 * i33,
          i33 * i33};
}

inline double dot(const PlaneTriple& a, const PlaneTriple& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double* pa = a.channel[c].data();
    const double* pb = b.channel[c].data();
    const std::size_t n = a.channel[c].size();
    for (std::size_t i = 0; i < n; ++i) s += pa[i] * pb[i];
  }
  return s;
}

}  // namespace detail

/// Per-pixel affine coefficients (A*_i, b*_i) of the local linear model,
/// refit from the current iterate at every gradient evaluation. Guide-side
/// statistics (window means and the regularized inverse covariance Delta_i
/// = Sigma_i + (eps/|w_i|) I) depend only on (y, window, eps) and are
/// cached across fits.
class LocalLinearModel {
 public:
  void fit(const ImageRGB& x, const ImageRGB& y, int window_side, double epsilon) {
    if (!x.same_size(y))
      throw Error(errc::invalid_input, "x and y must share dimensions");
    if (window_side < 1 || window_side % 2 == 0)
      throw Error(errc::invalid_input, "window side must be odd and positive");
    if (!(epsilon > 0.0))
      throw Error(errc::invalid_input, "epsilon must be positive");
    if (!x.all_finite() || !y.all_finite())
      throw Error(errc::invalid_input, "non-finite model input");

    prepare_guide(y, window_side, epsilon);

    const int radius = window_side / 2;
    const std::size_t n = x.pixel_count();

    for (int r = 0; r < 3; ++r) filter_->sums(x.channel[r], radius, sum_x_[r]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        filter_->product_sums(x.channel[r], y.channel[c], radius,
                              sum_xy_[r * 3 + c]);

    for (std::size_t i = 0; i < n; ++i) {
      const double inv_n = 1.0 / counts_[i];
      double xbar[3], ybar[3];
      for (int r = 0; r < 3; ++r) xbar[r] = sum_x_[r][i] * inv_n;
      for (int c = 0; c < 3; ++c) ybar[c] = mean_y_[c][i];

      double cross[3][3];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          cross[r][c] = sum_xy_[r * 3 + c][i] * inv_n - xbar[r] * ybar[c];

      for (int r = 0; r < 3; ++r) {
        double brow = xbar[r];
        for (int c = 0; c < 3; ++c) {
          double v = 0.0;
          for (int k = 0; k < 3; ++k)
            v += cross[r][k] * delta_inv_[detail::sym_index(k, c)][i];
          a_[r * 3 + c][i] = v;
          brow -= v * ybar[c];
        }
        b_[r][i] = brow;
      }
    }

    x_hash_ = detail::image_hash(x);
    fitted_ = true;
  }

  bool fresh_for(const ImageRGB& x) const {
    return fitted_ && detail::image_hash(x) == x_hash_;
  }

  int window_side() const noexcept { return side_; }
  double epsilon() const noexcept { return epsilon_; }
  const Plane& counts() const noexcept { return counts_; }
  const Plane& a(int r, int c) const { return a_[r * 3 + c]; }
  const Plane& b(int c) const { return b_[c]; }
  const Plane& delta_inverse(int i, int j) const {
    return delta_inv_[detail::sym_index(i, j)];
  }
  const Plane& guide_mean(int c) const { return mean_y_[c]; }
  BoxFilter& filter() const { return *filter_; }

 private:
  void prepare_guide(const ImageRGB& y, int side, double epsilon) {
    const std::uint64_t yh = detail::image_hash(y);
    if (guide_ready_ && yh == y_hash_ && side == side_ && epsilon == epsilon_)
      return;

    side_ = side;
    epsilon_ = epsilon;
    y_hash_ = yh;
    const int w = y.width(), h = y.height();
    const int radius = side / 2;
    if (!filter_ || filter_->width() != w || filter_->height() != h)
      filter_ = std::make_unique<BoxFilter>(w, h);

    counts_ = window_counts(w, h, radius);
    for (int c = 0; c < 3; ++c) {
      filter_->sums(y.channel[c], radius, mean_y_[c]);
      for (std::size_t i = 0; i < mean_y_[c].size(); ++i)
        mean_y_[c][i] /= counts_[i];
    }

    std::array<Plane, 6> syy;
    int s = 0;
    for (int c = 0; c < 3; ++c)
      for (int d = c; d < 3; ++d)
        filter_->product_sums(y.channel[c], y.channel[d], radius, syy[s++]);

    for (auto& p : delta_inv_) p = Plane(w, h);
    for (auto& p : sum_x_) p = Plane(w, h);
    for (auto& p : sum_xy_) p = Plane(w, h);
    for (auto& p : a_) p = Plane(w, h);
    for (auto& p : b_) p = Plane(w, h);

    const std::size_t n = counts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double inv_n = 1.0 / counts_[i];
      std::array<double, 6> delta;
      int t = 0;
      for (int c = 0; c < 3; ++c)
        for (int d = c; d < 3; ++d) {
          delta[t] = syy[t][i] * inv_n - mean_y_[c][i] * mean_y_[d][i];
          if (c == d) delta[t] += epsilon * inv_n;
          ++t;
        }
      const auto inv = detail::sym_inverse(delta);
      for (int k = 0; k < 6; ++k) delta_inv_[k][i] = inv[k];
    }
    guide_ready_ = true;
    fitted_ = false;
  }

  int side_ = 0;
  double epsilon_ = 0.0;
  std::uint64_t y_hash_ = 0, x_hash_ = 0;
  bool guide_ready_ = false, fitted_ = false;
  mutable std::unique_ptr<BoxFilter> filter_;
  Plane counts_;
  std::array<Plane, 3> mean_y_;
  std::array<Plane, 6> delta_inv_;
  std::array<Plane, 3> sum_x_;
  std::array<Plane, 9> sum_xy_;
  std::array<Plane, 9> a_;
  std::array<Plane, 3> b_;
  // grad_f scratch; the model is owned by a single solve
  mutable std::array<Plane, 9> grad_sum_a_;
  mutable std::array<Plane, 3> grad_sum_b_;

  friend void grad_f(const ImageRGB&, const ImageRGB&, const LocalLinearModel&,
                     PlaneTriple&);
};

/// Gradient of the data term: [grad f(x)]_i =
/// 2 (|w_i| x_i - ((sum_{j in w_i} A*_j) y_i + sum_{j in w_i} b*_j)),
/// which equals 2 L x per channel with L the matting Laplacian of y.
inline void grad_f(const ImageRGB& x, const ImageRGB& y,
                   const LocalLinearModel& model, PlaneTriple& out) {
  if (!model.fresh_for(x))
    throw Error(errc::invalid_input,
                "local linear model is stale for this iterate");
  if (!x.same_size(y))
    throw Error(errc::invalid_input, "x and y must share dimensions");

  const int radius = model.window_side() / 2;
  BoxFilter& filter = model.filter();
  for (int k = 0; k < 9; ++k)
    filter.sums(model.a_[k], radius, model.grad_sum_a_[k]);
  for (int c = 0; c < 3; ++c)
    filter.sums(model.b_[c], radius, model.grad_sum_b_[c]);

  if (!out.same_size(x)) out = PlaneTriple(x.width(), x.height());
  const Plane& counts = model.counts();
  const std::size_t n = counts.size();
  for (int r = 0; r < 3; ++r) {
    const double* sa0 = model.grad_sum_a_[r * 3 + 0].data();
    const double* sa1 = model.grad_sum_a_[r * 3 + 1].data();
    const double* sa2 = model.grad_sum_a_[r * 3 + 2].data();
    const double* sb = model.grad_sum_b_[r].data();
    const double* xr = x.channel[r].data();
    const double* y0 = y.channel[0].data();
    const double* y1 = y.channel[1].data();
    const double* y2 = y.channel[2].data();
    double* o = out.channel[r].data();
    for (std::size_t i = 0; i < n; ++i) {
      o[i] = 2.0 * (counts[i] * xr[i] -
                    (sa0[i] * y0[i] + sa1[i] * y1[i] + sa2[i] * y2[i] + sb[i]));
    }
  }
}

inline PlaneTriple grad_f(const ImageRGB& x, const ImageRGB& y,
                          const LocalLinearModel& model) {
  PlaneTriple out;
  grad_f(x, y, model, out);
  return out;
}

/// Restricted distance sqrt(sum_{p in mask} ||a_p - ref_p||^2).
inline double region_distance(const PlaneTriple& a, const PlaneTriple& ref,
                              const RegionMask& mask) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double* pa = a.channel[c].data();
    const double* pr = ref.channel[c].data();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask.test(i)) continue;
      const double d = pa[i] - pr[i];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

/// Ball constraints: the skin region stays within eta_skin of the guide
/// (aggregate l2 over the region) and the background within eta_background
/// of the input. The regions must be disjoint for the prox to separate.
struct ConstraintSpec {
  RegionMask skin, background;
  ImageRGB guide, input;
  double eta_skin = 0.0, eta_background = 0.0;
};

inline ConstraintSpec make_constraints(RegionMask skin, RegionMask background,
                                       ImageRGB guide, ImageRGB input,
                                       double eta_s_scale = 5e-4,
                                       double eta_b_scale = 5e-10) {
  if (!skin.same_size(background) || guide.width() != skin.width() ||
      guide.height() != skin.height() || !guide.same_size(input))
    throw Error(errc::invalid_input, "constraint component size mismatch");
  if (!masks_disjoint(skin, background))
    throw Error(errc::invalid_input, "skin and background regions overlap");
  ConstraintSpec cons;
  cons.eta_skin = eta_s_scale * static_cast<double>(skin.count());
  cons.eta_background = eta_b_scale * static_cast<double>(background.count());
  cons.skin = std::move(skin);
  cons.background = std::move(background);
  cons.guide = std::move(guide);
  cons.input = std::move(input);
  return cons;
}

namespace detail {

inline void project_region(ImageRGB& z, const RegionMask& mask,
                           const ImageRGB& ref, double eta) {
  const double d = region_distance(z, ref, mask);
  if (d <= eta) return;
  const double scale = eta / d;
  for (int c = 0; c < 3; ++c) {
    double* pz = z.channel[c].data();
    const double* pr = ref.channel[c].data();
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask.test(i)) pz[i] = pr[i] + scale * (pz[i] - pr[i]);
  }
}

/// Feasibility with a tiny slack absorbing projection round-off.
inline bool within_ball(double d, double eta) {
  return d <= eta + 1e-9 * std::max(1.0, eta);
}

}  // namespace detail

/// Region-restricted l2-ball projection: on the skin region, points beyond
/// the ball move to g_p + eta_S (zhat_p - g_p) / d_S; likewise on the
/// background toward y with eta_B. The boundary band is untouched.
inline ImageRGB prox_regions(const ImageRGB& zhat, const ConstraintSpec& cons) {
  ImageRGB z = zhat;
  detail::project_region(z, cons.skin, cons.guide, cons.eta_skin);
  detail::project_region(z, cons.background, cons.input, cons.eta_background);
  return z;
}

/// Data-fidelity value f(x) plus the constraint indicator (+inf outside
/// C_S or C_B). f is evaluated as (1/2) <x, grad f(x)>, which equals
/// sum_c x_c^T L x_c.
inline double eval_objective(const ImageRGB& x, const ImageRGB& y,
                             const LocalLinearModel& model,
                             const ConstraintSpec& cons) {
  if (!detail::within_ball(region_distance(x, cons.guide, cons.skin),
                           cons.eta_skin) ||
      !detail::within_ball(region_distance(x, cons.input, cons.background),
                           cons.eta_background))
    return std::numeric_limits<double>::infinity();
  const PlaneTriple grad = grad_f(x, y, model);
  return 0.5 * detail::dot(x, grad);
}

struct SolverOptions {
  int window_side = 19;
  double epsilon = 1e-7;
  double lipschitz = 500.0;  // step size 1/L
  int max_iters = 500;
  double tol = 1e-8;  // relative objective change; 0 disables
};

struct IterRecord {
  int iteration = 0;
  double objective = 0.0;
  double skin_distance = 0.0;
  double background_distance = 0.0;
  double momentum_t = 1.0;
};

struct SolveResult {
  ImageRGB x;
  int iterations = 0;
  double final_objective = 0.0;
  std::vector<IterRecord> history;  // entry 0 is the initial point
};

/// MFISTA. Five-step iteration: forward step on v, region prox, monotone
/// argmin over {z^k, x^{k-1}} (both feasible by construction), then the
/// t and v momentum updates. Stops on max_iters or when the relative
/// objective change drops below tol. The recorded objective values are
/// non-increasing; the returned image is clipped to [0,1] at the very end.
inline SolveResult mfista_solve(const ImageRGB& y, const ImageRGB& g,
                                const ConstraintSpec& cons,
                                const SolverOptions& opt = {}) {
  if (!y.same_size(g))
    throw Error(errc::invalid_input, "input and guide must share dimensions");
  if (!(opt.lipschitz > 0.0))
    throw Error(errc::invalid_input, "Lipschitz constant must be positive");

  const double inv_l = 1.0 / opt.lipschitz;
  const std::size_t n = y.pixel_count();

  // x0: guide on the skin region, input elsewhere; feasible in both balls.
  ImageRGB x_prev = y;
  for (std::size_t i = 0; i < n; ++i)
    if (cons.skin.test(i)) x_prev.set_pixel(i, g.pixel(i));

  LocalLinearModel model;
  PlaneTriple grad;

  const auto objective_at = [&](const ImageRGB& img) {
    model.fit(img, y, opt.window_side, opt.epsilon);
    grad_f(img, y, model, grad);
    return 0.5 * detail::dot(img, grad);
  };

  SolveResult result;
  double f_prev = objective_at(x_prev);
  double t = 1.0;
  result.history.push_back({0, f_prev,
                            region_distance(x_prev, cons.guide, cons.skin),
                            region_distance(x_prev, cons.input, cons.background),
                            t});

  ImageRGB v = x_prev, z, zhat;
  int completed = 0;
  for (int k = 1; k <= opt.max_iters; ++k) {
    model.fit(v, y, opt.window_side, opt.epsilon);
    grad_f(v, y, model, grad);
    zhat = v;
    for (int c = 0; c < 3; ++c) {
      double* pz = zhat.channel[c].data();
      const double* pg = grad.channel[c].data();
      for (std::size_t i = 0; i < n; ++i) pz[i] -= inv_l * pg[i];
    }
    z = prox_regions(zhat, cons);

    const double f_z = objective_at(z);
    const bool take_z = f_z <= f_prev;
    const ImageRGB& xk = take_z ? z : x_prev;
    const double f_k = take_z ? f_z : f_prev;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double w_z = t / t_next;
    const double w_x = (t - 1.0) / t_next;
    for (int c = 0; c < 3; ++c) {
      double* pv = v.channel[c].data();
      const double* px = xk.channel[c].data();
      const double* pz = z.channel[c].data();
      const double* pp = x_prev.channel[c].data();
      for (std::size_t i = 0; i < n; ++i)
        pv[i] = px[i] + w_z * (pz[i] - px[i]) + w_x * (px[i] - pp[i]);
    }

    if (!xk.all_finite() || !v.all_finite())
      throw Error(errc::solver_failure,
                  "non-finite iterate at iteration " + std::to_string(k));

    result.history.push_back({k, f_k, region_distance(xk, cons.guide, cons.skin),
                              region_distance(xk, cons.input, cons.background),
                              t_next});

    const bool converged =
        opt.tol > 0.0 &&
        std::abs(f_k - f_prev) / std::max(f_prev, 1e-12) < opt.tol;

    if (take_z) x_prev = z;
    f_prev = f_k;
    t = t_next;
    completed = k;
    if (converged) break;
  }

  result.iterations = completed;
  result.final_objective = f_prev;
  result.x = std::move(x_prev);
  result.x.clamp01();
  return result;
}

}  // namespace facegrade
