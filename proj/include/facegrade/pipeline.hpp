#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facegrade/color.hpp"
#include "facegrade/faceprep.hpp"
#include "facegrade/gifopt.hpp"
#include "facegrade/grading.hpp"
#include "facegrade/image.hpp"
#include "facegrade/luma.hpp"
#include "facegrade/matte.hpp"
#include "facegrade/skinmask.hpp"

namespace facegrade {

/// Pipeline configuration. Every tuning constant lives here as a default;
/// none are hard-coded in the stages.
struct PipelineConfig {
  double scale_factor = 2.0;  // l
  int hue_clusters = 4;       // k
  int gif_window = 19;
  int matting_window = 31;
  double epsilon = 1e-7;
  double lipschitz = 500.0;
  double eta_s_scale = 5e-4;
  double eta_b_scale = 5e-10;
  int max_iters = 500;
  double tol = 1e-8;
  int idt_iterations = 20;
  int idt_bins = 300;
  std::uint64_t seed = 1;
  int crop_side = 320;
  bool luma_enabled = true;
  int dilation_radius = 20;
  double sat_band = 0.2;
  double value_min = 0.15;
  double value_max = 0.95;
  double rect_overlap_min = 0.10;
  MattingConfig matting;

  SolverOptions solver_options() const {
    return {gif_window, epsilon, lipschitz, max_iters, tol};
  }
  IDTConfig idt_config() const { return {idt_iterations, idt_bins, seed, true}; }
  MattingConfig matting_config() const {
    MattingConfig m = matting;
    m.window_radius = matting_window / 2;
    return m;
  }
};

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  const auto get = [&](const nlohmann::json& src, const char* key, auto& value) {
    if (src.contains(key)) value = src.at(key).get<std::decay_t<decltype(value)>>();
  };
  get(j, "scale_factor", c.scale_factor);
  get(j, "hue_clusters", c.hue_clusters);
  get(j, "gif_window", c.gif_window);
  get(j, "matting_window", c.matting_window);
  get(j, "epsilon", c.epsilon);
  get(j, "lipschitz", c.lipschitz);
  get(j, "eta_s_scale", c.eta_s_scale);
  get(j, "eta_b_scale", c.eta_b_scale);
  get(j, "max_iters", c.max_iters);
  get(j, "tol", c.tol);
  get(j, "idt_iterations", c.idt_iterations);
  get(j, "idt_bins", c.idt_bins);
  get(j, "seed", c.seed);
  get(j, "crop_side", c.crop_side);
  get(j, "luma_enabled", c.luma_enabled);
  get(j, "dilation_radius", c.dilation_radius);
  get(j, "sat_band", c.sat_band);
  get(j, "value_min", c.value_min);
  get(j, "value_max", c.value_max);
  get(j, "rect_overlap_min", c.rect_overlap_min);
  if (j.contains("matting")) {
    const auto& m = j.at("matting");
    get(m, "lambda_c", c.matting.lambda_c);
    get(m, "epsilon", c.matting.epsilon);
    get(m, "pcg_tol", c.matting.pcg_tol);
    get(m, "pcg_max_iters", c.matting.pcg_max_iters);
    get(m, "outer_iterations", c.matting.outer_iterations);
    get(m, "grow_low", c.matting.grow_low);
    get(m, "grow_high", c.matting.grow_high);
    get(m, "sigmoid_slope", c.matting.sigmoid_slope);
    get(m, "sigmoid_center", c.matting.sigmoid_center);
    get(m, "hair_value_threshold", c.matting.hair_value_threshold);
    get(m, "clothes_erode_px", c.matting.clothes_erode_px);
    get(m, "side_rect_width_frac", c.matting.side_rect_width_frac);
  }
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::invalid_input, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::invalid_input,
                "malformed config file " + path + ": " + e.what());
  }
  return config_from_json(j);
}

struct RunReport {
  std::vector<std::pair<std::string, double>> stage_seconds;
  double total_seconds = 0.0;
  int solver_iterations = 0;
  double final_objective = 0.0;
  double skin_distance = 0.0;        // of the solver output, before luma
  double background_distance = 0.0;  // of the solver output, before luma
  double eta_skin = 0.0;
  double eta_background = 0.0;
  std::size_t skin_pixels = 0;
  std::size_t background_pixels = 0;
  std::size_t target_skin_pixels = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json(bool include_timings = true) const {
    nlohmann::json j;
    if (include_timings) {
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& [name, seconds] : stage_seconds)
        stages.push_back({{"name", name}, {"seconds", seconds}});
      j["stages"] = std::move(stages);
      j["total_seconds"] = total_seconds;
    }
    j["solver"] = {{"iterations", solver_iterations},
                   {"final_objective", final_objective}};
    j["constraints"] = {{"skin_distance", skin_distance},
                        {"background_distance", background_distance},
                        {"eta_skin", eta_skin},
                        {"eta_background", eta_background}};
    j["regions"] = {{"skin_pixels", skin_pixels},
                    {"background_pixels", background_pixels},
                    {"target_skin_pixels", target_skin_pixels}};
    j["warnings"] = warnings;
    return j;
  }
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(RunReport& report)
      : report_(report), start_(clock::now()), last_(start_) {}

  void mark(const std::string& name) {
    const auto now = clock::now();
    report_.stage_seconds.emplace_back(
        name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

  void finish() {
    report_.total_seconds =
        std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  RunReport& report_;
  clock::time_point start_, last_;
};

}  // namespace detail

struct SkinExtraction {
  FaceArea face;
  RegionMask skin;
  double median_sat = 0.0;
};

/// Face window + skin region for one image: candidate aggregation, hue
/// clustering over the whole image, component selection near the face,
/// then saturation/value thresholding.
inline SkinExtraction extract_skin(const ImageRGB& img,
                                   std::span<const RectCandidate> cands,
                                   const PipelineConfig& cfg) {
  validate_candidates(cands, img.width(), img.height());
  const MedianRect rect = aggregate_candidates(cands);
  SkinExtraction out;
  out.face = face_window(rect, cfg.scale_factor, img.width(), img.height());

  const ImageHSV hsv = rgb_to_hsv(img);
  const HueClusterModel model = kmeans_hue(hsv.h(), cfg.hue_clusters, cfg.seed);
  const RegionMask hue_region =
      skin_hue_region(model, out.face.window_mask, cfg.rect_overlap_min);
  out.median_sat = median_saturation(hsv, out.face.window_mask);
  out.skin = refine_sv(hue_region, hsv, out.face.window_mask, cfg.sat_band,
                       cfg.value_min, cfg.value_max);
  if (out.skin.empty())
    throw Error(errc::skin_region_not_found, "skin region not found");
  return out;
}

/// User-supplied masks instead of the computed skin region.
struct MaskOverrides {
  std::optional<RegionMask> input_skin;
  std::optional<RegionMask> target_skin;
};

struct CorrectionCore {
  ImageRGB guide;
  ImageRGB solved;     // solver output, before the luminance graft
  ImageRGB corrected;  // final image
  SolveResult solve;
};

namespace detail {

/// Grading + constrained solve + optional luminance graft; shared by the
/// automatic and semi-automatic paths so equal regions give equal bytes.
inline CorrectionCore run_correction(const ImageRGB& input,
                                     const RegionSystem& regions,
                                     const ColorSampleSet& target_skin,
                                     const PipelineConfig& cfg, RunReport& report,
                                     StageClock& clock) {
  if (target_skin.empty())
    throw Error(errc::skin_region_not_found, "target skin region is empty");

  CorrectionCore core;
  const ColorSampleSet source_skin = collect_samples(input, regions.skin);
  const ColorSampleSet mapped =
      idt_transfer(source_skin, target_skin, cfg.idt_config());
  core.guide = assemble_guide(input, mapped, regions.skin);
  clock.mark("grading");

  const ConstraintSpec cons =
      make_constraints(regions.skin, regions.background, core.guide, input,
                       cfg.eta_s_scale, cfg.eta_b_scale);
  core.solve = mfista_solve(input, core.guide, cons, cfg.solver_options());
  core.solved = core.solve.x;
  report.solver_iterations = core.solve.iterations;
  report.final_objective = core.solve.final_objective;
  report.skin_distance = region_distance(core.solved, cons.guide, cons.skin);
  report.background_distance =
      region_distance(core.solved, cons.input, cons.background);
  report.eta_skin = cons.eta_skin;
  report.eta_background = cons.eta_background;
  report.skin_pixels = regions.skin.count();
  report.background_pixels = regions.background.count();
  clock.mark("gif_solve");

  if (cfg.luma_enabled) {
    core.corrected = recombine_luminance(decompose(input), decompose(core.solved));
    clock.mark("luma");
  } else {
    core.corrected = core.solved;
  }
  return core;
}

}  // namespace detail

struct CorrectResult {
  ImageRGB image;
  RunReport report;
  FaceArea face;
  RegionSystem regions;
  CorrectionCore core;
};

/// Full headshot correction: face window + skin extraction on both images,
/// color grading of the input skin toward the target skin, the constrained
/// guided-filter solve, and the luminance graft.
inline CorrectResult correct_headshot(const ImageRGB& input,
                                      const ImageRGB& target,
                                      std::span<const RectCandidate> input_cands,
                                      std::span<const RectCandidate> target_cands,
                                      const PipelineConfig& cfg = {},
                                      const MaskOverrides& overrides = {}) {
  CorrectResult result;
  detail::StageClock clock(result.report);

  RegionMask input_skin, target_skin;
  if (overrides.input_skin) {
    input_skin = *overrides.input_skin;
    if (input_skin.width() != input.width() ||
        input_skin.height() != input.height())
      throw Error(errc::invalid_input, "input mask size mismatch");
    if (input_skin.empty())
      throw Error(errc::skin_region_not_found, "input mask override is empty");
    const MedianRect rect = aggregate_candidates(input_cands);
    result.face =
        face_window(rect, cfg.scale_factor, input.width(), input.height());
  } else {
    SkinExtraction ex = extract_skin(input, input_cands, cfg);
    result.face = std::move(ex.face);
    input_skin = std::move(ex.skin);
  }

  if (overrides.target_skin) {
    target_skin = *overrides.target_skin;
    if (target_skin.width() != target.width() ||
        target_skin.height() != target.height())
      throw Error(errc::invalid_input, "target mask size mismatch");
    if (target_skin.empty())
      throw Error(errc::skin_region_not_found, "target mask override is empty");
  } else {
    target_skin = extract_skin(target, target_cands, cfg).skin;
  }
  clock.mark("skin_extract");

  result.regions = build_regions(input_skin, 0.0, cfg.dilation_radius);
  result.report.target_skin_pixels = target_skin.count();
  const ColorSampleSet target_samples = collect_samples(target, target_skin);

  result.core = detail::run_correction(input, result.regions, target_samples,
                                       cfg, result.report, clock);
  result.image = result.core.corrected;
  clock.finish();
  return result;
}

struct YearbookResult {
  ImageRGB image;   // crop_side x crop_side, background replaced
  AlphaMat alpha;
  RunReport report;
  ImageRGB corrected_crop;  // before background replacement
  FaceArea crop_face;
  RegionSystem regions;
};

/// Yearbook flow: crop to the working window and resize, run the
/// correction stages on the crop, estimate the alpha-mat, and composite
/// the new background.
inline YearbookResult yearbook_generate(const ImageRGB& input,
                                        const ImageRGB& target,
                                        const ImageRGB& new_background,
                                        std::span<const RectCandidate> input_cands,
                                        std::span<const RectCandidate> target_cands,
                                        const PipelineConfig& cfg = {}) {
  YearbookResult result;
  detail::StageClock clock(result.report);

  validate_candidates(input_cands, input.width(), input.height());
  const MedianRect rect = aggregate_candidates(input_cands);
  const FaceArea face =
      face_window(rect, cfg.scale_factor, input.width(), input.height());
  const ImageRGB crop = crop_resize(input, face, cfg.crop_side);

  if (new_background.width() != cfg.crop_side ||
      new_background.height() != cfg.crop_side)
    throw Error(errc::invalid_input, "background must match the crop size");

  // face geometry mapped into crop coordinates
  const PixelRect cw = face.window.clipped(input.width(), input.height());
  const double sx = static_cast<double>(cfg.crop_side) / cw.width();
  const double sy = static_cast<double>(cfg.crop_side) / cw.height();
  MedianRect crop_rect;
  crop_rect.x = (face.center_x - cw.x0 + 0.5) * sx - 0.5;
  crop_rect.y = (face.center_y - cw.y0 + 0.5) * sy - 0.5;
  crop_rect.w = face.base_w * sx;
  crop_rect.h = face.base_h * sy;
  result.crop_face =
      face_window(crop_rect, cfg.scale_factor, cfg.crop_side, cfg.crop_side);
  clock.mark("crop");

  // skin extraction on the crop, reusing the mapped face window
  const ImageHSV hsv = rgb_to_hsv(crop);
  const HueClusterModel model = kmeans_hue(hsv.h(), cfg.hue_clusters, cfg.seed);
  const RegionMask hue_region = skin_hue_region(
      model, result.crop_face.window_mask, cfg.rect_overlap_min);
  const RegionMask crop_skin =
      refine_sv(hue_region, hsv, result.crop_face.window_mask, cfg.sat_band,
                cfg.value_min, cfg.value_max);
  if (crop_skin.empty())
    throw Error(errc::skin_region_not_found, "skin region not found");

  const RegionMask target_skin = extract_skin(target, target_cands, cfg).skin;
  clock.mark("skin_extract");

  result.regions = build_regions(crop_skin, 0.0, cfg.dilation_radius);
  result.report.target_skin_pixels = target_skin.count();
  const ColorSampleSet target_samples = collect_samples(target, target_skin);
  CorrectionCore core = detail::run_correction(crop, result.regions,
                                               target_samples, cfg,
                                               result.report, clock);
  result.corrected_crop = core.corrected;

  const MattingConfig mcfg = cfg.matting_config();
  const Trimap trimap = init_trimap(result.crop_face, crop_skin,
                                    result.corrected_crop, mcfg,
                                    &result.report.warnings);
  result.alpha = matte_iterate(result.corrected_crop, trimap, mcfg);
  clock.mark("matting");

  result.image =
      replace_background(result.corrected_crop, result.alpha, new_background);
  clock.mark("background_replace");
  clock.finish();
  return result;
}

/// Semi-automatic correction with user-supplied regions: the face pipeline
/// is bypassed, the boundary band is the complement of skin and
/// background, and grading/solve/luma run unchanged.
inline ImageRGB semiauto_correct(const ImageRGB& source, const ImageRGB& target,
                                 const RegionMask& source_skin,
                                 const RegionMask& source_background,
                                 const RegionMask& target_skin,
                                 const PipelineConfig& cfg = {},
                                 RunReport* report_out = nullptr) {
  if (source_skin.width() != source.width() ||
      source_skin.height() != source.height() ||
      !source_skin.same_size(source_background))
    throw Error(errc::invalid_input, "region masks do not match the source image");
  if (target_skin.width() != target.width() ||
      target_skin.height() != target.height())
    throw Error(errc::invalid_input, "target mask does not match the target image");
  if (!masks_disjoint(source_skin, source_background))
    throw Error(errc::invalid_input, "skin and background masks overlap");
  if (source_skin.empty())
    throw Error(errc::skin_region_not_found, "source skin mask is empty");
  if (target_skin.empty())
    throw Error(errc::skin_region_not_found, "target skin mask is empty");

  RegionSystem regions;
  regions.skin = source_skin;
  regions.background = source_background;
  regions.boundary =
      mask_union(source_skin, source_background).complement();
  regions.skin_dilated = source_background.complement();

  RunReport local;
  RunReport& report = report_out ? *report_out : local;
  detail::StageClock clock(report);
  clock.mark("skin_extract");

  const ColorSampleSet target_samples = collect_samples(target, target_skin);
  report.target_skin_pixels = target_skin.count();
  CorrectionCore core =
      detail::run_correction(source, regions, target_samples, cfg, report, clock);
  clock.finish();
  return core.corrected;
}

}  // namespace facegrade
