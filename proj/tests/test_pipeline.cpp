#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "facegrade/color.hpp"
#include "facegrade/pipeline.hpp"
#include "facegrade/synthetic.hpp"
#include "support/test_util.hpp"

using namespace facegrade;

namespace {

/// Reduced-size scenes so pipeline tests stay quick.
PortraitSpec shrink(PortraitSpec s) {
  s.width = 240;
  s.height = 300;
  s.face_center_x = 120;
  s.face_center_y = 130;
  s.face_rx = 38;
  s.face_ry = 50;
  s.neck_half_width = 14;
  s.candidate_size = 28;
  return s;
}

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.max_iters = 250;
  cfg.tol = 1e-7;
  return cfg;
}

double mean_skin_hue(const ImageRGB& img, const RegionMask& skin) {
  std::vector<double> hues;
  for (std::size_t i = 0; i < skin.size(); ++i) {
    if (!skin.test(i)) continue;
    hues.push_back(
        rgb_to_hsv_pixel(img.channel[0][i], img.channel[1][i], img.channel[2][i])[0]);
  }
  return circular_mean_hue(hues.begin(), hues.end());
}

}  // namespace

TEST(Pipeline, SelfCorrectionNearIdentity) {
  const PortraitSpec spec = shrink(corpus::tinted_input_spec());
  const ImageRGB img = render_portrait(spec);
  const auto cands = portrait_candidates(spec);
  const CorrectResult result =
      correct_headshot(img, img, cands, cands, fast_config());
  EXPECT_LT(testutil::max_abs_diff(result.image, img), 0.02);
}

TEST(Pipeline, TintedSkinMovesToTargetHue) {
  const PortraitSpec input_spec = shrink(corpus::tinted_input_spec());
  const PortraitSpec target_spec = shrink(corpus::target_spec());
  const ImageRGB input = render_portrait(input_spec);
  const ImageRGB target = render_portrait(target_spec);
  const auto input_cands = portrait_candidates(input_spec);
  const auto target_cands = portrait_candidates(target_spec);

  const PipelineConfig cfg = fast_config();
  const CorrectResult result =
      correct_headshot(input, target, input_cands, target_cands, cfg);

  const RegionMask target_skin = extract_skin(target, target_cands, cfg).skin;
  const double got = mean_skin_hue(result.image, result.regions.skin);
  const double want = mean_skin_hue(target, target_skin);
  EXPECT_LT(hue_distance(got, want), 0.02);

  // Eq. 6 guarantees on the solver output
  EXPECT_LE(result.report.skin_distance, result.report.eta_skin + 1e-6);
  EXPECT_LE(result.report.background_distance,
            result.report.eta_background + 1e-6);

  // stage times sum to the total within measurement noise
  double sum = 0.0;
  for (const auto& [name, seconds] : result.report.stage_seconds) sum += seconds;
  EXPECT_NEAR(sum, result.report.total_seconds,
              0.05 * result.report.total_seconds + 0.05);
}

TEST(Pipeline, SemiautoReproducesAutomaticBitwise) {
  const PortraitSpec input_spec = shrink(corpus::tinted_input_spec());
  const PortraitSpec target_spec = shrink(corpus::target_spec());
  const ImageRGB input = render_portrait(input_spec);
  const ImageRGB target = render_portrait(target_spec);
  const auto input_cands = portrait_candidates(input_spec);
  const auto target_cands = portrait_candidates(target_spec);

  PipelineConfig cfg = fast_config();
  cfg.max_iters = 80;
  const CorrectResult automatic =
      correct_headshot(input, target, input_cands, target_cands, cfg);
  const RegionMask target_skin = extract_skin(target, target_cands, cfg).skin;

  const ImageRGB semi =
      semiauto_correct(input, target, automatic.regions.skin,
                       automatic.regions.background, target_skin, cfg);
  EXPECT_EQ(static_cast<const PlaneTriple&>(semi),
            static_cast<const PlaneTriple&>(automatic.image));
}

TEST(Pipeline, SemiautoDegenerateBoundary) {
  // background mask = full complement of the skin mask: the boundary band
  // is empty and the constraints cover every pixel
  const PortraitSpec spec = shrink(corpus::tinted_input_spec());
  const ImageRGB input = render_portrait(spec);
  const PortraitSpec tspec = shrink(corpus::target_spec());
  const ImageRGB target = render_portrait(tspec);

  RegionMask skin(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const double dx = double(x - spec.face_center_x) / spec.face_rx;
      const double dy = double(y - spec.face_center_y) / spec.face_ry;
      if (dx * dx + dy * dy <= 1.0) skin.set(x, y, true);
    }
  RegionMask tgt_skin(tspec.width, tspec.height);
  for (int y = 0; y < tspec.height; ++y)
    for (int x = 0; x < tspec.width; ++x) {
      const double dx = double(x - tspec.face_center_x) / tspec.face_rx;
      const double dy = double(y - tspec.face_center_y) / tspec.face_ry;
      if (dx * dx + dy * dy <= 1.0) tgt_skin.set(x, y, true);
    }

  PipelineConfig cfg = fast_config();
  cfg.max_iters = 60;
  RunReport report;
  const ImageRGB out = semiauto_correct(input, target, skin, skin.complement(),
                                        tgt_skin, cfg, &report);
  EXPECT_EQ(out.width(), spec.width);
  EXPECT_LE(report.skin_distance, report.eta_skin + 1e-6);
  EXPECT_LE(report.background_distance, report.eta_background + 1e-6);
}

TEST(Pipeline, SemiautoRejectsOverlappingMasks) {
  const ImageRGB img(40, 40, 0.5);
  RegionMask a(40, 40), b(40, 40);
  a.set(3, 3, true);
  b.set(3, 3, true);
  try {
    semiauto_correct(img, img, a, b, a);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::invalid_input);
  }
}

TEST(Pipeline, DeterministicAcrossRuns) {
  const PortraitSpec input_spec = shrink(corpus::tinted_input_spec());
  const PortraitSpec target_spec = shrink(corpus::target_spec());
  const ImageRGB input = render_portrait(input_spec);
  const ImageRGB target = render_portrait(target_spec);
  const auto input_cands = portrait_candidates(input_spec);
  const auto target_cands = portrait_candidates(target_spec);

  PipelineConfig cfg = fast_config();
  cfg.max_iters = 60;
  const CorrectResult a =
      correct_headshot(input, target, input_cands, target_cands, cfg);
  const CorrectResult b =
      correct_headshot(input, target, input_cands, target_cands, cfg);
  EXPECT_EQ(static_cast<const PlaneTriple&>(a.image),
            static_cast<const PlaneTriple&>(b.image));
  EXPECT_EQ(a.report.to_json(false), b.report.to_json(false));
}

TEST(Pipeline, DarkImageReportsSkinNotFound) {
  PortraitSpec spec = shrink(corpus::tinted_input_spec());
  // crush everything below the value threshold
  for (auto* color : {&spec.skin_color, &spec.wall_color, &spec.hair_color,
                      &spec.clothes_color})
    for (double& v : *color) v *= 0.12;
  const ImageRGB img = render_portrait(spec);
  const auto cands = portrait_candidates(spec);
  try {
    correct_headshot(img, img, cands, cands, fast_config());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::skin_region_not_found);
  }
}

TEST(Pipeline, EmptyCandidateListRejected) {
  const ImageRGB img(50, 50, 0.5);
  try {
    correct_headshot(img, img, {}, {}, fast_config());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::invalid_input);
  }
}

TEST(Pipeline, MaskOverrideMatchesComputedMask) {
  const PortraitSpec input_spec = shrink(corpus::tinted_input_spec());
  const PortraitSpec target_spec = shrink(corpus::target_spec());
  const ImageRGB input = render_portrait(input_spec);
  const ImageRGB target = render_portrait(target_spec);
  const auto input_cands = portrait_candidates(input_spec);
  const auto target_cands = portrait_candidates(target_spec);

  PipelineConfig cfg = fast_config();
  cfg.max_iters = 40;
  const CorrectResult automatic =
      correct_headshot(input, target, input_cands, target_cands, cfg);

  MaskOverrides overrides;
  overrides.input_skin = automatic.regions.skin;
  overrides.target_skin = extract_skin(target, target_cands, cfg).skin;
  const CorrectResult overridden = correct_headshot(
      input, target, input_cands, target_cands, cfg, overrides);
  EXPECT_EQ(static_cast<const PlaneTriple&>(overridden.image),
            static_cast<const PlaneTriple&>(automatic.image));
}

TEST(Pipeline, YearbookSmallRun) {
  PortraitSpec spec = shrink(corpus::skin_wall_input_spec());
  const PortraitSpec target_spec_small = shrink(corpus::target_spec());
  const ImageRGB input = render_portrait(spec);
  const ImageRGB target = render_portrait(target_spec_small);

  PipelineConfig cfg = fast_config();
  cfg.crop_side = 160;
  cfg.max_iters = 200;

  const std::array<double, 3> blue = {74 / 255.0, 111 / 255.0, 179 / 255.0};
  ImageRGB background(160, 160);
  for (int c = 0; c < 3; ++c) background.channel[c].fill(blue[c]);

  const YearbookResult result =
      yearbook_generate(input, target, background, portrait_candidates(spec),
                        portrait_candidates(target_spec_small), cfg);

  EXPECT_EQ(result.image.width(), 160);
  EXPECT_EQ(result.image.height(), 160);

  // corners are pure wall, pinned to the background by seed growth; the
  // sigmoid leaves alpha at 1/(1+e^5), so the blend sits within one byte
  // of the requested color
  for (const auto [x, y] : {std::pair<int, int>{0, 0}, {159, 0}, {0, 159},
                            {159, 159}}) {
    for (int c = 0; c < 3; ++c)
      ASSERT_NEAR(result.image.channel[c].at(x, y), blue[c], 1.0 / 255.0)
          << "corner " << x << "," << y;
  }

  for (std::size_t i = 0; i < result.alpha.alpha.size(); ++i) {
    ASSERT_GE(result.alpha.alpha[i], 0.0);
    ASSERT_LE(result.alpha.alpha[i], 1.0);
  }

  EXPECT_LE(result.report.skin_distance, result.report.eta_skin + 1e-6);
  EXPECT_LE(result.report.background_distance,
            result.report.eta_background + 1e-6);
}

TEST(Pipeline, YearbookRejectsWrongBackgroundSize) {
  const PortraitSpec spec = shrink(corpus::skin_wall_input_spec());
  const ImageRGB input = render_portrait(spec);
  PipelineConfig cfg = fast_config();
  cfg.crop_side = 160;
  try {
    yearbook_generate(input, input, ImageRGB(80, 80, 0.5),
                      portrait_candidates(spec), portrait_candidates(spec), cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::invalid_input);
  }
}

TEST(Config, JsonDefaultsAndOverrides) {
  const PipelineConfig def = config_from_json(nlohmann::json::object());
  EXPECT_DOUBLE_EQ(def.scale_factor, 2.0);
  EXPECT_EQ(def.hue_clusters, 4);
  EXPECT_EQ(def.gif_window, 19);
  EXPECT_EQ(def.matting_window, 31);
  EXPECT_DOUBLE_EQ(def.lipschitz, 500.0);
  EXPECT_DOUBLE_EQ(def.eta_s_scale, 5e-4);
  EXPECT_DOUBLE_EQ(def.eta_b_scale, 5e-10);
  EXPECT_EQ(def.max_iters, 500);
  EXPECT_EQ(def.crop_side, 320);
  EXPECT_EQ(def.matting_config().window_radius, 15);

  const PipelineConfig cfg = config_from_json(nlohmann::json{
      {"gif_window", 9},
      {"seed", 77},
      {"matting", {{"lambda_c", 250.0}, {"outer_iterations", 2}}}});
  EXPECT_EQ(cfg.gif_window, 9);
  EXPECT_EQ(cfg.seed, 77u);
  EXPECT_DOUBLE_EQ(cfg.matting.lambda_c, 250.0);
  EXPECT_EQ(cfg.matting.outer_iterations, 2);
  EXPECT_DOUBLE_EQ(cfg.epsilon, 1e-7);
}

TEST(Config, ReportJsonShape) {
  RunReport report;
  report.stage_seconds = {{"grading", 0.5}};
  report.total_seconds = 1.0;
  report.solver_iterations = 42;
  report.warnings = {"w"};
  const nlohmann::json full = report.to_json(true);
  EXPECT_TRUE(full.contains("stages"));
  EXPECT_TRUE(full.contains("total_seconds"));
  EXPECT_TRUE(full.contains("solver"));
  EXPECT_TRUE(full.contains("constraints"));
  EXPECT_TRUE(full.contains("regions"));
  const nlohmann::json stripped = report.to_json(false);
  EXPECT_FALSE(stripped.contains("stages"));
  EXPECT_FALSE(stripped.contains("total_seconds"));
  EXPECT_EQ(stripped["solver"]["iterations"], 42);
}
