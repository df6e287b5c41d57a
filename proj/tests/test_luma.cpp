#include <gtest/gtest.h>

#include "facegrade/luma.hpp"
#include "support/test_util.hpp"

using namespace facegrade;

namespace {

ImageRGB single_pixel(double r, double g, double b) {
  ImageRGB img(1, 1);
  img.channel[0][0] = r;
  img.channel[1][0] = g;
  img.channel[2][0] = b;
  return img;
}

}  // namespace

TEST(Luma, DecomposeExamples) {
  const auto gray = decompose(single_pixel(0.5, 0.5, 0.5));
  EXPECT_DOUBLE_EQ(gray.intensity[0], 0.5);
  EXPECT_DOUBLE_EQ(gray.color.channel[0][0], 1.0);
  EXPECT_DOUBLE_EQ(gray.color.channel[1][0], 1.0);
  EXPECT_DOUBLE_EQ(gray.color.channel[2][0], 1.0);

  const auto red = decompose(single_pixel(1, 0, 0));
  EXPECT_DOUBLE_EQ(red.intensity[0], 1.0);
  EXPECT_DOUBLE_EQ(red.color.channel[0][0], 1.0);
  EXPECT_DOUBLE_EQ(red.color.channel[1][0], 0.0);

  const auto black = decompose(single_pixel(0, 0, 0));
  EXPECT_DOUBLE_EQ(black.intensity[0], 0.0);
  EXPECT_DOUBLE_EQ(black.color.channel[0][0], 1.0);
  EXPECT_DOUBLE_EQ(black.color.channel[1][0], 1.0);
  EXPECT_DOUBLE_EQ(black.color.channel[2][0], 1.0);
}

TEST(Luma, ReconstructionInvariant) {
  // I * C gives back the pixel wherever I > 0
  Rng rng(1);
  const ImageRGB img = testutil::random_image(16, 16, rng);
  const auto pair = decompose(img);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (pair.intensity[i] <= 0.0) continue;
    for (int c = 0; c < 3; ++c)
      ASSERT_NEAR(pair.intensity[i] * pair.color.channel[c][i],
                  img.channel[c][i], 1e-12);
  }
}

TEST(Luma, RoundTrip) {
  Rng rng(2);
  const ImageRGB img = testutil::random_image(12, 9, rng);
  const auto pair = decompose(img);
  const ImageRGB back = recombine_luminance(pair, pair);
  EXPECT_LT(testutil::max_abs_diff(img, back), 1e-12);
}

TEST(Luma, ZeroIntensityGivesBlack) {
  const ImageRGB y = single_pixel(0, 0, 0);
  const ImageRGB x = single_pixel(0.3, 0.5, 0.7);
  const ImageRGB out = recombine_luminance(decompose(y), decompose(x));
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.channel[c][0], 0.0);
}

TEST(Luma, ScaleCovariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = 0.05 + 0.95 * rng.uniform01();
    const double g = 0.05 + 0.95 * rng.uniform01();
    const double b = 0.05 + 0.95 * rng.uniform01();
    const double scale = 0.05 + 0.95 * rng.uniform01();
    const auto base = decompose(single_pixel(r, g, b));
    const auto scaled = decompose(single_pixel(scale * r, scale * g, scale * b));
    ASSERT_NEAR(scaled.intensity[0], scale * base.intensity[0], 1e-10);
    for (int c = 0; c < 3; ++c)
      ASSERT_NEAR(scaled.color.channel[c][0], base.color.channel[c][0], 1e-10);
  }
}

TEST(Luma, HalfIntensitySameChromaticityRecoversInput) {
  // y = 0.5 * x: the graft returns y itself
  Rng rng(4);
  const ImageRGB x = testutil::random_image(8, 8, rng);
  ImageRGB y = x;
  for (auto& ch : y.channel)
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] *= 0.5;
  const ImageRGB out = recombine_luminance(decompose(y), decompose(x));
  EXPECT_LT(testutil::max_abs_diff(out, y), 1e-10);
}

TEST(Luma, OutputClippedToUnitRange) {
  // bright intensity against a saturated chromaticity can exceed 1
  const ImageRGB y = single_pixel(0.95, 0.95, 0.95);
  const ImageRGB x = single_pixel(0.9, 0.05, 0.05);
  const ImageRGB out = recombine_luminance(decompose(y), decompose(x));
  for (int c = 0; c < 3; ++c) {
    EXPECT_GE(out.channel[c][0], 0.0);
    EXPECT_LE(out.channel[c][0], 1.0);
  }
  EXPECT_DOUBLE_EQ(out.channel[0][0], 1.0);  // clipped, not renormalized
}

TEST(Luma, SizeMismatchRejected) {
  const auto a = decompose(ImageRGB(3, 3, 0.5));
  const auto b = decompose(ImageRGB(4, 3, 0.5));
  EXPECT_THROW(recombine_luminance(a, b), Error);
}
