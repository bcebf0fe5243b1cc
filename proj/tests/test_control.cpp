// Copyright 2026 The pixelreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pixelreg/analysis.hpp"
#include "pixelreg/control.hpp"

namespace pixelreg {
namespace {

// Single-channel 3x3 frames: the reference shows one object pixel in the top
// row, the observation shows the object closer, filling the bottom row.
struct ThreeByThree {
  Image ref, obs, bg;
};

ThreeByThree three_by_three(double O, double B) {
  ThreeByThree t{Image(3, 3, 1, B), Image(3, 3, 1, B), Image(3, 3, 1, B)};
  t.ref.at(0, 1) = O;
  for (int c = 0; c < 3; ++c) t.obs.at(2, c) = O;
  return t;
}

ControllerConfig unit_gain(ControlMode mode = ControlMode::kPlain) {
  ControllerConfig cfg;
  cfg.k = 1.0;
  cfg.mode = mode;
  return cfg;
}

TEST(PixelControl, ZeroWhenReferenceMatches) {
  const Image y = render(10.0, default_scene());
  EXPECT_EQ(pixel_control(y, y, ControllerConfig{}), 0.0);
}

TEST(PixelControl, ThreeByThreePolarity) {
  const auto green = three_by_three(1.0, 0.0);
  EXPECT_EQ(pixel_control(green.obs, green.ref, unit_gain()), -2.0);
  const auto black = three_by_three(0.0, 1.0);
  EXPECT_EQ(pixel_control(black.obs, black.ref, unit_gain()), 2.0);
}

TEST(GeneralizedPixelControl, ThreeByThreeEitherPolarity) {
  const ControllerConfig cfg = unit_gain(ControlMode::kGeneralized);
  for (auto [O, B] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0},
                      std::pair{0.3, 0.8}, std::pair{0.8, 0.3}}) {
    const auto t = three_by_three(O, B);
    EXPECT_DOUBLE_EQ(generalized_pixel_control(t.obs, t.ref, t.bg, cfg),
                     2.0 * std::abs(B - O));
  }
}

TEST(GeneralizedPixelControl, ZeroWhenReferenceMatches) {
  const Image y = render(10.0, default_scene());
  const ControllerConfig cfg = unit_gain(ControlMode::kGeneralized);
  EXPECT_EQ(generalized_pixel_control(y, y, Image(128, 96, 3, 0.3), cfg), 0.0);
  EXPECT_EQ(generalized_pixel_control(y, y, render_background(default_scene()), cfg),
            0.0);
}

TEST(GeneralizedPixelControl, PolaritySwapInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ControllerConfig cfg = unit_gain(ControlMode::kGeneralized);
  for (int i = 0; i < 50; ++i) {
    const double O = u(rng), B = u(rng);
    const auto a = three_by_three(O, B);
    const auto b = three_by_three(B, O);
    EXPECT_DOUBLE_EQ(generalized_pixel_control(a.obs, a.ref, a.bg, cfg),
                     generalized_pixel_control(b.obs, b.ref, b.bg, cfg));
  }
}

TEST(PixelControl, LinearInErrorAndGain) {
  const SceneParams sc = default_scene();
  const Image y = render(12.0, sc), ref = render(10.0, sc);
  ControllerConfig cfg;
  cfg.k = 0.02;
  const double base = pixel_control(y, ref, cfg);
  ControllerConfig doubled = cfg;
  doubled.k = 0.04;
  EXPECT_DOUBLE_EQ(pixel_control(y, ref, doubled), 2.0 * base);

  // Scaling the error image (ref - y) by a about y.
  Image scaled = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    scaled.vec()[i] = y.vec()[i] + 3.0 * (ref.vec()[i] - y.vec()[i]);
  }
  EXPECT_NEAR(pixel_control(y, scaled, cfg), 3.0 * base, 1e-9 * std::abs(base));
}

TEST(PixelControl, IntensityScalingPreservesSign) {
  const SceneParams sc = default_scene();
  const ControllerConfig plain = unit_gain();
  const ControllerConfig gen = unit_gain(ControlMode::kGeneralized);
  const Image ref = render(10.0, sc), bg = render_background(sc);
  auto scale = [](const Image& img, double g) {
    Image out = img;
    for (double& v : out.vec()) v *= g;
    return out;
  };
  for (double s : {7.0, 9.5, 10.5, 14.0}) {
    const Image y = render(s, sc);
    const double up = pixel_control(y, ref, plain);
    const double ug = generalized_pixel_control(y, ref, bg, gen);
    for (double g : {0.25, 2.0, 7.0}) {
      const double sp = pixel_control(scale(y, g), scale(ref, g), plain);
      const double sg = generalized_pixel_control(scale(y, g), scale(ref, g),
                                                  scale(bg, g), gen);
      EXPECT_NEAR(sp, g * up, 1e-9 * std::abs(g * up));
      EXPECT_NEAR(sg, g * ug, 1e-9 * std::abs(g * ug));
      EXPECT_EQ(std::signbit(sp), std::signbit(up));
      EXPECT_EQ(std::signbit(sg), std::signbit(ug));
    }
  }
}

TEST(PixelControl, ShapeMismatch) {
  EXPECT_THROW(pixel_control(Image(3, 3, 1), Image(3, 3, 3), unit_gain()),
               DimensionMismatch);
}

TEST(Clamp, LimitsForceSymmetrically) {
  ControllerConfig cfg = unit_gain();
  EXPECT_EQ(apply_clamp(1e6, cfg), 1e6);
  cfg.clamp = 50.0;
  EXPECT_EQ(apply_clamp(80.0, cfg), 50.0);
  EXPECT_EQ(apply_clamp(-80.0, cfg), -50.0);
  EXPECT_EQ(apply_clamp(12.0, cfg), 12.0);
  const auto t = three_by_three(0.0, 1.0);
  cfg.clamp = 1.5;
  EXPECT_EQ(pixel_control(t.obs, t.ref, cfg), 1.5);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig cfg;
  cfg.k = NAN;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = ControllerConfig{};
  cfg.mode = ControlMode::kGeneralized;
  cfg.s0 = 50.0;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg.s0 = 250.0;
  EXPECT_NO_THROW(validate(cfg));
  cfg.clamp = -1.0;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  EXPECT_EQ(control_mode_from_string("generalized"), ControlMode::kGeneralized);
  EXPECT_EQ(reference_source_from_string("oracle"), ReferenceSource::kOracle);
  EXPECT_THROW(control_mode_from_string("pid"), InvalidArgument);
}

TEST(IdealControl, ZeroAtReference) {
  for (ControlMode mode : {ControlMode::kPlain, ControlMode::kGeneralized}) {
    EXPECT_EQ(ideal_control(0.0, 10.0, default_scene(), unit_gain(mode)), 0.0);
  }
}

TEST(IdealControl, SignFollowsSpacingErrorInGeneralizedMode) {
  const ControllerConfig cfg = unit_gain(ControlMode::kGeneralized);
  for (const LeadObject& obj : object_polarities()) {
    for (const Background& bg : background_variants()) {
      SceneParams sc = default_scene();
      sc.object = obj;
      sc.background = bg;
      const IdealController ideal(sc, 10.0, cfg);
      for (double x2 : symmetric_grid(5.0, 0.25)) {
        if (x2 == 0.0) continue;
        const double u = ideal(x2);
        EXPECT_EQ(u > 0.0, x2 > 0.0) << "x2=" << x2;
        EXPECT_NE(u, 0.0);
      }
    }
  }
}

TEST(PixelLoopController, OracleModeMatchesIdeal) {
  ControllerConfig cfg = unit_gain(ControlMode::kGeneralized);
  cfg.reference = ReferenceSource::kOracle;
  const SceneParams sc = default_scene();
  PixelLoopController loop(sc, 10.0, cfg);
  for (double s : {6.0, 10.0, 13.3}) {
    const Image y = render(s, sc);
    const auto out = loop.step(y);
    EXPECT_EQ(out.u, loop.ideal().control(y));
    EXPECT_TRUE(std::isnan(out.s_hat));
  }
}

TEST(PixelLoopController, SynthesizerTracksIdealNearReference) {
  const SceneParams sc = default_scene();
  for (ControlMode mode : {ControlMode::kPlain, ControlMode::kGeneralized}) {
    PixelLoopController loop(sc, 10.0, unit_gain(mode));
    const Image y = render(10.0, sc);
    const auto out = loop.step(y);
    EXPECT_NEAR(out.s_hat, 10.0, 1e-9);
    EXPECT_NEAR(out.u, 0.0, 1e-6);
    EXPECT_LT(out.reference_error, 1e-6);
    for (double s : {8.0, 12.5}) {
      const Image yy = render(s, sc);
      const double u = loop.step(yy).u;
      const double ustar = loop.ideal().control(yy);
      EXPECT_EQ(u > 0.0, ustar > 0.0) << to_string(mode) << " s=" << s;
    }
  }
}

}  // namespace
}  // namespace pixelreg
