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

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "pixelreg/error.hpp"
#include "pixelreg/image.hpp"
#include "pixelreg/scene.hpp"
#include "pixelreg/viewsynth.hpp"

namespace pixelreg {

enum class ControlMode { kPlain, kGeneralized };

inline std::string to_string(ControlMode m) {
  return m == ControlMode::kPlain ? "plain" : "generalized";
}

inline ControlMode control_mode_from_string(const std::string& s) {
  if (s == "plain") return ControlMode::kPlain;
  if (s == "generalized") return ControlMode::kGeneralized;
  throw InvalidArgument("unknown controller mode '" + s + "'");
}

// Where the loop gets its reference image: the view synthesizer, or the
// true camera image at the desired spacing.
enum class ReferenceSource { kSynthesizer, kOracle };

inline std::string to_string(ReferenceSource r) {
  return r == ReferenceSource::kSynthesizer ? "synthesizer" : "oracle";
}

inline ReferenceSource reference_source_from_string(const std::string& s) {
  if (s == "synthesizer") return ReferenceSource::kSynthesizer;
  if (s == "oracle") return ReferenceSource::kOracle;
  throw InvalidArgument("unknown reference source '" + s + "'");
}

struct ControllerConfig {
  double k = 0.02;
  ControlMode mode = ControlMode::kPlain;
  double s0 = kDefaultS0Min;
  std::optional<double> clamp;
  ReferenceSource reference = ReferenceSource::kSynthesizer;

  bool operator==(const ControllerConfig&) const = default;
};

inline void validate(const ControllerConfig& cfg) {
  if (!std::isfinite(cfg.k)) throw InvalidArgument("gain k must be finite");
  if (cfg.mode == ControlMode::kGeneralized) ViewSynthesizer::check_s0(cfg.s0);
  if (cfg.clamp && !(*cfg.clamp > 0.0)) {
    throw InvalidArgument("force clamp must be positive");
  }
}

inline double apply_clamp(double u, const ControllerConfig& cfg) {
  return cfg.clamp ? std::clamp(u, -*cfg.clamp, *cfg.clamp) : u;
}

// u = k * sum(ybar_hat - y)
inline double pixel_control(const Image& y, const Image& ybar_hat,
                            const ControllerConfig& cfg) {
  require_same_shape(y, ybar_hat);
  const auto a = y.vec();
  const auto b = ybar_hat.vec();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += b[i] - a[i];
  return apply_clamp(cfg.k * sum, cfg);
}

// u = k * sum(-|ybar_hat - y0| + |y - y0|)
inline double generalized_pixel_control(const Image& y, const Image& ybar_hat,
                                        const Image& y0,
                                        const ControllerConfig& cfg) {
  require_same_shape(y, ybar_hat);
  require_same_shape(y, y0);
  const auto a = y.vec();
  const auto b = ybar_hat.vec();
  const auto z = y0.vec();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += -std::abs(b[i] - z[i]) + std::abs(a[i] - z[i]);
  }
  return apply_clamp(cfg.k * sum, cfg);
}

// u*(x2): the pixel controller driven by the true reference render(s_bar)
// and, in generalized mode, the true background.
class IdealController {
 public:
  IdealController(const SceneParams& scene, double s_bar, ControllerConfig cfg)
      : renderer_(scene), cfg_(cfg), s_bar_(s_bar) {
    validate(cfg_);
    ybar_ = renderer_.render(s_bar);
  }

  double operator()(double x2) const { return control(renderer_.render(s_bar_ - x2)); }

  // Same law for an arbitrary camera frame.
  double control(const Image& y) const {
    if (cfg_.mode == ControlMode::kPlain) return pixel_control(y, ybar_, cfg_);
    return generalized_pixel_control(y, ybar_, renderer_.background(), cfg_);
  }

  double s_bar() const { return s_bar_; }
  const Image& reference() const { return ybar_; }
  const Renderer& renderer() const { return renderer_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  Renderer renderer_;
  ControllerConfig cfg_;
  double s_bar_;
  Image ybar_;
};

inline double ideal_control(double x2, double s_bar, const SceneParams& scene,
                            const ControllerConfig& cfg) {
  return IdealController(scene, s_bar, cfg)(x2);
}

// The controller as it runs in the loop: reference from the synthesizer (or
// the oracle), background from a large-s0 removal in generalized mode. The
// previous spacing estimate seeds the next search order.
class PixelLoopController {
 public:
  struct Output {
    double u = 0.0;
    double s_hat = 0.0;  // NaN in oracle mode
    double reference_error = 0.0;  // ||vec(ybar_hat - y)||_2
    Image reference;
  };

  PixelLoopController(const SceneParams& scene, double s_bar,
                      ControllerConfig cfg)
      : ideal_(scene, s_bar, cfg), synth_(scene) {}

  Output step(const Image& y) {
    Output out;
    const ControllerConfig& cfg = ideal_.config();
    if (cfg.reference == ReferenceSource::kOracle) {
      out.s_hat = std::numeric_limits<double>::quiet_NaN();
      out.reference = ideal_.reference();
      out.u = ideal_.control(y);
    } else {
      const SpacingEstimate est = synth_.estimator().estimate(y, hint_);
      hint_ = est.s_hat;
      out.s_hat = est.s_hat;
      out.reference = synth_.synthesize_from(ideal_.s_bar(), y, est).output;
      if (cfg.mode == ControlMode::kPlain) {
        out.u = pixel_control(y, out.reference, cfg);
      } else {
        out.u = generalized_pixel_control(y, out.reference,
                                          synth_.background_from(y, est), cfg);
      }
    }
    out.reference_error = l2_distance(out.reference, y);
    return out;
  }

  const IdealController& ideal() const { return ideal_; }

 private:
  IdealController ideal_;
  ViewSynthesizer synth_;
  std::optional<double> hint_;
};

}  // namespace pixelreg
