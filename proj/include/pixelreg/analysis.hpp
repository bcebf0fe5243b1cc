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
#include <sstream>
#include <string>
#include <vector>

#include "pixelreg/control.hpp"
#include "pixelreg/error.hpp"
#include "pixelreg/image.hpp"
#include "pixelreg/scene.hpp"
#include "pixelreg/viewsynth.hpp"

namespace pixelreg {

inline constexpr double kCheckTolerance = 1e-9;

struct ErrorSignal {
  std::vector<double> h;  // vec(render(s_bar) - render(s_bar - x2))
  double x2 = 0.0;
  double s_bar = 0.0;
  double norm_sq = 0.0;
  double signed_sum = 0.0;  // sum(-|ybar - y0| + |y - y0|)
};

// Evaluates the pixel error map H(x2) for one scene and reference spacing,
// reusing the reference frame and synthesizer across calls.
class ErrorSignalProbe {
 public:
  ErrorSignalProbe(const SceneParams& scene, double s_bar)
      : renderer_(scene), synth_(scene), s_bar_(s_bar) {
    ybar_ = renderer_.render(s_bar);
  }

  ErrorSignal operator()(double x2) const {
    const Image y = renderer_.render(s_bar_ - x2);
    const Image y0 = synth_.background_view(y, kDefaultS0Min, s_bar_ - x2);
    ErrorSignal e;
    e.x2 = x2;
    e.s_bar = s_bar_;
    const auto a = ybar_.vec();
    const auto b = y.vec();
    const auto z = y0.vec();
    e.h.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      e.h[i] = a[i] - b[i];
      e.norm_sq += e.h[i] * e.h[i];
      e.signed_sum += -std::abs(a[i] - z[i]) + std::abs(b[i] - z[i]);
    }
    return e;
  }

  // hTh only; skips the background synthesis.
  double norm_sq(double x2) const {
    const Image y = renderer_.render(s_bar_ - x2);
    const auto a = ybar_.vec();
    const auto b = y.vec();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return acc;
  }

 private:
  Renderer renderer_;
  ViewSynthesizer synth_;
  double s_bar_;
  Image ybar_;
};

inline ErrorSignal error_signal(double x2, double s_bar,
                                const SceneParams& scene) {
  require_in_range(s_bar - x2, scene);
  return ErrorSignalProbe(scene, s_bar)(x2);
}

struct CheckResult {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct AssumptionReport {
  CheckResult null_space{"null_space", true, 0.0, 0.0, {}};
  CheckResult direction{"direction", true, 0.0, 0.0, {}};
  CheckResult monotonic{"monotonic", true, 0.0, 0.0, {}};
  CheckResult background_invariance{"background_invariance", true, 0.0, 0.0, {}};

  bool all_passed() const {
    return null_space.passed && direction.passed && monotonic.passed &&
           background_invariance.passed;
  }
  std::vector<CheckResult> rows() const {
    return {null_space, direction, monotonic, background_invariance};
  }
};

inline std::vector<double> symmetric_grid(double x2_max, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::floor(x2_max / step + 1e-9));
  for (int i = -n; i <= n; ++i) g.push_back(i * step);
  return g;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline void fail(CheckResult& r, const std::string& why) {
  if (r.passed) r.detail = why;
  r.passed = false;
}

}  // namespace detail

// Null space, direction, monotonicity and background invariance of the map
// x2 -> H(x2) for the given scene. Background invariance is checked against
// every background in `backgrounds` (the scene's own is always included):
// the frame difference must vanish outside the union of the two supports
// and factor as (coverage change) x (object - background contrast) inside.
inline AssumptionReport check_assumptions(
    double s_bar, const SceneParams& scene, const std::vector<double>& grid,
    std::vector<Background> backgrounds = background_variants()) {
  for (double x2 : grid) require_in_range(s_bar - x2, scene);
  require_in_range(s_bar, scene);
  AssumptionReport rep;
  rep.null_space.threshold = kCheckTolerance;
  rep.direction.threshold = kCheckTolerance;
  rep.monotonic.threshold = kCheckTolerance;
  rep.background_invariance.threshold = kCheckTolerance;

  const ErrorSignalProbe probe(scene, s_bar);
  std::vector<double> norms(grid.size());
  double min_nonzero = std::numeric_limits<double>::infinity();
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x2 = grid[i];
    const ErrorSignal e = probe(x2);
    norms[i] = e.norm_sq;
    if (x2 == 0.0) {
      if (e.norm_sq != 0.0) {
        detail::fail(rep.null_space, "nonzero error at x2 = 0");
      }
      continue;
    }
    min_nonzero = std::min(min_nonzero, e.norm_sq);
    if (!(e.norm_sq > kCheckTolerance)) {
      detail::fail(rep.null_space,
                   "vanishing error at x2 = " + detail::fmt(x2));
    }
    const double margin = (x2 > 0 ? 1.0 : -1.0) * e.signed_sum;
    min_margin = std::min(min_margin, margin);
    if (!(margin > kCheckTolerance)) {
      detail::fail(rep.direction, "signed sum " + detail::fmt(e.signed_sum) +
                                      " at x2 = " + detail::fmt(x2));
    }
  }
  rep.null_space.value = std::isfinite(min_nonzero) ? min_nonzero : 0.0;
  rep.direction.value = std::isfinite(min_margin) ? min_margin : 0.0;

  // Same-sign sequences ordered by |x2|.
  double worst_drop = 0.0;
  for (int sign : {1, -1}) {
    std::vector<std::pair<double, double>> side;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] * sign >= 0.0) side.emplace_back(std::abs(grid[i]), norms[i]);
    }
    std::sort(side.begin(), side.end());
    for (std::size_t i = 1; i < side.size(); ++i) {
      const double drop = side[i - 1].second - side[i].second;
      worst_drop = std::max(worst_drop, drop);
      if (drop > kCheckTolerance * std::max(1.0, side[i - 1].second)) {
        detail::fail(rep.monotonic,
                     "hTh decreases between |x2| = " +
                         detail::fmt(side[i - 1].first) + " and " +
                         detail::fmt(side[i].first));
      }
    }
  }
  rep.monotonic.value = worst_drop;

  if (std::find(backgrounds.begin(), backgrounds.end(), scene.background) ==
      backgrounds.end()) {
    backgrounds.push_back(scene.background);
  }
  double worst = 0.0;
  const Rgb& o = scene.object.color;
  for (const Background& bg : backgrounds) {
    SceneParams sc = scene;
    sc.background = bg;
    const Renderer renderer(sc);
    const Image ybar = renderer.render(s_bar);
    const AlphaMask abar = object_alpha(s_bar, sc);
    const Image& back = renderer.background();
    for (double x2 : grid) {
      const double s = s_bar - x2;
      const Image y = renderer.render(s);
      const AlphaMask a = object_alpha(s, sc);
      for (int r = 0; r < y.height(); ++r) {
        for (int c = 0; c < y.width(); ++c) {
          const bool inside = a.in_support(r, c) || abar.in_support(r, c);
          const double da = abar(r, c) - a(r, c);
          for (int k = 0; k < 3; ++k) {
            const double d = ybar.at(r, c, k) - y.at(r, c, k);
            if (!inside && d != 0.0) {
              detail::fail(rep.background_invariance,
                           "difference outside the object supports for "
                           "background " + to_string(bg.style));
            }
            worst = std::max(worst,
                             std::abs(d - da * (o[k] - back.at(r, c, k))));
          }
        }
      }
    }
  }
  rep.background_invariance.value = worst;
  if (worst > kCheckTolerance) {
    detail::fail(rep.background_invariance,
                 "difference does not factor through the coverage change "
                 "(deviation " + detail::fmt(worst) + ")");
  }
  return rep;
}

struct QuadraticFit {
  double c = 0.0;
  double slope = 0.0;        // c^2
  double r_squared = 0.0;    // over [-x2_max, x2_max]
  double validity_max = 0.0; // largest |x2| range with R^2 >= 0.95
  double validity_r_squared = 0.0;
};

namespace detail {

struct LsFit {
  double slope, r2;
};

// Least squares n = slope * x^2 through the origin; R^2 about the mean.
inline LsFit fit_through_origin(const std::vector<double>& x,
                                const std::vector<double>& n) {
  double sxx = 0.0, sxn = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double q = x[i] * x[i];
    sxx += q * q;
    sxn += q * n[i];
    mean += n[i];
  }
  mean /= static_cast<double>(n.size());
  const double slope = sxx > 0.0 ? sxn / sxx : 0.0;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = n[i] - slope * x[i] * x[i];
    ss_res += r * r;
    ss_tot += (n[i] - mean) * (n[i] - mean);
  }
  return {slope, ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0};
}

}  // namespace detail

inline constexpr double kQuadraticR2 = 0.95;

// hTh ~ c^2 x2^2 on 41 symmetric samples over [-x2_max, x2_max].
inline QuadraticFit fit_c(double s_bar, const SceneParams& scene,
                          double x2_max, int half_samples = 20) {
  if (!(x2_max > 0.0) || half_samples < 2) {
    throw InvalidArgument("fit_c needs x2_max > 0 and at least 2 samples");
  }
  require_in_range(s_bar - x2_max, scene);
  require_in_range(s_bar + x2_max, scene);
  const ErrorSignalProbe probe(scene, s_bar);
  std::vector<double> xs, ns;
  for (int i = -half_samples; i <= half_samples; ++i) {
    const double x2 = x2_max * i / half_samples;
    xs.push_back(x2);
    ns.push_back(probe.norm_sq(x2));
  }
  const detail::LsFit full = detail::fit_through_origin(xs, ns);
  if (!(full.slope > 0.0) || full.r2 < 0.5) {
    throw AssumptionViolation("hTh is not locally quadratic in x2 (slope " +
                              detail::fmt(full.slope) + ", R^2 " +
                              detail::fmt(full.r2) + ")");
  }
  QuadraticFit fit;
  fit.slope = full.slope;
  fit.c = std::sqrt(full.slope);
  fit.r_squared = full.r2;
  for (int j = half_samples; j >= 2; --j) {
    std::vector<double> sx(xs.begin() + (half_samples - j),
                           xs.begin() + (half_samples + j + 1));
    std::vector<double> sn(ns.begin() + (half_samples - j),
                           ns.begin() + (half_samples + j + 1));
    const detail::LsFit sub = detail::fit_through_origin(sx, sn);
    if (sub.r2 >= kQuadraticR2) {
      fit.validity_max = x2_max * j / half_samples;
      fit.validity_r_squared = sub.r2;
      break;
    }
  }
  return fit;
}

struct Eps1Estimate {
  double eps1 = 0.0;          // max ||vec(ybar - ybar_hat)||_2
  double max_relative = 0.0;  // max of the above over ||vec(ybar)||_2
  double worst_s = 0.0;
  double max_spacing_error = 0.0;  // max |s_hat - s|
};

inline Eps1Estimate estimate_eps1(double s_bar, const SceneParams& scene,
                                  const std::vector<double>& s_grid) {
  require_in_range(s_bar, scene);
  const Renderer renderer(scene);
  const ViewSynthesizer synth(scene);
  const Image ybar = renderer.render(s_bar);
  const double ref = l2_norm(ybar);
  Eps1Estimate out;
  for (double s : s_grid) {
    require_in_range(s, scene);
    const SynthesisReport rep = synth.synthesize(s_bar, renderer.render(s), s);
    const double e = l2_distance(ybar, rep.output);
    if (e >= out.eps1) {
      out.eps1 = e;
      out.worst_s = s;
    }
    out.max_relative = std::max(out.max_relative, e / ref);
    out.max_spacing_error =
        std::max(out.max_spacing_error, std::abs(rep.s_hat - s));
  }
  return out;
}

// max over the grid of |u(pixel loop) - u*(x2)|.
inline double estimate_eps2(double s_bar, const SceneParams& scene,
                            const ControllerConfig& cfg,
                            const std::vector<double>& x2_grid) {
  PixelLoopController loop(scene, s_bar, cfg);
  const IdealController& ideal = loop.ideal();
  double eps2 = 0.0;
  for (double x2 : x2_grid) {
    require_in_range(s_bar - x2, scene);
    const Image y = ideal.renderer().render(s_bar - x2);
    eps2 = std::max(eps2, std::abs(loop.step(y).u - ideal.control(y)));
  }
  return eps2;
}

}  // namespace pixelreg
