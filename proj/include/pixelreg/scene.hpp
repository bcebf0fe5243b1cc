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

// Procedural pinhole camera: a flat-colored, fronto-parallel rectangle
// (the lead vehicle) centered at a fixed pixel location over a static
// background. The rectangle's pixel size is f * size_m / s.
//
// Coordinates are continuous pixel-center coordinates: pixel (row, col) sits
// at (x = col, y = row). The object footprint is opaque; outside it the
// coverage falls off as a truncated Gaussian of the distance to the
// footprint, reaching zero at the blur margin (4 sigma).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pixelreg/error.hpp"
#include "pixelreg/image.hpp"

namespace pixelreg {

using Rgb = std::array<double, 3>;

struct LeadObject {
  Rgb color{0.10, 0.12, 0.35};
  double width_m = 2.0;
  double height_m = 1.5;

  bool operator==(const LeadObject&) const = default;
};

enum class BackgroundStyle { kSolid, kRoadGradient, kVerticalStripes };

inline std::string to_string(BackgroundStyle s) {
  switch (s) {
    case BackgroundStyle::kSolid:
      return "solid";
    case BackgroundStyle::kRoadGradient:
      return "road_gradient";
    case BackgroundStyle::kVerticalStripes:
      return "vertical_stripes";
  }
  return "unknown";
}

inline BackgroundStyle background_style_from_string(const std::string& s) {
  if (s == "solid") return BackgroundStyle::kSolid;
  if (s == "road_gradient") return BackgroundStyle::kRoadGradient;
  if (s == "vertical_stripes") return BackgroundStyle::kVerticalStripes;
  throw InvalidArgument("unknown background style '" + s + "'");
}

// Omega. `primary` is the solid color, the top row of the road gradient, or
// the first stripe color; `secondary` is the gradient's bottom row or the
// second stripe color. The seed shifts the stripe phase.
struct Background {
  BackgroundStyle style = BackgroundStyle::kRoadGradient;
  Rgb primary{0.80, 0.85, 0.92};
  Rgb secondary{0.55, 0.55, 0.55};
  std::uint32_t seed = 0;
  int stripe_width = 6;

  bool operator==(const Background&) const = default;
};

struct Camera {
  double focal_px = 256.0;
  int width = 128;
  int height = 96;
  // Object-center offsets from the image center, in pixels.
  double offset_x = 0.0;
  double offset_y = 0.0;

  double center_x() const { return 0.5 * (width - 1) + offset_x; }
  double center_y() const { return 0.5 * (height - 1) + offset_y; }

  bool operator==(const Camera&) const = default;
};

struct SceneParams {
  LeadObject object;
  Background background;
  Camera camera;
  double blur_sigma = 2.0;
  double s_min = 4.0;
  double s_max = 60.0;

  bool operator==(const SceneParams&) const = default;
};

inline void validate(const SceneParams& sc) {
  auto unit = [](const Rgb& c) {
    return std::all_of(c.begin(), c.end(), [](double v) {
      return std::isfinite(v) && v >= 0.0 && v <= 1.0;
    });
  };
  if (!unit(sc.object.color) || !unit(sc.background.primary) ||
      !unit(sc.background.secondary)) {
    throw InvalidArgument("colors must lie in [0,1]");
  }
  if (!(sc.object.width_m > 0.0) || !(sc.object.height_m > 0.0)) {
    throw InvalidArgument("object dimensions must be positive");
  }
  if (!(sc.camera.focal_px > 0.0) || sc.camera.width < 2 ||
      sc.camera.height < 2) {
    throw InvalidArgument("camera needs f > 0 and at least 2x2 pixels");
  }
  if (!(sc.blur_sigma >= 0.0) || !std::isfinite(sc.blur_sigma)) {
    throw InvalidArgument("blur_sigma must be >= 0");
  }
  if (!(sc.s_min > 0.0) || !(sc.s_max > sc.s_min)) {
    throw InvalidArgument("need 0 < s_min < s_max");
  }
  if (sc.background.stripe_width <= 0) {
    throw InvalidArgument("stripe_width must be positive");
  }
}

inline void require_in_range(double s, const SceneParams& sc) {
  if (!std::isfinite(s) || s < sc.s_min || s > sc.s_max) {
    throw OutOfRange("spacing " + std::to_string(s) + " m outside [" +
                     std::to_string(sc.s_min) + ", " +
                     std::to_string(sc.s_max) + "]");
  }
}

// Continuous bounds of the opaque object region before anti-aliasing.
struct PixelRect {
  double left = 0.0;
  double right = 0.0;
  double top = 0.0;
  double bottom = 0.0;

  double width() const { return right - left; }
  double height() const { return bottom - top; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (left + right); }
  double center_y() const { return 0.5 * (top + bottom); }
};

inline PixelRect object_footprint(double s, const SceneParams& sc) {
  require_in_range(s, sc);
  const double hw = 0.5 * sc.camera.focal_px * sc.object.width_m / s;
  const double hh = 0.5 * sc.camera.focal_px * sc.object.height_m / s;
  const double cx = sc.camera.center_x();
  const double cy = sc.camera.center_y();
  return {cx - hw, cx + hw, cy - hh, cy + hh};
}

inline double blur_margin(const SceneParams& sc) { return 4.0 * sc.blur_sigma; }

// Coverage along one axis for a pixel center at `x`, object spanning
// [center - half, center + half].
inline double edge_profile(double x, double center, double half,
                           double sigma) {
  const double d = std::max(std::abs(x - center) - half, 0.0);
  if (sigma <= 0.0) return d > 0.0 ? 0.0 : 1.0;
  if (d == 0.0) return 1.0;
  const double cut = 4.0 * sigma;
  if (d >= cut) return 0.0;
  const double floor_v = std::exp(-0.5 * (cut * cut) / (sigma * sigma));
  return (std::exp(-0.5 * d * d / (sigma * sigma)) - floor_v) / (1.0 - floor_v);
}

// Separable coverage map alpha(row, col) = rows[row] * cols[col]. The
// support is the closed index box [row_begin, row_end) x [col_begin, col_end).
struct AlphaMask {
  std::vector<double> cols;
  std::vector<double> rows;
  int col_begin = 0, col_end = 0;
  int row_begin = 0, row_end = 0;

  double operator()(int row, int col) const { return rows[row] * cols[col]; }
  bool empty() const { return col_begin >= col_end || row_begin >= row_end; }
  bool in_support(int row, int col) const {
    return row >= row_begin && row < row_end && col >= col_begin &&
           col < col_end;
  }
};

inline AlphaMask object_alpha(double s, const SceneParams& sc) {
  const PixelRect fp = object_footprint(s, sc);
  const double hw = 0.5 * fp.width();
  const double hh = 0.5 * fp.height();
  AlphaMask m;
  m.cols.resize(sc.camera.width);
  m.rows.resize(sc.camera.height);
  for (int c = 0; c < sc.camera.width; ++c) {
    m.cols[c] = edge_profile(c, fp.center_x(), hw, sc.blur_sigma);
  }
  for (int r = 0; r < sc.camera.height; ++r) {
    m.rows[r] = edge_profile(r, fp.center_y(), hh, sc.blur_sigma);
  }
  auto span = [](const std::vector<double>& v, int& b, int& e) {
    b = 0;
    e = 0;
    const int n = static_cast<int>(v.size());
    int i = 0;
    while (i < n && v[i] <= 0.0) ++i;
    if (i == n) return;
    b = i;
    int j = n;
    while (j > b && v[j - 1] <= 0.0) --j;
    e = j;
  };
  span(m.cols, m.col_begin, m.col_end);
  span(m.rows, m.row_begin, m.row_end);
  return m;
}

inline Rgb background_color(const Background& bg, int width, int height,
                            int row, int col) {
  (void)width;
  switch (bg.style) {
    case BackgroundStyle::kSolid:
      return bg.primary;
    case BackgroundStyle::kRoadGradient: {
      const double t = static_cast<double>(row) / (height - 1);
      Rgb c;
      for (int k = 0; k < 3; ++k) {
        c[k] = (1.0 - t) * bg.primary[k] + t * bg.secondary[k];
      }
      return c;
    }
    case BackgroundStyle::kVerticalStripes: {
      const int period = 2 * bg.stripe_width;
      const int phase = static_cast<int>(bg.seed % static_cast<std::uint32_t>(period));
      return ((col + phase) / bg.stripe_width) % 2 == 0 ? bg.primary
                                                        : bg.secondary;
    }
  }
  return bg.primary;
}

inline Image render_background(const SceneParams& sc) {
  validate(sc);
  const int w = sc.camera.width, h = sc.camera.height;
  Image img(w, h, 3);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Rgb b = background_color(sc.background, w, h, r, c);
      for (int k = 0; k < 3; ++k) img.at(r, c, k) = b[k];
    }
  }
  return img;
}

// Composites the object over a prebuilt background frame.
inline Image composite_object(double s, const SceneParams& sc,
                              const Image& background) {
  const AlphaMask a = object_alpha(s, sc);
  Image img = background;
  const Rgb& o = sc.object.color;
  for (int r = a.row_begin; r < a.row_end; ++r) {
    for (int c = a.col_begin; c < a.col_end; ++c) {
      const double al = a(r, c);
      if (al <= 0.0) continue;
      for (int k = 0; k < 3; ++k) {
        const double b = background.at(r, c, k);
        img.at(r, c, k) = al * o[k] + (1.0 - al) * b;
      }
    }
  }
  return img;
}

// Reuses one background frame across many spacings.
class Renderer {
 public:
  explicit Renderer(SceneParams scene)
      : scene_(std::move(scene)), background_(render_background(scene_)) {}

  Image render(double s) const { return composite_object(s, scene_, background_); }
  const Image& background() const { return background_; }
  const SceneParams& scene() const { return scene_; }

 private:
  SceneParams scene_;
  Image background_;
};

// y = I_Cam(s, Theta, Omega).
inline Image render(double s, const SceneParams& sc) {
  require_in_range(s, sc);
  return Renderer(sc).render(s);
}

// Canonical scene variants used by the verification suites.
inline SceneParams default_scene() { return SceneParams{}; }

inline std::vector<Background> background_variants() {
  Background solid;
  solid.style = BackgroundStyle::kSolid;
  solid.primary = {0.55, 0.62, 0.50};
  Background road;  // defaults
  Background stripes;
  stripes.style = BackgroundStyle::kVerticalStripes;
  stripes.primary = {0.42, 0.46, 0.44};
  stripes.secondary = {0.62, 0.63, 0.58};
  stripes.seed = 3;
  return {road, solid, stripes};
}

inline std::vector<LeadObject> object_polarities() {
  LeadObject dark;  // defaults
  LeadObject bright;
  bright.color = {0.95, 0.92, 0.85};
  return {dark, bright};
}

}  // namespace pixelreg
