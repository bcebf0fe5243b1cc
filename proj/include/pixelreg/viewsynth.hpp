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

// Reference view synthesis: estimate the current spacing from the camera
// frame, build an appearance flow that rescales the object to the desired
// spacing while leaving the background in place, then resample the frame
// through a bilinear sampler.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pixelreg/error.hpp"
#include "pixelreg/image.hpp"
#include "pixelreg/scene.hpp"

namespace pixelreg {

inline constexpr double kDefaultS0Min = 200.0;

// Absolute source coordinates normalized to [-1, 1]; -1 and +1 are the
// centers of the first and last pixel along each axis.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height) : width_(width), height_(height) {
    if (width < 2 || height < 2) {
      throw InvalidArgument("flow field needs at least 2x2 pixels");
    }
    data_.assign(static_cast<std::size_t>(width) * height * 2, 0.0);
  }

  static FlowField identity(int width, int height) {
    FlowField f(width, height);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) f.set_pixel(r, c, c, r);
    }
    return f;
  }

  int width() const { return width_; }
  int height() const { return height_; }

  double gx(int row, int col) const { return data_[idx(row, col)]; }
  double gy(int row, int col) const { return data_[idx(row, col) + 1]; }
  void set(int row, int col, double gx, double gy) {
    data_[idx(row, col)] = gx;
    data_[idx(row, col) + 1] = gy;
  }
  // Stores a source location given in pixel coordinates, clamped to the
  // image.
  void set_pixel(int row, int col, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    set(row, col, 2.0 * x / (width_ - 1) - 1.0, 2.0 * y / (height_ - 1) - 1.0);
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const FlowField&) const = default;

 private:
  std::size_t idx(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * 2;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline double to_pixel(double g, int n) {
  double x = (g + 1.0) * 0.5 * (n - 1);
  const double near = std::round(x);
  if (std::abs(x - near) < 1e-9) x = near;
  return std::clamp(x, 0.0, static_cast<double>(n - 1));
}

}  // namespace detail

inline Image bilinear_sample(const Image& src, const FlowField& flow) {
  if (src.width() != flow.width() || src.height() != flow.height()) {
    throw DimensionMismatch("flow and image dimensions differ");
  }
  const int w = src.width(), h = src.height(), ch = src.channels();
  Image out(w, h, ch);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double x = detail::to_pixel(flow.gx(r, c), w);
      const double y = detail::to_pixel(flow.gy(r, c), h);
      const int x0 = static_cast<int>(std::floor(x));
      const int y0 = static_cast<int>(std::floor(y));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = x - x0, fy = y - y0;
      for (int k = 0; k < ch; ++k) {
        const double top =
            (1.0 - fx) * src.at(y0, x0, k) + fx * src.at(y0, x1, k);
        const double bot =
            (1.0 - fx) * src.at(y1, x0, k) + fx * src.at(y1, x1, k);
        out.at(r, c, k) = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

// Direction along which revealed background is copied into a region.
enum class FillAxis { kRow, kColumn };

inline std::string to_string(FillAxis a) {
  return a == FillAxis::kRow ? "row" : "column";
}

// Axis-aligned pixel box [row_begin, row_end) x [col_begin, col_end).
struct PixelBox {
  int row_begin = 0, row_end = 0;
  int col_begin = 0, col_end = 0;

  bool contains(int r, int c) const {
    return r >= row_begin && r < row_end && c >= col_begin && c < col_end;
  }
  static PixelBox of(const AlphaMask& m) {
    return {m.row_begin, m.row_end, m.col_begin, m.col_end};
  }
};

// How pixels inside `box` borrow background from outside it: along the row
// (kRow, positions are columns), along the column (kColumn, positions are
// rows), or not at all when the box covers the whole frame. Positions below
// `split` copy from `before`, the rest from `after`.
struct FillPlan {
  enum Kind { kRow, kColumn, kIdentity };
  Kind kind = kIdentity;
  int before = -1;
  int after = -1;
  int split = 0;
};

// The nearest pixel outside `box` along the requested axis, falling back to
// the other axis when the box spans the whole image in that direction.
// Equidistant pixels resolve toward `before`.
inline FillPlan make_fill_plan(const PixelBox& box, FillAxis axis, int width,
                               int height) {
  const bool row_ok = box.col_begin > 0 || box.col_end < width;
  const bool col_ok = box.row_begin > 0 || box.row_end < height;
  FillPlan p;
  int lo = 0, hi = 0, n = 0;
  if ((axis == FillAxis::kRow && row_ok) || (row_ok && !col_ok)) {
    p.kind = FillPlan::kRow;
    lo = box.col_begin, hi = box.col_end, n = width;
  } else if (col_ok) {
    p.kind = FillPlan::kColumn;
    lo = box.row_begin, hi = box.row_end, n = height;
  } else {
    return p;
  }
  p.before = lo - 1;
  p.after = hi;
  if (p.before < 0) {
    p.split = lo;
  } else if (p.after >= n) {
    p.split = hi;
  } else {
    p.split = std::clamp((p.before + p.after) / 2 + 1, lo, hi);
  }
  return p;
}

// Returns {row, col} of the pixel copied into (row, col).
inline std::array<int, 2> fill_source(const FillPlan& p, int row, int col) {
  switch (p.kind) {
    case FillPlan::kRow:
      return {row, col < p.split ? p.before : p.after};
    case FillPlan::kColumn:
      return {row < p.split ? p.before : p.after, col};
    case FillPlan::kIdentity:
      break;
  }
  return {row, col};
}

struct EstimatorOptions {
  double step = 0.1;
  // Scores above this mean the frame does not contain the object. A frame
  // with no object scores exactly 1.
  double detection_threshold = 0.5;
};

struct SpacingEstimate {
  double s_hat = 0.0;
  double score = 0.0;
  FillAxis axis = FillAxis::kRow;
};

// Exhaustive template search over a fixed spacing grid. For each candidate
// the frame is explained as the candidate's coverage map compositing the
// object over a background copied in from outside the candidate's support
// (along rows or along columns) or over the scene's assumed background; the
// best of the three counts. The score is the residual energy divided by the
// energy the object would contribute, so a perfect explanation scores 0 and
// an empty frame scores 1.
class SpacingEstimator {
 public:
  explicit SpacingEstimator(SceneParams scene, EstimatorOptions opt = {})
      : scene_(std::move(scene)), opt_(opt) {
    validate(scene_);
    if (!(opt_.step > 0.0)) throw InvalidArgument("estimator step must be > 0");
    background_ = render_background(scene_);
    const int n = static_cast<int>(
        std::floor((scene_.s_max - scene_.s_min) / opt_.step + 1e-9));
    for (int k = 0; k <= n; ++k) {
      Candidate cand;
      // Snap to a 1e-9 m lattice so grid points print and compare cleanly.
      cand.s = std::round((scene_.s_min + k * opt_.step) * 1e9) / 1e9;
      cand.mask = object_alpha(cand.s, scene_);
      cand.sx.assign(1, 0.0);
      cand.sy.assign(1, 0.0);
      for (double a : cand.mask.cols) cand.sx.push_back(cand.sx.back() + a * a);
      for (double a : cand.mask.rows) cand.sy.push_back(cand.sy.back() + a * a);
      const int rb = cand.mask.row_begin, re = cand.mask.row_end;
      const int mid = (rb + re) / 2;
      for (int d = 0; mid + d < re || mid - d - 1 >= rb; ++d) {
        if (mid + d < re) cand.row_order.push_back(mid + d);
        if (mid - d - 1 >= rb) cand.row_order.push_back(mid - d - 1);
      }
      const AlphaMask& m = cand.mask;
      for (int r = m.row_begin; r < m.row_end; ++r) {
        for (int c = m.col_begin; c < m.col_end; ++c) {
          const double a = m(r, c);
          for (int ch = 0; ch < 3; ++ch) {
            const double d = scene_.object.color[ch] - background_.at(r, c, ch);
            cand.assumed_energy += a * a * d * d;
          }
        }
      }
      cands_.push_back(std::move(cand));
    }
  }

  const SceneParams& scene() const { return scene_; }
  std::size_t candidate_count() const { return cands_.size(); }
  double candidate(std::size_t k) const { return cands_[k].s; }

  // The hint only changes evaluation order, never the result.
  SpacingEstimate estimate(const Image& y,
                           std::optional<double> hint = std::nullopt) const {
    if (y.width() != scene_.camera.width ||
        y.height() != scene_.camera.height || y.channels() != 3) {
      throw DimensionMismatch("frame does not match camera dimensions");
    }
    const int n = static_cast<int>(cands_.size());
    double best = std::numeric_limits<double>::infinity();
    int best_k = -1;
    FillAxis best_axis = FillAxis::kRow;
    auto visit = [&](int k) {
      double sc = std::numeric_limits<double>::infinity();
      FillAxis ax = FillAxis::kRow;
      for (FillAxis a : {FillAxis::kRow, FillAxis::kColumn}) {
        const double v = score(y, cands_[k], a, false, best);
        if (v < sc) sc = v, ax = a;
      }
      sc = std::min(sc, score(y, cands_[k], ax, true, best));
      if (sc < best || (sc == best && best_k >= 0 && k < best_k)) {
        best = sc;
        best_k = k;
        best_axis = ax;
      }
    };
    std::vector<char> done(n, 0);
    int center = 0;
    if (hint && std::isfinite(*hint)) {
      center = static_cast<int>(std::lround((*hint - scene_.s_min) / opt_.step));
      center = std::clamp(center, 0, n - 1);
    } else {
      for (int k = 0; k < n; k += 10) {
        visit(k);
        done[k] = 1;
      }
      center = std::max(best_k, 0);
    }
    for (int d = 0; d < n; ++d) {
      for (int k : {center - d, center + d}) {
        if (k < 0 || k >= n || done[k]) continue;
        visit(k);
        done[k] = 1;
      }
    }
    if (best_k < 0 || !(best <= opt_.detection_threshold)) {
      throw ObjectNotFound("no spacing candidate explains the frame (best score " +
                           std::to_string(best) + ")");
    }
    return {cands_[best_k].s, best, best_axis};
  }

 private:
  struct Candidate {
    double s = 0.0;
    AlphaMask mask;
    // Prefix sums of the squared column and row coverage profiles.
    std::vector<double> sx, sy;
    std::vector<int> row_order;
    double assumed_energy = 0.0;
  };

  // With `assumed` set the fill is the scene's own background instead of
  // pixels copied from the frame.
  double score(const Image& y, const Candidate& cand, FillAxis axis,
               bool assumed, double best) const {
    const AlphaMask& m = cand.mask;
    if (m.empty()) return std::numeric_limits<double>::infinity();
    const PixelBox box = PixelBox::of(m);
    FillPlan plan;
    if (!assumed) plan = make_fill_plan(box, axis, y.width(), y.height());
    const Rgb& o = scene_.object.color;
    const double* px = y.vec().data();
    // Also the fill for a candidate covering the whole frame, which leaves
    // nothing to copy from.
    const double* bg = background_.vec().data();
    auto contrast = [&](const double* b) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += (o[k] - b[k]) * (o[k] - b[k]);
      return acc;
    };
    auto xsum = [&](int lo, int hi) { return cand.sx[hi] - cand.sx[lo]; };
    auto ysum = [&](int lo, int hi) { return cand.sy[hi] - cand.sy[lo]; };
    const int r0 = box.row_begin, r1 = box.row_end;
    const int c0 = box.col_begin, c1 = box.col_end;

    // Object energy sum(alpha * (O - fill))^2, exploiting separability.
    double energy = 0.0;
    if (plan.kind == FillPlan::kRow) {
      for (int r = r0; r < r1; ++r) {
        double row = 0.0;
        if (plan.split > c0) {
          row += xsum(c0, plan.split) * contrast(px + y.index(r, plan.before));
        }
        if (plan.split < c1) {
          row += xsum(plan.split, c1) * contrast(px + y.index(r, plan.after));
        }
        energy += m.rows[r] * m.rows[r] * row;
      }
    } else if (plan.kind == FillPlan::kColumn) {
      for (int c = c0; c < c1; ++c) {
        double col = 0.0;
        if (plan.split > r0) {
          col += ysum(r0, plan.split) * contrast(px + y.index(plan.before, c));
        }
        if (plan.split < r1) {
          col += ysum(plan.split, r1) * contrast(px + y.index(plan.after, c));
        }
        energy += m.cols[c] * m.cols[c] * col;
      }
    } else {
      energy = cand.assumed_energy;
    }
    if (!(energy > 0.0)) return std::numeric_limits<double>::infinity();

    const double abort_at = best * energy;
    double ssd = 0.0;
    for (int r : cand.row_order) {
      const double ay = m.rows[r];
      const double* yrow = px + y.index(r, 0);
      const double* left = nullptr;
      const double* right = nullptr;
      const double* fill_row = bg + y.index(r, 0);
      int split = c1;
      if (plan.kind == FillPlan::kRow) {
        split = plan.split;
        if (split > c0) left = px + y.index(r, plan.before);
        if (split < c1) right = px + y.index(r, plan.after);
      } else if (plan.kind == FillPlan::kColumn) {
        fill_row = px + y.index(r < plan.split ? plan.before : plan.after, 0);
      }
      for (int c = c0; c < c1; ++c) {
        const double a = ay * m.cols[c];
        const double* v = yrow + 3 * c;
        const double* b = plan.kind == FillPlan::kRow
                              ? (c < split ? left : right)
                              : fill_row + 3 * c;
        for (int k = 0; k < 3; ++k) {
          const double d = v[k] - (a * o[k] + (1.0 - a) * b[k]);
          ssd += d * d;
        }
      }
      if (ssd > abort_at) return std::numeric_limits<double>::infinity();
    }
    return ssd / energy;
  }

  SceneParams scene_;
  EstimatorOptions opt_;
  Image background_;
  std::vector<Candidate> cands_;
};

inline double estimate_spacing(const Image& y, const SceneParams& scene) {
  return SpacingEstimator(scene).estimate(y).s_hat;
}

// Source offset from the object center along one axis. Inside the target
// footprint offsets scale by hw_src / hw_dst (= s_bar / s_hat); in the blur
// margin the distance to the footprint edge is kept, so edge coverage is
// reproduced instead of being stretched.
inline double flow_offset(double offset, double hw_dst, double hw_src) {
  const double d = std::abs(offset);
  if (d <= hw_dst) return offset * (hw_src / hw_dst);
  return std::copysign(hw_src + (d - hw_dst), offset);
}

// Scales the object about its center from s_hat to s_bar. Pixels uncovered
// by a shrinking object copy the nearest background pixel along `axis`.
inline FlowField analytic_flow(double s_hat, double s_bar,
                               const SceneParams& scene,
                               FillAxis axis = FillAxis::kRow) {
  require_in_range(s_hat, scene);
  require_in_range(s_bar, scene);
  const int w = scene.camera.width, h = scene.camera.height;
  FlowField flow = FlowField::identity(w, h);
  if (s_hat == s_bar) return flow;
  const PixelBox src_box = PixelBox::of(object_alpha(s_hat, scene));
  const PixelBox dst_box = PixelBox::of(object_alpha(s_bar, scene));
  const FillPlan plan = make_fill_plan(src_box, axis, w, h);
  const PixelRect src_fp = object_footprint(s_hat, scene);
  const PixelRect dst_fp = object_footprint(s_bar, scene);
  const double cx = scene.camera.center_x(), cy = scene.camera.center_y();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (dst_box.contains(r, c)) {
        flow.set_pixel(
            r, c,
            cx + flow_offset(c - cx, 0.5 * dst_fp.width(), 0.5 * src_fp.width()),
            cy + flow_offset(r - cy, 0.5 * dst_fp.height(),
                             0.5 * src_fp.height()));
      } else if (src_box.contains(r, c)) {
        const auto s = fill_source(plan, r, c);
        flow.set_pixel(r, c, s[1], s[0]);
      }
    }
  }
  return flow;
}

// Flow that deletes the object at s_hat entirely.
inline FlowField removal_flow(double s_hat, const SceneParams& scene,
                              FillAxis axis = FillAxis::kRow) {
  require_in_range(s_hat, scene);
  const int w = scene.camera.width, h = scene.camera.height;
  FlowField flow = FlowField::identity(w, h);
  const PixelBox box = PixelBox::of(object_alpha(s_hat, scene));
  const FillPlan plan = make_fill_plan(box, axis, w, h);
  for (int r = box.row_begin; r < box.row_end; ++r) {
    for (int c = box.col_begin; c < box.col_end; ++c) {
      const auto s = fill_source(plan, r, c);
      flow.set_pixel(r, c, s[1], s[0]);
    }
  }
  return flow;
}

struct SynthesisReport {
  double s_hat = 0.0;
  FillAxis axis = FillAxis::kRow;
  FlowField flow;
  Image output;
  // ||vec(ybar - ybar_hat)||_2, NaN unless a ground-truth reference was given.
  double eps1_sample = std::numeric_limits<double>::quiet_NaN();
};

// Holds the estimator's precomputed candidate grid so repeated synthesis in
// a control loop does not rebuild it.
class ViewSynthesizer {
 public:
  explicit ViewSynthesizer(SceneParams scene, EstimatorOptions opt = {})
      : estimator_(std::move(scene), opt) {}

  const SceneParams& scene() const { return estimator_.scene(); }
  const SpacingEstimator& estimator() const { return estimator_; }

  SynthesisReport synthesize(double s_bar, const Image& y,
                             std::optional<double> hint = std::nullopt) const {
    require_in_range(s_bar, scene());
    const SpacingEstimate est = estimator_.estimate(y, hint);
    return synthesize_from(s_bar, y, est);
  }

  SynthesisReport synthesize_from(double s_bar, const Image& y,
                                  const SpacingEstimate& est) const {
    SynthesisReport rep;
    rep.s_hat = est.s_hat;
    rep.axis = est.axis;
    rep.flow = analytic_flow(est.s_hat, s_bar, scene(), est.axis);
    rep.output = bilinear_sample(y, rep.flow);
    return rep;
  }

  // Background-only view obtained by pushing the object out to s0. Any s0 at
  // or beyond s0_min is treated as the object having vanished. A frame with
  // no detectable object is already background and is returned unchanged.
  Image background_view(const Image& y, double s0,
                        std::optional<double> hint = std::nullopt,
                        double s0_min = kDefaultS0Min) const {
    check_s0(s0, s0_min);
    SpacingEstimate est;
    try {
      est = estimator_.estimate(y, hint);
    } catch (const ObjectNotFound&) {
      return y;
    }
    return background_from(y, est);
  }

  Image background_from(const Image& y, const SpacingEstimate& est) const {
    return bilinear_sample(y, removal_flow(est.s_hat, scene(), est.axis));
  }

  static void check_s0(double s0, double s0_min = kDefaultS0Min) {
    if (!std::isfinite(s0) || s0 < s0_min) {
      throw InvalidArgument("s0 must be at least " + std::to_string(s0_min) +
                            " m for background generation");
    }
  }

 private:
  SpacingEstimator estimator_;
};

inline SynthesisReport synthesize(double s_bar, const Image& y,
                                  const SceneParams& scene) {
  return ViewSynthesizer(scene).synthesize(s_bar, y);
}

inline SynthesisReport synthesize(double s_bar, const Image& y,
                                  const SceneParams& scene,
                                  const Image& ground_truth) {
  SynthesisReport rep = synthesize(s_bar, y, scene);
  rep.eps1_sample = l2_distance(ground_truth, rep.output);
  return rep;
}

inline Image background_view(const Image& y, const SceneParams& scene,
                             double s0 = kDefaultS0Min) {
  return ViewSynthesizer(scene).background_view(y, s0);
}

namespace detail {

inline void put_u32_le(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::ifstream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

// Layout: "AFLW", u32 width, u32 height, then width*height*2 float32
// values (x then y per pixel, row-major), all little-endian.
inline void write_aflw(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write("AFLW", 4);
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.height()));
  for (double v : flow.data()) {
    detail::put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error("failed writing " + path);
}

inline FlowField read_aflw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "AFLW", 4) != 0) {
    throw Error(path + ": not an AFLW file");
  }
  const std::uint32_t w = detail::get_u32_le(in);
  const std::uint32_t h = detail::get_u32_le(in);
  FlowField flow(static_cast<int>(w), static_cast<int>(h));
  for (double& v : flow.data()) {
    v = std::bit_cast<float>(detail::get_u32_le(in));
  }
  if (!in) throw Error(path + ": truncated AFLW payload");
  return flow;
}

}  // namespace pixelreg
