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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pixelreg/control.hpp"
#include "pixelreg/dynamics.hpp"
#include "pixelreg/error.hpp"
#include "pixelreg/experiment.hpp"
#include "pixelreg/image.hpp"
#include "pixelreg/lyapunov.hpp"
#include "pixelreg/scene.hpp"

namespace pixelreg {

struct StepRecord {
  double t = 0.0;
  double s = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;
  double u = 0.0;
  double err_norm = 0.0;  // ||vec(ybar_hat - y)||_2
  double V = std::numeric_limits<double>::quiet_NaN();
  double Vdot = std::numeric_limits<double>::quiet_NaN();
};

struct SimulationResult {
  std::vector<StepRecord> rows;
  bool aborted = false;
  std::string abort_reason;
  std::optional<Image> diagnostic_frame;
  bool has_lyapunov = false;

  Trajectory trajectory() const {
    Trajectory tr;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      tr.t.push_back(rows[k].t);
      tr.x2.push_back(rows[k].x2);
      tr.x3.push_back(rows[k].x3);
      if (k + 1 < rows.size()) tr.u.push_back(rows[k].u);
    }
    return tr;
  }
};

// Receives (step index, camera frame) for every frame selected by the stride.
using FrameSink = std::function<void(int, const Image&)>;

// Frame k is dumped when k is a multiple of the stride, and the final frame
// always is.
inline bool dumps_frame(int k, int steps, int stride) {
  return stride > 0 && (k % stride == 0 || k == steps);
}

inline std::unique_ptr<LyapunovFunction> make_lyapunov(
    const ExperimentConfig& cfg, const ControllerConfig& ctrl) {
  const IdealController ideal(cfg.scene, cfg.s_bar, ctrl);
  return std::make_unique<LyapunovFunction>(
      lyapunov_weights(cfg.vehicle, cfg.lyapunov.w1, cfg.lyapunov.margin),
      cfg.vehicle, ideal, cfg.s_bar - cfg.scene.s_max,
      cfg.s_bar - cfg.scene.s_min);
}

// Camera -> synthesizer -> pixel controller -> vehicle, one frame per step.
// A lost object, a spacing outside the renderable range, or a non-finite
// state stops the run; the rows so far and the offending frame are kept.
inline SimulationResult run_closed_loop(const ExperimentConfig& cfg,
                                        const FrameSink& sink = {},
                                        const LyapunovFunction* lyap = nullptr) {
  validate(cfg);
  const int steps = cfg.steps();
  const VehicleParams& p = cfg.vehicle;
  const double f2bar = p.alpha2 * cfg.v_bar;
  Renderer camera(cfg.scene);
  PixelLoopController controller(cfg.scene, cfg.s_bar, cfg.controller);

  std::unique_ptr<LyapunovFunction> owned;
  if (cfg.log_lyapunov && lyap == nullptr) {
    owned = make_lyapunov(cfg, cfg.controller);
    lyap = owned.get();
  }

  SimulationResult res;
  res.has_lyapunov = lyap != nullptr;
  res.rows.reserve(static_cast<std::size_t>(steps) + 1);
  ErrorState x{cfg.v_bar - cfg.v1_init, cfg.s_bar - cfg.s_init,
               cfg.v_bar - cfg.v2_init};
  for (int k = 0; k <= steps; ++k) {
    const double t = k * cfg.dt;
    const SimState st = SimState::from_error(x, cfg.v_bar, cfg.s_bar, f2bar, t);
    if (!is_finite(x)) {
      res.aborted = true;
      res.abort_reason = "non-finite state at t = " + std::to_string(t);
      return res;
    }
    if (st.s < cfg.scene.s_min || st.s > cfg.scene.s_max) {
      res.aborted = true;
      res.abort_reason = "spacing " + std::to_string(st.s) +
                         " m left the renderable range at t = " +
                         std::to_string(t);
      return res;
    }
    const Image y = camera.render(st.s);
    if (sink && dumps_frame(k, steps, cfg.frame_stride)) sink(k, y);
    PixelLoopController::Output out;
    try {
      out = controller.step(y);
    } catch (const ObjectNotFound& e) {
      res.aborted = true;
      res.abort_reason = std::string(e.what()) + " at t = " + std::to_string(t);
      res.diagnostic_frame = y;
      return res;
    }
    StepRecord rec{t, st.s, st.v1, st.v2, x.x1, x.x2, x.x3, out.u,
                   out.reference_error};
    if (lyap != nullptr) {
      rec.V = lyap->V(x.x2, x.x3);
      rec.Vdot = lyap->Vdot(x.x2, x.x3, out.u);
    }
    res.rows.push_back(rec);
    if (k < steps) x = step_error_dynamics(x, out.u, p, cfg.dt);
  }
  return res;
}

// 17 significant digits, general notation.
inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::string telemetry_csv(const SimulationResult& res) {
  std::string out = "t,s,v1,v2,x1,x2,x3,u,err_norm";
  if (res.has_lyapunov) out += ",V,Vdot";
  out += '\n';
  for (const StepRecord& r : res.rows) {
    const double cols[] = {r.t, r.s, r.v1, r.v2, r.x1, r.x2, r.x3, r.u,
                           r.err_norm, r.V, r.Vdot};
    const int n = res.has_lyapunov ? 11 : 9;
    for (int i = 0; i < n; ++i) {
      if (i) out += ',';
      out += format_double(cols[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.ppm", k);
  return buf;
}

}  // namespace pixelreg
