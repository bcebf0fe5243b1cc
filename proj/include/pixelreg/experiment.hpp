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

// Experiment configuration and its JSON form. Every key is optional (missing
// keys keep their defaults) and unknown keys are rejected at every level.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "pixelreg/control.hpp"
#include "pixelreg/dynamics.hpp"
#include "pixelreg/error.hpp"
#include "pixelreg/scene.hpp"

namespace pixelreg {

struct LyapunovSettings {
  double w1 = 1.0;
  double margin = 2.0;

  bool operator==(const LyapunovSettings&) const = default;
};

struct VerifySettings {
  // assumptions
  double assumptions_x2_max = 5.0;
  double assumptions_step = 0.25;
  double fit_x2_max = 0.5;
  bool strict_quadratic = false;
  // sof
  int sof_draws = 100;
  // synth
  double synth_s_min = 5.0;
  double synth_s_max = 50.0;
  double spacing_sweep_step = 0.13;
  double eps1_step = 1.0;
  double eps2_x2_max = 5.0;
  double eps2_step = 0.25;
  // lyapunov
  double positivity_extent = 3.0;
  double positivity_step = 0.25;
  int lyapunov_trajectories = 10;
  double lyapunov_duration = 20.0;
  int uub_trajectories = 100;
  double uub_radius = 5.0;
  double uub_duration = 60.0;
  double uub_gain = 1.0;

  bool operator==(const VerifySettings&) const = default;
};

struct ExperimentConfig {
  VehicleParams vehicle;
  SceneParams scene;
  ControllerConfig controller;
  double s_init = 10.0;
  double s_bar = 10.0;
  double v1_init = 10.0;
  double v2_init = 10.0;
  double v_bar = 10.0;
  double duration = 90.0;
  double dt = 0.05;
  std::string output_dir = "pixelreg_out";
  int frame_stride = 0;  // 0 disables frame dumps
  std::uint64_t seed = 0;
  bool log_lyapunov = false;
  LyapunovSettings lyapunov;
  VerifySettings verify;

  bool operator==(const ExperimentConfig&) const = default;

  int steps() const { return static_cast<int>(std::llround(duration / dt)); }
};

inline void validate(const ExperimentConfig& c) {
  try {
    validate(c.vehicle);
    validate(c.scene);
    validate(c.controller);
    require_in_range(c.s_init, c.scene);
    require_in_range(c.s_bar, c.scene);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(c.duration > 0.0 && std::isfinite(c.duration), "duration must be > 0");
  need(c.dt > 0.0 && std::isfinite(c.dt), "dt must be > 0");
  need(c.steps() >= 1, "duration must cover at least one step");
  need(std::isfinite(c.v1_init) && std::isfinite(c.v2_init) &&
           std::isfinite(c.v_bar),
       "speeds must be finite");
  need(c.frame_stride >= 0, "frame_stride must be >= 0");
  need(!c.output_dir.empty(), "output_dir must not be empty");
  need(c.lyapunov.w1 > 0.0, "lyapunov.w1 must be > 0");
  need(c.lyapunov.margin > 1.0, "lyapunov.margin must exceed 1");
  const VerifySettings& v = c.verify;
  need(v.assumptions_x2_max > 0.0 && v.assumptions_step > 0.0,
       "verify assumption grid must be positive");
  need(v.fit_x2_max > 0.0, "verify.fit_x2_max must be > 0");
  need(v.sof_draws >= 1, "verify.sof_draws must be >= 1");
  need(v.synth_s_min < v.synth_s_max && v.spacing_sweep_step > 0.0 &&
           v.eps1_step > 0.0,
       "verify synth sweep is empty");
  need(v.eps2_x2_max > 0.0 && v.eps2_step > 0.0, "verify eps2 grid is empty");
  need(v.positivity_extent > 0.0 && v.positivity_step > 0.0,
       "verify positivity grid is empty");
  need(v.lyapunov_trajectories >= 1 && v.lyapunov_duration > 0.0,
       "verify lyapunov trajectories invalid");
  need(v.uub_trajectories >= 1 && v.uub_radius > 0.0 && v.uub_duration > 0.0,
       "verify UUB settings invalid");
  need(std::isfinite(v.uub_gain) && v.uub_gain > 0.0,
       "verify.uub_gain must be > 0");
}

namespace detail {

using nlohmann::json;

// Reads keys out of one JSON object and reports any it did not consume.
class StrictReader {
 public:
  StrictReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        bool ok = false;
        if (it->is_number_unsigned()) {
          ok = it->template get<std::uint64_t>() <=
               static_cast<std::uint64_t>(std::numeric_limits<T>::max());
        } else if constexpr (std::is_signed_v<T>) {
          const auto v = it->template get<std::int64_t>();
          ok = it->is_number_integer() &&
               v >= static_cast<std::int64_t>(std::numeric_limits<T>::min()) &&
               v <= static_cast<std::int64_t>(std::numeric_limits<T>::max());
        }
        if (!ok) throw ConfigError("expected an integer in range");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(where() + "." + key + ": " + e.what());
    }
  }

  void get_rgb(const char* key, Rgb& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 3) {
      throw ConfigError(where() + "." + key + ": expected [r, g, b]");
    }
    for (int k = 0; k < 3; ++k) {
      if (!(*it)[k].is_number()) {
        throw ConfigError(where() + "." + key + ": expected numbers");
      }
      out[k] = (*it)[k].get<double>();
    }
  }

  template <typename Fn>
  void child(const char* key, Fn&& fn) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    StrictReader sub(*it, where() + "." + key);
    fn(sub);
    sub.finish();
  }

  // Enumerations and nullable values.
  std::optional<json> raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return *it;
  }

  std::string where() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown key '" + where() + "." + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto parse_enum(detail::StrictReader& r, const char* key, Parse&& parse)
    -> std::optional<decltype(parse(std::string{}))> {
  auto v = r.raw(key);
  if (!v) return std::nullopt;
  if (!v->is_string()) {
    throw ConfigError(r.where() + "." + key + ": expected a string");
  }
  try {
    return parse(v->get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(r.where() + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  const SceneParams& s = c.scene;
  const VerifySettings& v = c.verify;
  json j;
  j["vehicle"] = {{"m1", c.vehicle.m1},
                  {"m2", c.vehicle.m2},
                  {"alpha1", c.vehicle.alpha1},
                  {"alpha2", c.vehicle.alpha2}};
  j["scene"] = {
      {"object",
       {{"color", s.object.color},
        {"width_m", s.object.width_m},
        {"height_m", s.object.height_m}}},
      {"background",
       {{"style", to_string(s.background.style)},
        {"primary", s.background.primary},
        {"secondary", s.background.secondary},
        {"seed", s.background.seed},
        {"stripe_width", s.background.stripe_width}}},
      {"camera",
       {{"focal_px", s.camera.focal_px},
        {"width", s.camera.width},
        {"height", s.camera.height},
        {"offset_x", s.camera.offset_x},
        {"offset_y", s.camera.offset_y}}},
      {"blur_sigma", s.blur_sigma},
      {"s_min", s.s_min},
      {"s_max", s.s_max}};
  j["controller"] = {{"k", c.controller.k},
                     {"mode", to_string(c.controller.mode)},
                     {"s0", c.controller.s0},
                     {"clamp", c.controller.clamp ? json(*c.controller.clamp)
                                                  : json(nullptr)},
                     {"reference", to_string(c.controller.reference)}};
  j["s_init"] = c.s_init;
  j["s_bar"] = c.s_bar;
  j["v1_init"] = c.v1_init;
  j["v2_init"] = c.v2_init;
  j["v_bar"] = c.v_bar;
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  j["output_dir"] = c.output_dir;
  j["frame_stride"] = c.frame_stride;
  j["seed"] = c.seed;
  j["log_lyapunov"] = c.log_lyapunov;
  j["lyapunov"] = {{"w1", c.lyapunov.w1}, {"margin", c.lyapunov.margin}};
  j["verify"] = {{"assumptions_x2_max", v.assumptions_x2_max},
                 {"assumptions_step", v.assumptions_step},
                 {"fit_x2_max", v.fit_x2_max},
                 {"strict_quadratic", v.strict_quadratic},
                 {"sof_draws", v.sof_draws},
                 {"synth_s_min", v.synth_s_min},
                 {"synth_s_max", v.synth_s_max},
                 {"spacing_sweep_step", v.spacing_sweep_step},
                 {"eps1_step", v.eps1_step},
                 {"eps2_x2_max", v.eps2_x2_max},
                 {"eps2_step", v.eps2_step},
                 {"positivity_extent", v.positivity_extent},
                 {"positivity_step", v.positivity_step},
                 {"lyapunov_trajectories", v.lyapunov_trajectories},
                 {"lyapunov_duration", v.lyapunov_duration},
                 {"uub_trajectories", v.uub_trajectories},
                 {"uub_radius", v.uub_radius},
                 {"uub_duration", v.uub_duration},
                 {"uub_gain", v.uub_gain}};
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::StrictReader r(j, "");
  r.child("vehicle", [&](detail::StrictReader& v) {
    v.get("m1", c.vehicle.m1);
    v.get("m2", c.vehicle.m2);
    v.get("alpha1", c.vehicle.alpha1);
    v.get("alpha2", c.vehicle.alpha2);
  });
  r.child("scene", [&](detail::StrictReader& s) {
    SceneParams& sc = c.scene;
    s.child("object", [&](detail::StrictReader& o) {
      o.get_rgb("color", sc.object.color);
      o.get("width_m", sc.object.width_m);
      o.get("height_m", sc.object.height_m);
    });
    s.child("background", [&](detail::StrictReader& b) {
      if (auto st = detail::parse_enum(b, "style", background_style_from_string)) {
        sc.background.style = *st;
      }
      b.get_rgb("primary", sc.background.primary);
      b.get_rgb("secondary", sc.background.secondary);
      b.get("seed", sc.background.seed);
      b.get("stripe_width", sc.background.stripe_width);
    });
    s.child("camera", [&](detail::StrictReader& cam) {
      cam.get("focal_px", sc.camera.focal_px);
      cam.get("width", sc.camera.width);
      cam.get("height", sc.camera.height);
      cam.get("offset_x", sc.camera.offset_x);
      cam.get("offset_y", sc.camera.offset_y);
    });
    s.get("blur_sigma", sc.blur_sigma);
    s.get("s_min", sc.s_min);
    s.get("s_max", sc.s_max);
  });
  r.child("controller", [&](detail::StrictReader& k) {
    k.get("k", c.controller.k);
    if (auto m = detail::parse_enum(k, "mode", control_mode_from_string)) {
      c.controller.mode = *m;
    }
    k.get("s0", c.controller.s0);
    if (auto cl = k.raw("clamp")) {
      if (cl->is_null()) {
        c.controller.clamp.reset();
      } else if (cl->is_number()) {
        c.controller.clamp = cl->get<double>();
      } else {
        throw ConfigError("config.controller.clamp: expected a number or null");
      }
    }
    if (auto ref = detail::parse_enum(k, "reference", reference_source_from_string)) {
      c.controller.reference = *ref;
    }
  });
  r.get("s_init", c.s_init);
  r.get("s_bar", c.s_bar);
  r.get("v1_init", c.v1_init);
  r.get("v2_init", c.v2_init);
  r.get("v_bar", c.v_bar);
  r.get("duration", c.duration);
  r.get("dt", c.dt);
  r.get("output_dir", c.output_dir);
  r.get("frame_stride", c.frame_stride);
  r.get("seed", c.seed);
  r.get("log_lyapunov", c.log_lyapunov);
  r.child("lyapunov", [&](detail::StrictReader& l) {
    l.get("w1", c.lyapunov.w1);
    l.get("margin", c.lyapunov.margin);
  });
  r.child("verify", [&](detail::StrictReader& v) {
    VerifySettings& s = c.verify;
    v.get("assumptions_x2_max", s.assumptions_x2_max);
    v.get("assumptions_step", s.assumptions_step);
    v.get("fit_x2_max", s.fit_x2_max);
    v.get("strict_quadratic", s.strict_quadratic);
    v.get("sof_draws", s.sof_draws);
    v.get("synth_s_min", s.synth_s_min);
    v.get("synth_s_max", s.synth_s_max);
    v.get("spacing_sweep_step", s.spacing_sweep_step);
    v.get("eps1_step", s.eps1_step);
    v.get("eps2_x2_max", s.eps2_x2_max);
    v.get("eps2_step", s.eps2_step);
    v.get("positivity_extent", s.positivity_extent);
    v.get("positivity_step", s.positivity_step);
    v.get("lyapunov_trajectories", s.lyapunov_trajectories);
    v.get("lyapunov_duration", s.lyapunov_duration);
    v.get("uub_trajectories", s.uub_trajectories);
    v.get("uub_radius", s.uub_radius);
    v.get("uub_duration", s.uub_duration);
    v.get("uub_gain", s.uub_gain);
  });
  r.finish();
  validate(c);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string dump_config(const ExperimentConfig& c) {
  return to_json(c).dump(2) + "\n";
}

// PIXELREG_SEED, when set, replaces the configured seed.
inline void apply_seed_override(ExperimentConfig& c,
                                const char* env = std::getenv("PIXELREG_SEED")) {
  if (env == nullptr) return;
  std::string s(env);
  std::uint64_t v = 0;
  std::size_t used = 0;
  try {
    if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(s, &used, 10);
  } catch (const std::exception&) {
    throw ConfigError("PIXELREG_SEED must be a non-negative integer");
  }
  if (used != s.size()) {
    throw ConfigError("PIXELREG_SEED must be a non-negative integer");
  }
  c.seed = v;
}

}  // namespace pixelreg
