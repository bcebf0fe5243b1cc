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

// Longitudinal car-following error dynamics and a fixed-step RK4 integrator.
//
// Error coordinates:
//   x1 = vbar - v1   (leader speed error)
//   x2 = sbar - s    (spacing error)
//   x3 = vbar - v2   (follower speed error)
//   u  = f2bar - f2  (follower force error)
//
//   dx1/dt = -(alpha1/m1) x1
//   dx2/dt = x1 - x3
//   dx3/dt = -(alpha2/m2) x3 + u/m2

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "pixelreg/error.hpp"

namespace pixelreg {

struct VehicleParams {
  double m1 = 200.0;      // leader mass [kg]
  double m2 = 200.0;      // follower mass [kg]
  double alpha1 = 40.0;   // leader drag [N s/m]
  double alpha2 = 40.0;   // follower drag [N s/m]

  bool operator==(const VehicleParams&) const = default;
};

inline void validate(const VehicleParams& p) {
  for (double v : {p.m1, p.m2, p.alpha1, p.alpha2}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InvalidArgument("vehicle parameters must be finite and positive");
    }
  }
}

struct ErrorState {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  bool operator==(const ErrorState&) const = default;
};

inline bool is_finite(const ErrorState& x) {
  return std::isfinite(x.x1) && std::isfinite(x.x2) && std::isfinite(x.x3);
}

// Physical quantities tracked next to the error state so the renderer can be
// driven by the actual spacing.
struct SimState {
  double s = 10.0;
  double v1 = 10.0;
  double v2 = 10.0;
  double vbar = 10.0;
  double sbar = 10.0;
  double f2bar = 0.0;
  double t = 0.0;

  ErrorState to_error() const { return {vbar - v1, sbar - s, vbar - v2}; }

  static SimState from_error(const ErrorState& x, double vbar, double sbar,
                             double f2bar, double t) {
    return {sbar - x.x2, vbar - x.x1, vbar - x.x3, vbar, sbar, f2bar, t};
  }
};

inline ErrorState error_deriv(const ErrorState& x, double u,
                              const VehicleParams& p) {
  if (!is_finite(x) || !std::isfinite(u)) {
    throw InvalidState("non-finite error state or control");
  }
  return {-p.alpha1 / p.m1 * x.x1, x.x1 - x.x3,
          -p.alpha2 / p.m2 * x.x3 + u / p.m2};
}

// Controllable (x2, x3) subsystem with the stable leader mode removed.
inline std::pair<double, double> decoupled_deriv(double x2, double x3,
                                                 double u,
                                                 const VehicleParams& p) {
  if (!std::isfinite(x2) || !std::isfinite(x3) || !std::isfinite(u)) {
    throw InvalidState("non-finite error state or control");
  }
  return {-x3, -p.alpha2 / p.m2 * x3 + u / p.m2};
}

template <std::size_t N>
using StateVector = std::array<double, N>;

// Classical RK4 step. `deriv` must already capture any held control input;
// it is evaluated four times with the same control (zero-order hold).
template <std::size_t N, typename Deriv>
StateVector<N> rk4_step(const StateVector<N>& x, Deriv&& deriv, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("rk4 step requires dt > 0");
  }
  auto axpy = [](const StateVector<N>& a, double h, const StateVector<N>& b) {
    StateVector<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + h * b[i];
    return r;
  };
  const StateVector<N> k1 = deriv(x);
  const StateVector<N> k2 = deriv(axpy(x, 0.5 * dt, k1));
  const StateVector<N> k3 = deriv(axpy(x, 0.5 * dt, k2));
  const StateVector<N> k4 = deriv(axpy(x, dt, k3));
  StateVector<N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

// One ZOH step of the full error dynamics.
inline ErrorState step_error_dynamics(const ErrorState& x, double u,
                                      const VehicleParams& p, double dt) {
  const StateVector<3> next = rk4_step<3>(
      StateVector<3>{x.x1, x.x2, x.x3},
      [&](const StateVector<3>& z) {
        const ErrorState d = error_deriv({z[0], z[1], z[2]}, u, p);
        return StateVector<3>{d.x1, d.x2, d.x3};
      },
      dt);
  return {next[0], next[1], next[2]};
}

inline std::pair<double, double> step_decoupled(double x2, double x3, double u,
                                                const VehicleParams& p,
                                                double dt) {
  const StateVector<2> next = rk4_step<2>(
      StateVector<2>{x2, x3},
      [&](const StateVector<2>& z) {
        auto [d2, d3] = decoupled_deriv(z[0], z[1], u, p);
        return StateVector<2>{d2, d3};
      },
      dt);
  return {next[0], next[1]};
}

}  // namespace pixelreg
