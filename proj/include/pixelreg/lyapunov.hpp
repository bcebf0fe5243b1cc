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

// Lyapunov-like function for the decoupled (x2, x3) loop
//   V = w1 x2^2 + w2 x2 x3 + w3 x3^2 + w4 * integral_0^x2 u*(z) dz
// and an ultimate-boundedness certificate built from simulated trajectories.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pixelreg/control.hpp"
#include "pixelreg/dynamics.hpp"
#include "pixelreg/error.hpp"
#include "pixelreg/scene.hpp"

namespace pixelreg {

struct LyapunovWeights {
  double w1 = 1.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double w4 = 0.0;
  double margin = 2.0;
};

inline LyapunovWeights lyapunov_weights(const VehicleParams& p, double w1,
                                        double margin) {
  validate(p);
  if (!(w1 > 0.0) || !std::isfinite(w1)) {
    throw InvalidArgument("w1 must be positive");
  }
  if (!(margin > 1.0) || !std::isfinite(margin)) {
    throw InvalidArgument("margin must exceed 1");
  }
  const double tau = p.m2 / p.alpha2;
  LyapunovWeights w;
  w.w1 = w1;
  w.margin = margin;
  w.w2 = -2.0 * tau * w1;
  w.w3 = margin * tau * tau * w1;
  w.w4 = 2.0 * w.w3 / p.m2;
  return w;
}

class LyapunovFunction {
 public:
  // u* is tabulated at half-step spacing over [x2_lo, x2_hi] (clipped to the
  // renderable interval) and integrated with cumulative Simpson sums.
  LyapunovFunction(LyapunovWeights w, VehicleParams p,
                   const IdealController& ideal, double x2_lo, double x2_hi,
                   double step = 0.05)
      : w_(w), p_(p), ideal_(ideal), step_(step) {
    validate(p_);
    if (!(step > 0.0)) throw InvalidArgument("quadrature step must be > 0");
    const SceneParams& sc = ideal_.renderer().scene();
    lo_ = std::max(x2_lo, ideal_.s_bar() - sc.s_max);
    hi_ = std::min(x2_hi, ideal_.s_bar() - sc.s_min);
    if (!(lo_ <= 0.0 && hi_ >= 0.0)) {
      throw OutOfRange("Lyapunov range must contain x2 = 0");
    }
    j_lo_ = static_cast<int>(std::ceil(lo_ / step_ - 1e-9));
    j_hi_ = static_cast<int>(std::floor(hi_ / step_ + 1e-9));
    for (int m = 2 * j_lo_; m <= 2 * j_hi_; ++m) {
      half_.push_back(ideal_(m * 0.5 * step_));
    }
    cum_.assign(j_hi_ - j_lo_ + 1, 0.0);
    for (int j = 1; j <= j_hi_; ++j) {
      cum_[j - j_lo_] = cum_[j - 1 - j_lo_] +
                        step_ / 6.0 * (half_u(2 * j - 2) + 4.0 * half_u(2 * j - 1) +
                                       half_u(2 * j));
    }
    for (int j = -1; j >= j_lo_; --j) {
      cum_[j - j_lo_] = cum_[j + 1 - j_lo_] -
                        step_ / 6.0 * (half_u(2 * j) + 4.0 * half_u(2 * j + 1) +
                                       half_u(2 * j + 2));
    }
  }

  const LyapunovWeights& weights() const { return w_; }
  const VehicleParams& vehicle() const { return p_; }
  const IdealController& ideal() const { return ideal_; }
  double x2_min() const { return lo_; }
  double x2_max() const { return hi_; }

  double ustar(double x2) const {
    check(x2);
    const double m = x2 / (0.5 * step_);
    const double mr = std::round(m);
    if (m == mr) return half_u(static_cast<int>(mr));
    return ideal_(x2);
  }

  double integral(double x2) const {
    check(x2);
    const int j = static_cast<int>(std::trunc(x2 / step_));
    const double a = j * step_;
    double acc = cum_[j - j_lo_];
    if (x2 != a) {
      acc += (x2 - a) / 6.0 *
             (half_u(2 * j) + 4.0 * ideal_(0.5 * (a + x2)) + ideal_(x2));
    }
    return acc;
  }

  double V(double x2, double x3) const {
    return w_.w1 * x2 * x2 + w_.w2 * x2 * x3 + w_.w3 * x3 * x3 +
           w_.w4 * integral(x2);
  }

  double Vdot(double x2, double x3, double u) const {
    const auto [d2, d3] = decoupled_deriv(x2, x3, u, p_);
    return 2.0 * w_.w1 * x2 * d2 + w_.w2 * d2 * x3 + w_.w2 * x2 * d3 +
           2.0 * w_.w3 * x3 * d3 + w_.w4 * d2 * ustar(x2);
  }

  // Upper bound on Vdot given |u - u*| <= eps2.
  double Vdot_bound(double x2, double x3, double eps2) const {
    const double a2 = p_.alpha2, m2 = p_.m2;
    const double lead = 2.0 * a2 / m2 * w_.w3 - 2.0 * m2 / a2 * w_.w1;
    return -std::abs(x3) * (lead * std::abs(x3) - 2.0 * w_.w3 / m2 * eps2) -
           2.0 * w_.w1 / a2 * std::abs(x2) * (std::abs(ustar(x2)) - eps2);
  }

 private:
  double half_u(int m) const { return half_[m - 2 * j_lo_]; }
  void check(double x2) const {
    if (!(x2 >= lo_ && x2 <= hi_)) {
      throw OutOfRange("x2 = " + std::to_string(x2) +
                       " outside the Lyapunov quadrature range");
    }
  }

  LyapunovWeights w_;
  VehicleParams p_;
  IdealController ideal_;
  double step_;
  double lo_ = 0.0, hi_ = 0.0;
  int j_lo_ = 0, j_hi_ = 0;
  std::vector<double> half_;  // u*(m * step / 2)
  std::vector<double> cum_;   // integral from 0 to j * step
};

// Sampled closed-loop trajectory; u[k] is held over [t[k], t[k+1]).
struct Trajectory {
  std::vector<double> t;
  std::vector<double> x2;
  std::vector<double> x3;
  std::vector<double> u;
};

// max |u - u*(x2)| over every sample where a control was applied.
inline double trajectory_eps2(const std::vector<Trajectory>& trajs,
                              const LyapunovFunction& lf) {
  double eps2 = 0.0;
  for (const Trajectory& tr : trajs) {
    for (std::size_t k = 0; k < tr.u.size(); ++k) {
      eps2 = std::max(eps2, std::abs(tr.u[k] - lf.ideal()(tr.x2[k])));
    }
  }
  return eps2;
}

// Largest error between the finite-difference rate of V along the trajectory
// and Vdot evaluated at the mid-step state, relative to max |Vdot|.
inline double lyapunov_consistency(const Trajectory& tr,
                                   const LyapunovFunction& lf) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < tr.u.size(); ++k) {
    const double dt = tr.t[k + 1] - tr.t[k];
    const double fd =
        (lf.V(tr.x2[k + 1], tr.x3[k + 1]) - lf.V(tr.x2[k], tr.x3[k])) / dt;
    const auto [m2, m3] =
        step_decoupled(tr.x2[k], tr.x3[k], tr.u[k], lf.vehicle(), 0.5 * dt);
    const double vd = lf.Vdot(m2, m3, tr.u[k]);
    worst = std::max(worst, std::abs(fd - vd));
    scale = std::max(scale, std::abs(vd));
  }
  return scale > 0.0 ? worst / scale : worst;
}

struct UubOptions {
  double state_scale = 5.0;  // radius grid step is 0.05 * state_scale
  int angles = 32;
  double cap_factor = 2.0;   // give up beyond cap_factor * state_scale
};

struct UubCertificate {
  bool certified = false;
  double r = 0.0;
  double epsilon = 0.0;
  double T = 0.0;
  double delta_max = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double level = 0.0;       // V level of the entry set
  double r_bound = 0.0;     // radius from the eps2 bound on Vdot (inf if none)
  double gain = 0.0;
  std::size_t trajectories = 0;
  std::size_t escaped = 0;  // trajectories that never entered the level set
  std::string detail;
};

inline UubCertificate uub_certify(const std::vector<Trajectory>& trajs,
                                  const LyapunovFunction& lf, double eps1,
                                  double eps2, UubOptions opt = {}) {
  if (!(opt.state_scale > 0.0) || opt.angles < 4) {
    throw InvalidArgument("invalid UUB grid options");
  }
  UubCertificate cert;
  cert.eps1 = eps1;
  cert.eps2 = eps2;
  cert.gain = lf.ideal().config().k;
  cert.trajectories = trajs.size();
  const double step = 0.05 * opt.state_scale;
  const double cap = opt.cap_factor * opt.state_scale;
  auto norm = [](double a, double b) { return std::hypot(a, b); };

  double r_raw = 0.0;
  for (const Trajectory& tr : trajs) {
    if (tr.x2.empty()) continue;
    cert.delta_max = std::max(cert.delta_max, norm(tr.x2[0], tr.x3[0]));
    for (std::size_t k = 0; k < tr.u.size(); ++k) {
      if (lf.Vdot(tr.x2[k], tr.x3[k], tr.u[k]) > 0.0) {
        r_raw = std::max(r_raw, norm(tr.x2[k], tr.x3[k]));
      }
    }
  }
  cert.r = std::ceil(r_raw / step - 1e-12) * step;

  // Radius from the eps2 bound on a polar grid.
  cert.r_bound = 0.0;
  for (int i = 1; i * step <= cap + 1e-12; ++i) {
    const double rho = i * step;
    for (int a = 0; a < opt.angles; ++a) {
      const double th = 2.0 * std::numbers::pi * a / opt.angles;
      const double x2 = rho * std::cos(th), x3 = rho * std::sin(th);
      if (x2 < lf.x2_min() || x2 > lf.x2_max()) continue;
      if (lf.Vdot_bound(x2, x3, eps2) > 0.0) cert.r_bound = rho;
    }
  }
  if (cert.r_bound >= cap) cert.r_bound = std::numeric_limits<double>::infinity();

  if (cert.r > cap) {
    cert.detail = "Vdot > 0 at state norm " + std::to_string(r_raw) +
                  " beyond the search cap";
    return cert;
  }
  const double rho = std::max(cert.r, step);
  cert.level = 0.0;
  for (int a = 0; a < opt.angles; ++a) {
    const double th = 2.0 * std::numbers::pi * a / opt.angles;
    const double x2 = std::clamp(rho * std::cos(th), lf.x2_min(), lf.x2_max());
    cert.level = std::max(cert.level, lf.V(x2, rho * std::sin(th)));
  }

  for (const Trajectory& tr : trajs) {
    std::size_t entry = tr.x2.size();
    for (std::size_t k = 0; k < tr.x2.size(); ++k) {
      if (lf.V(tr.x2[k], tr.x3[k]) <= cert.level) {
        entry = k;
        break;
      }
    }
    if (entry == tr.x2.size()) {
      ++cert.escaped;
      continue;
    }
    cert.T = std::max(cert.T, tr.t[entry] - tr.t.front());
    for (std::size_t k = entry; k < tr.x2.size(); ++k) {
      cert.epsilon = std::max(cert.epsilon, norm(tr.x2[k], tr.x3[k]));
    }
  }
  if (cert.escaped > 0) {
    cert.detail = std::to_string(cert.escaped) +
                  " trajectories never entered the level set";
    return cert;
  }
  // Definition check: after T every sample lies inside the epsilon ball.
  for (const Trajectory& tr : trajs) {
    for (std::size_t k = 0; k < tr.x2.size(); ++k) {
      if (tr.t[k] - tr.t.front() >= cert.T &&
          norm(tr.x2[k], tr.x3[k]) > cert.epsilon) {
        cert.detail = "trajectory leaves the epsilon ball after T";
        return cert;
      }
    }
  }
  cert.certified = true;
  return cert;
}

}  // namespace pixelreg
