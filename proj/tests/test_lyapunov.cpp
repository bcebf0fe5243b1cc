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

#include "pixelreg/analysis.hpp"
#include "pixelreg/lyapunov.hpp"

namespace pixelreg {
namespace {

ControllerConfig gain(double k, ReferenceSource ref = ReferenceSource::kSynthesizer) {
  ControllerConfig cfg;
  cfg.k = k;
  cfg.mode = ControlMode::kGeneralized;
  cfg.reference = ref;
  return cfg;
}

LyapunovFunction make(const SceneParams& sc, const ControllerConfig& cfg,
                      double margin = 2.0) {
  const VehicleParams p;
  return LyapunovFunction(lyapunov_weights(p, 1.0, margin), p,
                          IdealController(sc, 10.0, cfg), -5.0, 5.0);
}

// Decoupled loop driven by u*(x2) with zero-order hold.
Trajectory oracle_run(const LyapunovFunction& lf, double x2, double x3,
                      double dt, double duration) {
  Trajectory tr;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k <= n; ++k) {
    tr.t.push_back(k * dt);
    tr.x2.push_back(x2);
    tr.x3.push_back(x3);
    if (k == n) break;
    const double u = lf.ideal()(x2);
    tr.u.push_back(u);
    std::tie(x2, x3) = step_decoupled(x2, x3, u, lf.vehicle(), dt);
  }
  return tr;
}

TEST(LyapunovWeights, WorkedExample) {
  VehicleParams p;
  p.m2 = 1500;
  p.alpha2 = 75;
  const LyapunovWeights w = lyapunov_weights(p, 1.0, 1.25);
  EXPECT_DOUBLE_EQ(w.w2, -40.0);
  EXPECT_DOUBLE_EQ(w.w3, 500.0);
  EXPECT_DOUBLE_EQ(w.w4, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(4.0 * w.w1 * w.w3, 2000.0);
  EXPECT_DOUBLE_EQ(w.w2 * w.w2, 1600.0);
}

TEST(LyapunovWeights, MarginApproachingOneFlattensLeadingTerm) {
  VehicleParams p;
  p.m2 = 1500;
  p.alpha2 = 75;
  double prev = -INFINITY;
  for (double margin : {2.0, 1.5, 1.1, 1.01, 1.0001}) {
    const LyapunovWeights w = lyapunov_weights(p, 1.0, margin);
    const double lead = 2.0 * p.m2 / p.alpha2 * w.w1 - 2.0 * p.alpha2 / p.m2 * w.w3;
    EXPECT_LT(lead, 0.0);
    EXPECT_GT(lead, prev);
    prev = lead;
  }
  EXPECT_GT(prev, -0.01);
}

TEST(LyapunovWeights, Validation) {
  EXPECT_THROW(lyapunov_weights(VehicleParams{}, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(lyapunov_weights(VehicleParams{}, 0.0, 2.0), InvalidArgument);
  EXPECT_THROW(lyapunov_weights(VehicleParams{0, 1, 1, 1}, 1.0, 2.0),
               InvalidArgument);
}

TEST(LyapunovV, ZeroAtOriginPositiveElsewhere) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  EXPECT_EQ(lf.V(0.0, 0.0), 0.0);
  for (double x2 : symmetric_grid(3.0, 0.25)) {
    for (double x3 : symmetric_grid(3.0, 0.25)) {
      if (x2 == 0.0 && x3 == 0.0) continue;
      ASSERT_GT(lf.V(x2, x3), 0.0) << x2 << "," << x3;
    }
  }
}

TEST(LyapunovV, IntegralMatchesFineQuadrature) {
  const LyapunovFunction lf = make(default_scene(), gain(0.02));
  for (double x2 : {-2.3, -0.05, 0.37, 1.0, 4.9}) {
    // Trapezoid reference at 1 mm.
    const int n = static_cast<int>(std::ceil(std::abs(x2) / 0.001));
    const double h = x2 / n;
    double ref = 0.5 * (lf.ideal()(0.0) + lf.ideal()(x2));
    for (int i = 1; i < n; ++i) ref += lf.ideal()(i * h);
    ref *= h;
    EXPECT_NEAR(lf.integral(x2), ref, 1e-4 * std::abs(ref) + 1e-9) << x2;
    EXPECT_GE(lf.integral(x2), 0.0);
  }
}

TEST(LyapunovV, BlankSceneIsQuadratic) {
  SceneParams sc = default_scene();
  sc.background.style = BackgroundStyle::kSolid;
  sc.background.primary = sc.object.color;
  ControllerConfig cfg = gain(1.0, ReferenceSource::kOracle);
  const LyapunovFunction lf = make(sc, cfg);
  const LyapunovWeights& w = lf.weights();
  for (double x2 : {-4.0, -1.0, 0.5, 3.0}) {
    for (double x3 : {-2.0, 0.0, 1.5}) {
      EXPECT_NEAR(lf.integral(x2), 0.0, 1e-12);
      EXPECT_NEAR(lf.V(x2, x3),
                  w.w1 * x2 * x2 + w.w2 * x2 * x3 + w.w3 * x3 * x3, 1e-9);
    }
  }
}

TEST(LyapunovVdot, ZeroAtOrigin) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  EXPECT_EQ(lf.Vdot(0.0, 0.0, 0.0), 0.0);
}

TEST(LyapunovVdot, NonPositiveUnderIdealControl) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  for (double x2 : symmetric_grid(5.0, 0.25)) {
    for (double x3 : symmetric_grid(5.0, 0.25)) {
      const double u = lf.ustar(x2);
      const double vd = lf.Vdot(x2, x3, u);
      ASSERT_LE(vd, 1e-9 * (1.0 + std::abs(lf.V(x2, x3)))) << x2 << "," << x3;
      // With eps2 = 0 the bound is attained.
      ASSERT_NEAR(lf.Vdot_bound(x2, x3, 0.0), vd, 1e-9 * (1.0 + std::abs(vd)));
    }
  }
}

TEST(LyapunovVdot, BoundDominatesPerturbedControl) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  const double eps2 = 3.0;
  for (double x2 : symmetric_grid(4.0, 0.5)) {
    for (double x3 : symmetric_grid(4.0, 0.5)) {
      for (double d : {-eps2, 0.0, eps2}) {
        const double u = lf.ustar(x2) + d;
        ASSERT_LE(lf.Vdot(x2, x3, u), lf.Vdot_bound(x2, x3, eps2) + 1e-9);
      }
    }
  }
}

TEST(LyapunovVdot, FiniteDifferenceConsistency) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  const Trajectory a = oracle_run(lf, 3.0, -1.0, 0.05, 20.0);
  const Trajectory b = oracle_run(lf, 3.0, -1.0, 0.025, 20.0);
  const double ea = lyapunov_consistency(a, lf);
  const double eb = lyapunov_consistency(b, lf);
  EXPECT_LE(ea, 10.0 * 0.05 * 0.05);
  EXPECT_LE(eb, 10.0 * 0.025 * 0.025);
  // Second order in dt.
  EXPECT_GT(ea / eb, 3.0);
  EXPECT_LT(ea / eb, 5.0);
}

TEST(LyapunovFunction, RangeChecks) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  EXPECT_DOUBLE_EQ(lf.x2_max(), 5.0);
  EXPECT_THROW(lf.V(5.5, 0.0), OutOfRange);
  EXPECT_THROW(lf.Vdot(-6.0, 0.0, 0.0), OutOfRange);
  const VehicleParams p;
  EXPECT_THROW(LyapunovFunction(lyapunov_weights(p, 1.0, 2.0), p,
                                IdealController(default_scene(), 10.0, gain(1.0)),
                                1.0, 2.0),
               OutOfRange);
}

TEST(UubCertify, ZeroInitialCondition) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  const Trajectory tr = oracle_run(lf, 0.0, 0.0, 0.05, 5.0);
  const UubCertificate cert = uub_certify({tr}, lf, 0.0, 0.0);
  EXPECT_TRUE(cert.certified) << cert.detail;
  EXPECT_EQ(cert.epsilon, 0.0);
  EXPECT_EQ(cert.T, 0.0);
  EXPECT_EQ(cert.r, 0.0);
}

TEST(UubCertify, OracleLoopHasVanishingRadius) {
  const LyapunovFunction lf =
      make(default_scene(), gain(1.0, ReferenceSource::kOracle));
  std::vector<Trajectory> runs;
  for (auto [x2, x3] : {std::pair{3.0, -1.0}, std::pair{-3.0, -1.0},
                        std::pair{0.0, -4.0}, std::pair{2.5, 2.5}}) {
    runs.push_back(oracle_run(lf, x2, x3, 0.05, 80.0));
  }
  const UubCertificate cert = uub_certify(runs, lf, 0.0, 0.0);
  EXPECT_TRUE(cert.certified) << cert.detail;
  EXPECT_EQ(cert.r, 0.0);
  EXPECT_EQ(cert.r_bound, 0.0);
  EXPECT_LE(cert.delta_max, 4.0 + 1e-12);
  EXPECT_GT(cert.epsilon, 0.0);
  // Definition check repeated here: nothing leaves the ball after T.
  for (const Trajectory& tr : runs) {
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      if (tr.t[k] >= cert.T) {
        ASSERT_LE(std::hypot(tr.x2[k], tr.x3[k]), cert.epsilon);
      }
    }
  }
}

TEST(TrajectoryEps2, OracleRunHasNoMismatch) {
  const LyapunovFunction lf =
      make(default_scene(), gain(1.0, ReferenceSource::kOracle));
  EXPECT_EQ(trajectory_eps2({oracle_run(lf, 2.0, -1.0, 0.05, 10.0)}, lf), 0.0);
}

TEST(TrajectoryEps2, TakesLargestSampleMismatch) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  Trajectory tr;
  tr.t = {0.0, 0.05, 0.1};
  tr.x2 = {1.0, 0.5, 0.0};
  tr.x3 = {0.0, 0.0, 0.0};
  tr.u = {lf.ideal()(1.0) + 0.25, lf.ideal()(0.5) - 0.75};
  EXPECT_NEAR(trajectory_eps2({tr}, lf), 0.75, 1e-12);
}

TEST(UubCertify, ReportsFailureInsteadOfCertifying) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  Trajectory tr;
  tr.t = {0.0, 0.05, 0.1};
  tr.x2 = {-4.0, -4.5, -4.9};
  tr.x3 = {10.0, 10.5, 11.0};
  // Pushing in the direction that grows V.
  tr.u = {1e5, 1e5};
  const UubCertificate cert = uub_certify({tr}, lf, 0.0, 0.0);
  EXPECT_FALSE(cert.certified);
  EXPECT_FALSE(cert.detail.empty());
}

TEST(UubCertify, InvalidOptions) {
  const LyapunovFunction lf = make(default_scene(), gain(1.0));
  UubOptions opt;
  opt.angles = 2;
  EXPECT_THROW(uub_certify({}, lf, 0.0, 0.0, opt), InvalidArgument);
}

}  // namespace
}  // namespace pixelreg
