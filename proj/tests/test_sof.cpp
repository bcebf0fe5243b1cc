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
#include <complex>
#include <random>

#include "pixelreg/sof.hpp"

namespace pixelreg {
namespace {

VehicleParams follower(double m2, double alpha2) {
  VehicleParams p;
  p.m2 = m2;
  p.alpha2 = alpha2;
  return p;
}

TEST(SofSynthesize, ClosedFormEntries) {
  const SofSolution s = sof_synthesize(follower(1500, 75), 1.0);
  EXPECT_NEAR(s.P(2, 2), 30000.0, 1e-9 * 30000.0);
  EXPECT_NEAR(s.P(1, 1), 95.0, 1e-12 * 95.0);
  EXPECT_NEAR(s.G(2), 20.0, 1e-12 * 20.0);
  EXPECT_EQ(s.G(1), 0.0);
  EXPECT_LT(s.riccati_residual, 1e-8);
  EXPECT_LT(s.kernel_residual, 1e-9);
}

TEST(SofSynthesize, PrintedP11AcceptedForMatchedTimeConstants) {
  const VehicleParams p{1500, 1500, 75, 75};
  const SofSolution s = sof_synthesize(p, 2.0);
  EXPECT_FALSE(s.p11_from_search);
  EXPECT_LT(s.riccati_residual, 1e-8 * (s.C.transpose() * s.C).norm());
}

TEST(SofSynthesize, MismatchedTimeConstantsStillSolve) {
  const VehicleParams p{200, 1500, 40, 75};
  const SofSolution s = sof_synthesize(p, 2.0);
  EXPECT_TRUE(s.p11_from_search);
  EXPECT_LT(s.riccati_residual, 1e-8 * (s.C.transpose() * s.C).norm());
  EXPECT_GE(min_eigenvalue(s.P), -1e-10);
}

TEST(SofSynthesize, SignOfOutputGainIrrelevant) {
  for (double c : {0.3, 1.0, 7.5}) {
    const SofSolution a = sof_synthesize(follower(900, 60), c);
    const SofSolution b = sof_synthesize(follower(900, 60), -c);
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.G, b.G);
  }
}

TEST(SofSynthesize, RejectsZeroGain) {
  EXPECT_THROW(sof_synthesize(VehicleParams{}, 0.0), InvalidArgument);
  EXPECT_THROW(sof_synthesize(VehicleParams{}, NAN), InvalidArgument);
}

TEST(SofSynthesize, NullProjectorIsIdempotent) {
  const SofSolution s = sof_synthesize(follower(1500, 75), 3.0);
  EXPECT_LT((s.N * s.N - s.N).norm(), 1e-12);
  EXPECT_LT((s.C * s.N).norm(), 1e-12);
}

TEST(SofPolicy, ReducesToOutputFeedback) {
  for (double c : {1.0, 4.0}) {
    const SofPolicy pol = sof_policy(sof_synthesize(follower(1500, 75), c));
    EXPECT_NEAR(pol.coeff_x2, c, 1e-8 * c);
    EXPECT_NEAR(pol.coeff_x1, 0.0, 1e-8 * c);
    EXPECT_NEAR(pol.coeff_x3, 0.0, 1e-8 * c);
    EXPECT_NEAR(pol.reduced_gain, 1.0, 1e-8);
  }
}

TEST(SofPolicy, RejectsInconsistentSolution) {
  SofSolution s = sof_synthesize(follower(1500, 75), 1.0);
  s.G(2) += 5.0;
  EXPECT_THROW(sof_policy(s), SynthesisInconsistency);
}

TEST(SofPolicy, ClosedLoopIsHurwitz) {
  const VehicleParams p = follower(1500, 75);
  for (double c : {0.1, 1.0, 4.0, 10.0}) {
    const SofPolicy pol = sof_policy(sof_synthesize(p, c));
    Eigen::Matrix2d a;
    a << 0.0, -1.0, pol.coeff_x2 / p.m2, -p.alpha2 / p.m2;
    // Characteristic polynomial lambda^2 + (alpha2/m2) lambda + |c|/m2.
    EXPECT_NEAR(-a.trace(), p.alpha2 / p.m2, 1e-12);
    EXPECT_NEAR(a.determinant(), std::abs(c) / p.m2, 1e-12);
    const Eigen::Vector2cd ev = a.eigenvalues();
    EXPECT_LT(ev(0).real(), 0.0);
    EXPECT_LT(ev(1).real(), 0.0);
  }
}

TEST(SofProperty, RandomDraws) {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> um2(500, 3000), ua2(20, 200), uc(0.1, 10);
  for (int i = 0; i < 100; ++i) {
    const VehicleParams p = follower(um2(rng), ua2(rng));
    const double c = uc(rng);
    const SofSolution s = sof_synthesize(p, c);
    const double ctc = (s.C.transpose() * s.C).norm();
    ASSERT_LT(s.riccati_residual, 1e-8 * ctc) << "draw " << i;
    ASSERT_LT(s.kernel_residual, 1e-9) << "draw " << i;
    ASSERT_GE(min_eigenvalue(s.P), -1e-10) << "draw " << i;
    const SofPolicy pol = sof_policy(s);
    ASSERT_NEAR(pol.coeff_x2, c, 1e-8 * c) << "draw " << i;
  }
}

}  // namespace
}  // namespace pixelreg
