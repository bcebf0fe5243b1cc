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

#include "pixelreg/dynamics.hpp"

namespace pixelreg {
namespace {

VehicleParams slow_plant() { return {1500.0, 1500.0, 75.0, 75.0}; }

TEST(ErrorDeriv, EquilibriumIsFixed) {
  const ErrorState d = error_deriv({0, 0, 0}, 0.0, slow_plant());
  EXPECT_EQ(d, (ErrorState{0, 0, 0}));
}

TEST(ErrorDeriv, LeaderSpeedError) {
  const ErrorState d = error_deriv({1, 0, 0}, 0.0, slow_plant());
  EXPECT_DOUBLE_EQ(d.x1, -0.05);
  EXPECT_DOUBLE_EQ(d.x2, 1.0);
  EXPECT_DOUBLE_EQ(d.x3, 0.0);
}

TEST(ErrorDeriv, ControlBalancesDrag) {
  const ErrorState d = error_deriv({0, 0, 2}, 150.0, slow_plant());
  EXPECT_DOUBLE_EQ(d.x1, 0.0);
  EXPECT_DOUBLE_EQ(d.x2, -2.0);
  EXPECT_DOUBLE_EQ(d.x3, 0.0);
}

TEST(ErrorDeriv, RejectsNonFinite) {
  EXPECT_THROW(error_deriv({NAN, 0, 0}, 0.0, slow_plant()), InvalidState);
  EXPECT_THROW(error_deriv({0, 0, 0}, INFINITY, slow_plant()), InvalidState);
}

TEST(ErrorDeriv, LinearInStateAndControl) {
  const VehicleParams p = slow_plant();
  const ErrorState x{0.3, -1.7, 2.25};
  const double u = 41.0;
  for (double a : {-2.0, 0.5, 4.0}) {
    const ErrorState lhs = error_deriv({a * x.x1, a * x.x2, a * x.x3}, a * u, p);
    const ErrorState rhs = error_deriv(x, u, p);
    EXPECT_DOUBLE_EQ(lhs.x1, a * rhs.x1);
    EXPECT_DOUBLE_EQ(lhs.x2, a * rhs.x2);
    EXPECT_DOUBLE_EQ(lhs.x3, a * rhs.x3);
  }
}

TEST(DecoupledDeriv, Examples) {
  const VehicleParams p = slow_plant();
  EXPECT_EQ(decoupled_deriv(0, 0, 0, p), std::make_pair(0.0, 0.0));
  auto [a, b] = decoupled_deriv(5, 0, 0, p);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 0.0);
  auto [c, d] = decoupled_deriv(0, 1, 0, p);
  EXPECT_DOUBLE_EQ(c, -1.0);
  EXPECT_DOUBLE_EQ(d, -0.05);
}

TEST(DecoupledDeriv, MatchesFullModelWithoutLeaderError) {
  const VehicleParams p{200, 300, 40, 55};
  for (double x2 : {-3.0, 0.0, 2.5}) {
    for (double x3 : {-1.0, 0.4}) {
      for (double u : {-80.0, 0.0, 12.0}) {
        const ErrorState full = error_deriv({0, x2, x3}, u, p);
        auto [d2, d3] = decoupled_deriv(x2, x3, u, p);
        EXPECT_EQ(full.x2, d2);
        EXPECT_EQ(full.x3, d3);
      }
    }
  }
}

TEST(Rk4, ZeroRateLeavesStateUnchanged) {
  const StateVector<3> x{1.5, -2.0, 7.25};
  const auto next = rk4_step<3>(
      x, [](const StateVector<3>&) { return StateVector<3>{0, 0, 0}; }, 0.01);
  EXPECT_EQ(next, x);
}

TEST(Rk4, ExponentialDecay) {
  StateVector<1> x{1.0};
  auto f = [](const StateVector<1>& z) { return StateVector<1>{-0.05 * z[0]}; };
  for (int i = 0; i < 100; ++i) x = rk4_step<1>(x, f, 0.1);
  EXPECT_NEAR(x[0], std::exp(-0.5), 1e-6);
}

TEST(Rk4, FourthOrderConvergence) {
  // Oscillator x'' = -x keeps the error away from round-off at these steps.
  auto f = [](const StateVector<2>& z) { return StateVector<2>{z[1], -z[0]}; };
  auto global_error = [&](double dt) {
    StateVector<2> x{1.0, 0.0};
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) x = rk4_step<2>(x, f, dt);
    return std::abs(x[0] - std::cos(2.0));
  };
  const double ratio = global_error(0.1) / global_error(0.05);
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(Rk4, RejectsBadStep) {
  auto f = [](const StateVector<1>& z) { return z; };
  EXPECT_THROW(rk4_step<1>(StateVector<1>{1.0}, f, 0.0), InvalidArgument);
  EXPECT_THROW(rk4_step<1>(StateVector<1>{1.0}, f, -0.1), InvalidArgument);
}

TEST(StepErrorDynamics, LeaderErrorDecaysExponentially) {
  const VehicleParams p{200, 200, 40, 40};
  ErrorState x{2.0, 0.0, 0.0};
  const double dt = 0.05;
  for (int k = 1; k <= 400; ++k) {
    x = step_error_dynamics(x, 0.0, p, dt);
    EXPECT_NEAR(x.x1, 2.0 * std::exp(-p.alpha1 / p.m1 * k * dt), 1e-9);
  }
}

TEST(StepErrorDynamics, SpacingIntegratesSpeedDifference) {
  // With u = 0 both speed errors decay exponentially, so x2 has a closed form.
  const VehicleParams p{200, 300, 40, 30};
  const double a1 = p.alpha1 / p.m1, a2 = p.alpha2 / p.m2;
  const ErrorState x0{1.0, 0.5, -0.75};
  ErrorState x = x0;
  const double dt = 0.05;
  for (int k = 1; k <= 600; ++k) {
    x = step_error_dynamics(x, 0.0, p, dt);
    const double t = k * dt;
    const double exact = x0.x2 + x0.x1 / a1 * (1.0 - std::exp(-a1 * t)) -
                         x0.x3 / a2 * (1.0 - std::exp(-a2 * t));
    ASSERT_NEAR(x.x2, exact, 1e-9) << "t = " << t;
  }
}

TEST(StepDecoupled, AgreesWithFullStep) {
  const VehicleParams p{200, 200, 40, 40};
  double x2 = 1.2, x3 = -0.3;
  ErrorState full{0.0, x2, x3};
  for (int k = 0; k < 100; ++k) {
    const double u = 25.0 * x2;
    std::tie(x2, x3) = step_decoupled(x2, x3, u, p, 0.05);
    full = step_error_dynamics(full, u, p, 0.05);
    EXPECT_EQ(full.x1, 0.0);
    EXPECT_DOUBLE_EQ(full.x2, x2);
    EXPECT_DOUBLE_EQ(full.x3, x3);
  }
}

TEST(SimState, RoundTripsThroughErrorCoordinates) {
  const SimState s{12.5, 9.0, 11.0, 10.0, 10.0, 400.0, 3.0};
  const ErrorState x = s.to_error();
  EXPECT_DOUBLE_EQ(x.x1, 1.0);
  EXPECT_DOUBLE_EQ(x.x2, -2.5);
  EXPECT_DOUBLE_EQ(x.x3, -1.0);
  const SimState back = SimState::from_error(x, 10.0, 10.0, 400.0, 3.0);
  EXPECT_DOUBLE_EQ(back.s, s.s);
  EXPECT_DOUBLE_EQ(back.v1, s.v1);
  EXPECT_DOUBLE_EQ(back.v2, s.v2);
}

TEST(VehicleParams, Validation) {
  EXPECT_NO_THROW(validate(VehicleParams{}));
  EXPECT_THROW(validate(VehicleParams{0, 1, 1, 1}), InvalidArgument);
  EXPECT_THROW(validate(VehicleParams{1, 1, -1, 1}), InvalidArgument);
  EXPECT_THROW(validate(VehicleParams{1, NAN, 1, 1}), InvalidArgument);
}

}  // namespace
}  // namespace pixelreg
