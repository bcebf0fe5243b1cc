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

// Static output feedback for the three-state error dynamics through the
// kernel-constrained Riccati pair
//   0 = A'P + PA - PBB'P + C'C + G'G
//   0 = N (A'P + PA) N,   N = I - C'(CC')^-1 C
// with output y = c * x2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "pixelreg/dynamics.hpp"
#include "pixelreg/error.hpp"

namespace pixelreg {

struct SofSolution {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::RowVector3d C;
  Eigen::Matrix3d P;
  Eigen::RowVector3d G;
  Eigen::Matrix3d N;
  double c = 0.0;
  double riccati_residual = 0.0;
  double kernel_residual = 0.0;
  // True when the printed closed form for p11 was rejected and p11 was
  // recovered by minimizing the Riccati residual.
  bool p11_from_search = false;
  double reduced_gain = 0.0;
};

struct SofPolicy {
  double coeff_x1 = 0.0;
  double coeff_x2 = 0.0;
  double coeff_x3 = 0.0;
  double reduced_gain = 0.0;
};

namespace detail {

struct SofPieces {
  double a1, a2, p22, p33, G3;
};

inline Eigen::Matrix3d sof_p(const SofPieces& q, double p11) {
  const double p13 = -(q.a1 * p11 + q.a2 * q.p33) / (q.a1 + q.a2);
  Eigen::Matrix3d P;
  P << p11, q.a1 * p11, p13,
       q.a1 * p11, q.p22, -q.a2 * q.p33,
       p13, -q.a2 * q.p33, q.p33;
  return P;
}

inline Eigen::RowVector3d sof_g(const VehicleParams& p, const SofPieces& q,
                                double p11) {
  const double g1 = -(p.alpha1 * p.m2 * p11 + p.alpha2 * p.m1 * q.p33) /
                    (p.alpha1 * p.m2 * p.m2 + p.alpha2 * p.m1 * p.m2);
  return {g1, 0.0, q.G3};
}

inline Eigen::Matrix3d riccati_lhs(const Eigen::Matrix3d& A,
                                   const Eigen::Vector3d& B,
                                   const Eigen::RowVector3d& C,
                                   const Eigen::Matrix3d& P,
                                   const Eigen::RowVector3d& G) {
  return A.transpose() * P + P * A - P * B * B.transpose() * P +
         C.transpose() * C + G.transpose() * G;
}

}  // namespace detail

inline SofSolution sof_synthesize(const VehicleParams& p, double c) {
  validate(p);
  if (!std::isfinite(c) || c == 0.0) {
    throw InvalidArgument("output gain c must be finite and nonzero");
  }
  const double ac = std::abs(c);
  const double m1 = p.m1, m2 = p.m2, al1 = p.alpha1, al2 = p.alpha2;
  detail::SofPieces q{al1 / m1, al2 / m2, ac * al2 + ac * ac * m2 / al2,
                      ac * m2 * m2 / al2, ac * m2 / al2};

  SofSolution s;
  s.c = c;
  s.A << -q.a1, 0, 0,
         1, 0, -1,
         0, 0, -q.a2;
  s.B << 0, 0, 1.0 / m2;
  s.C << 0, c, 0;
  s.N = Eigen::Matrix3d::Identity() -
        s.C.transpose() * (s.C * s.C.transpose()).inverse() * s.C;

  auto residual = [&](double p11) {
    return detail::riccati_lhs(s.A, s.B, s.C, detail::sof_p(q, p11),
                               detail::sof_g(p, q, p11));
  };

  // Printed closed form for p11, taken verbatim.
  const double t1 = m1 / al1, t2 = m2 / al2;
  double p11 = (ac * al2 + ac * ac * m2 / al2 - ac * ac * (t1 * t2) / (t1 + t1)) /
               (ac * al1 / (al1 * m2 + al2 * m1) + al1 * al1 / (m1 * m1));

  if (residual(p11).norm() > 1e-6) {
    // The residual is a matrix quadratic in p11, so its squared norm is a
    // quartic; take the real critical point with the smallest residual.
    const double h = std::max(std::abs(p11), 1.0);
    const Eigen::Matrix3d r0 = residual(0.0);
    const Eigen::Matrix3d rp = residual(h);
    const Eigen::Matrix3d rm = residual(-h);
    const Eigen::Matrix3d r1 = (rp - rm) / (2.0 * h);
    const Eigen::Matrix3d r2 = (rp + rm - 2.0 * r0) / (2.0 * h * h);
    auto dot = [](const Eigen::Matrix3d& x, const Eigen::Matrix3d& y) {
      return (x.array() * y.array()).sum();
    };
    // d/dt ||r0 + t r1 + t^2 r2||^2 / 2
    Eigen::Vector4d cubic;
    cubic << dot(r0, r1), dot(r1, r1) + 2.0 * dot(r0, r2), 3.0 * dot(r1, r2),
        2.0 * dot(r2, r2);
    std::vector<double> roots;
    if (cubic[3] != 0.0) {
      Eigen::PolynomialSolver<double, 3> solver(cubic);
      solver.realRoots(roots, 1e-8 * h);
    } else if (cubic[1] != 0.0) {
      roots.push_back(-cubic[0] / cubic[1]);
    }
    double best = std::numeric_limits<double>::infinity();
    for (double t : roots) {
      // Newton polish on the exact quadratic entries.
      for (int it = 0; it < 8; ++it) {
        const Eigen::Matrix3d r = r0 + t * r1 + t * t * r2;
        const Eigen::Matrix3d dr = r1 + 2.0 * t * r2;
        const double g = dot(r, dr);
        const double hess = dot(dr, dr) + 2.0 * dot(r, r2);
        if (!(hess > 0.0)) break;
        t -= g / hess;
      }
      const double n = residual(t).norm();
      if (n < best) {
        best = n;
        p11 = t;
      }
    }
    if (!std::isfinite(best)) {
      throw SynthesisInconsistency("no real p11 minimizes the Riccati residual");
    }
    s.p11_from_search = true;
  }

  s.P = detail::sof_p(q, p11);
  s.G = detail::sof_g(p, q, p11);
  s.riccati_residual = residual(p11).norm();
  s.kernel_residual =
      (s.N * (s.A.transpose() * s.P + s.P * s.A) * s.N).norm();
  s.reduced_gain = (s.G - s.B.transpose() * s.P)(1) / c;
  return s;
}

// u = G x - B'P x, which must depend on x2 alone.
inline SofPolicy sof_policy(const SofSolution& sol) {
  const Eigen::RowVector3d bp = sol.B.transpose() * sol.P;
  const Eigen::RowVector3d k = sol.G - bp;
  const double scale = std::max({bp.cwiseAbs().maxCoeff(),
                                 sol.G.cwiseAbs().maxCoeff(),
                                 std::numeric_limits<double>::min()});
  if (std::abs(k(0)) > 1e-8 * scale || std::abs(k(2)) > 1e-8 * scale) {
    throw SynthesisInconsistency(
        "SOF policy depends on x1 or x3; it does not factor through the output");
  }
  return {k(0), k(1), k(2), k(1) / sol.c};
}

inline double min_eigenvalue(const Eigen::Matrix3d& P) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace pixelreg
