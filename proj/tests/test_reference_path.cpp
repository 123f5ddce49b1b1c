// Copyright 2026 The urbanmpc Authors
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
#include <numbers>
#include <vector>

#include "urbanmpc/reference_path.hpp"

using namespace urbanmpc;

namespace {

ReferenceCurve straight(double len = 100.0, double v = 10.0)
{
  const std::vector<RouteWaypoint> w{{0.0, 0.0, v}, {len, 0.0, v}};
  return ReferenceCurve(w);
}

// quarter circle of radius r centred at (0, r), starting at the origin heading +x
ReferenceCurve arc(double r, int segments)
{
  std::vector<RouteWaypoint> w;
  for (int i = 0; i <= segments; ++i) {
    const double a = 0.5 * std::numbers::pi * i / segments;
    w.push_back({r * std::sin(a), r - r * std::cos(a), 5.0});
  }
  return ReferenceCurve(w);
}

}  // namespace

TEST(WrapAngle, Range)
{
  EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi / 2.0), -std::numbers::pi / 2.0, 1e-15);
  EXPECT_NEAR(unwrap_near(0.1, 4.0 * std::numbers::pi), 4.0 * std::numbers::pi + 0.1, 1e-12);
}

TEST(ReferenceCurve, RejectsDegenerateInput)
{
  const std::vector<RouteWaypoint> one{{0, 0, 1}};
  EXPECT_THROW(ReferenceCurve{one}, std::invalid_argument);
  const std::vector<RouteWaypoint> dup{{0, 0, 1}, {0, 0, 1}};
  EXPECT_THROW(ReferenceCurve{dup}, std::invalid_argument);
}

TEST(Project, PerpendicularFoot)
{
  const auto c = straight();
  const Projection p = c.project({3.0, 1.0}, 0.2);
  EXPECT_DOUBLE_EQ(p.sigma, 3.0);
  EXPECT_DOUBLE_EQ(p.error.e_y, 1.0);
  EXPECT_NEAR(p.error.e_psi, 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(c.project({3.0, -2.0}).error.e_y, -2.0);
}

TEST(Project, ClampsBeyondEnd)
{
  EXPECT_DOUBLE_EQ(straight().project({101.0, 0.0}).sigma, 100.0);
  EXPECT_DOUBLE_EQ(straight().project({-4.0, 0.0}).sigma, 0.0);
}

TEST(Project, TieGoesToSmallerSigma)
{
  // (9,1) sits on the bisector of the corner at (10,0)
  const std::vector<RouteWaypoint> w{{0, 0, 1}, {10, 0, 1}, {10, 10, 1}};
  const ReferenceCurve c(w);
  const Projection p = c.project({9.0, 1.0});
  EXPECT_DOUBLE_EQ(p.sigma, 9.0);
  EXPECT_DOUBLE_EQ(p.tangent, 0.0);
}

TEST(Project, FindsLaterSegment)
{
  // regression: the first segment must seed the running minimum
  const std::vector<RouteWaypoint> w{{0, 0, 1}, {10, 0, 1}, {10, 10, 1}};
  const ReferenceCurve c(w);
  const Projection p = c.project({11.0, 7.0});
  EXPECT_DOUBLE_EQ(p.sigma, 17.0);
  EXPECT_DOUBLE_EQ(p.error.e_y, -1.0);
}

TEST(AdvanceSigma, Recursion)
{
  EXPECT_DOUBLE_EQ(advance_sigma(10.0, 10.0, 0.0, 0.05, 100.0), 10.5);
  EXPECT_DOUBLE_EQ(advance_sigma(10.0, 0.0, 0.3, 0.05, 100.0), 10.0);
  EXPECT_NEAR(advance_sigma(10.0, 10.0, std::numbers::pi / 2.0, 0.05, 100.0), 10.0, 1e-15);
  EXPECT_DOUBLE_EQ(advance_sigma(99.9, 10.0, 0.0, 0.05, 100.0), 100.0);
}

TEST(BuildReferences, StraightConstantSpeed)
{
  const auto c = straight();
  const std::vector<double> v(21, 10.0), h(21, 0.0);
  const auto refs = build_references(0.0, v, h, c, 0.05, 0.05);
  ASSERT_EQ(refs.size(), 21u);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    EXPECT_NEAR(refs[k].x, 0.5 * static_cast<double>(k), 1e-12);
    EXPECT_EQ(refs[k].theta, 0.0);
    EXPECT_EQ(refs[k].delta, 0.05);
    EXPECT_EQ(refs[k].delta_sp, 0.05);
    EXPECT_EQ(refs[k].a, 0.0);
    EXPECT_EQ(refs[k].omega, 0.0);
    EXPECT_NEAR(refs[k].v, 10.0, 1e-12);
  }
}

TEST(BuildReferences, StoppedGuessKeepsReferencePoint)
{
  const auto c = straight();
  const std::vector<double> v(11, 0.0), h(11, 0.0);
  const auto refs = build_references(42.0, v, h, c, 0.0, 0.05);
  for (const auto & r : refs) {
    EXPECT_EQ(r.x, 42.0);
    EXPECT_EQ(r.y, 0.0);
    EXPECT_EQ(r.theta, 0.0);
  }
}

TEST(BuildReferences, ArcHeadingsFollowTangent)
{
  const double R = 20.0;
  const int segs = 40;
  const auto c = arc(R, segs);
  const double seg_len = c.segment_length(0);
  const std::vector<double> v(41, 5.0), h(41, 0.0);
  auto refs = build_references(0.0, v, h, c, 0.0, 0.05);
  for (std::size_t k = 1; k < refs.size(); ++k) {
    EXPECT_GE(refs[k].theta, refs[k - 1].theta - 1e-12);
    EXPECT_GE(refs[k].sigma, refs[k - 1].sigma);
  }
  for (const auto & r : refs) {
    // exact tangent of the circle at the reference point
    const double a = std::atan2(r.x, R - r.y);
    EXPECT_LE(std::abs(r.theta - a), 2.0 * seg_len / R);
    EXPECT_LE((c.position(r.sigma) - Eigen::Vector2d(r.x, r.y)).norm(), 1e-12);
    EXPECT_LE(c.project({r.x, r.y}).error.e_y, 1e-9);
  }
}

TEST(BuildReferences, CarriesHeadingAtCurveEnd)
{
  const std::vector<RouteWaypoint> w{{0, 0, 1}, {0, 5, 1}};
  const ReferenceCurve c(w);
  const std::vector<double> v(11, 10.0), h(11, std::numbers::pi / 2.0);
  const auto refs = build_references(0.0, v, h, c, 0.0, 0.05);
  for (const auto & r : refs) { EXPECT_NEAR(r.theta, std::numbers::pi / 2.0, 1e-12); }
}

TEST(BuildReferences, HeadingUnwrappedNearGuess)
{
  const auto c = straight();
  const double turns = 2.0 * std::numbers::pi * 3.0;
  const std::vector<double> v(6, 10.0), h(6, turns);
  const auto refs = build_references(0.0, v, h, c, 0.0, 0.05);
  for (const auto & r : refs) { EXPECT_NEAR(r.theta, turns, 1e-12); }
}

TEST(BuildReferences, RejectsMismatchedGuess)
{
  const std::vector<double> v(5, 1.0), h(4, 0.0);
  EXPECT_THROW(build_references(0.0, v, h, straight(), 0.0, 0.05), std::invalid_argument);
}
