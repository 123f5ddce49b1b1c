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
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "urbanmpc/pedestrian_prediction.hpp"

using namespace urbanmpc;

namespace {

PathGraph line_graph()
{
  PathGraph g;
  g.add_node(0.0, 0.0);
  g.add_node(100.0, 0.0);
  g.add_two_way(0, 1);
  return g;
}

// sidewalk along y = -5 with a crosswalk leaving at x = 60
PathGraph junction_graph()
{
  PathGraph g;
  for (const auto & [x, y] : std::vector<std::pair<double, double>>{{40, -5}, {60, -5}, {80, -5}, {60, 5}, {40, 5}, {80, 5}}) {
    g.add_node(x, y);
  }
  g.add_two_way(0, 1);
  g.add_two_way(1, 2);
  g.add_two_way(1, 3);
  g.add_two_way(4, 3);
  g.add_two_way(3, 5);
  return g;
}

PredictorConfig noiseless()
{
  PredictorConfig c;
  c.process_noise.setZero();
  return c;
}

}  // namespace

TEST(AssignReferences, StraightSidewalkSingleRoute)
{
  const PredictorConfig cfg;
  const auto routes = assign_references({10.0, 0.2, 1.4, 0.0}, line_graph(), cfg);
  ASSERT_EQ(routes.size(), 1u);
  EXPECT_EQ(routes[0].weight, 1.0);
  EXPECT_EQ(routes[0].nodes, (std::vector<std::size_t>{0, 1}));
}

TEST(AssignReferences, PrefersWalkingDirectionOnTwoWayEdge)
{
  const auto routes = assign_references({10.0, 0.0, 1.4, std::numbers::pi}, line_graph(), PredictorConfig{});
  ASSERT_EQ(routes.size(), 1u);
  EXPECT_EQ(routes[0].nodes, (std::vector<std::size_t>{1, 0}));
}

TEST(AssignReferences, JunctionSplitsEqually)
{
  const auto routes = assign_references({55.0, -5.0, 1.4, 0.0}, junction_graph(), PredictorConfig{});
  ASSERT_EQ(routes.size(), 2u);
  EXPECT_EQ(routes[0].weight, 0.5);
  EXPECT_EQ(routes[1].weight, 0.5);
  EXPECT_EQ(routes[0].nodes, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(routes[1].nodes, (std::vector<std::size_t>{0, 1, 3}));
}

TEST(AssignReferences, WeightsSumToOneWithNestedBranches)
{
  PredictorConfig cfg;
  cfg.reach_margin = 60.0;  // reach past the second junction
  const auto routes = assign_references({55.0, -5.0, 1.4, 0.0}, junction_graph(), cfg);
  ASSERT_EQ(routes.size(), 3u);
  double sum = 0.0;
  for (const auto & r : routes) { sum += r.weight; }
  EXPECT_DOUBLE_EQ(sum, 1.0);
  EXPECT_EQ(routes[0].weight, 0.5);
  EXPECT_EQ(routes[1].weight, 0.25);
  EXPECT_EQ(routes[2].weight, 0.25);
}

TEST(AssignReferences, GatingRejectsFarMeasurement)
{
  PredictorConfig cfg;
  cfg.gating_radius = 5.0;
  EXPECT_TRUE(assign_references({50.0, 50.0, 1.0, 0.0}, line_graph(), cfg).empty());
  EXPECT_TRUE(assign_references({0.0, 0.0, 1.0, 0.0}, PathGraph{}, cfg).empty());
}

TEST(Propagate, NoiselessOnRouteAdvancesExactly)
{
  const PredictorConfig cfg = noiseless();
  const auto routes = assign_references({10.0, 0.0, cfg.nominal_speed, 0.0}, line_graph(), cfg);
  ASSERT_EQ(routes.size(), 1u);
  const auto pred = propagate({10.0, 0.0, cfg.nominal_speed, 0.0}, routes[0], cfg);
  ASSERT_EQ(pred.stages.size(), static_cast<std::size_t>(cfg.horizon) + 1);
  for (std::size_t k = 0; k < pred.stages.size(); ++k) {
    EXPECT_NEAR(pred.stages[k].x, 10.0 + cfg.nominal_speed * cfg.dt * static_cast<double>(k), 1e-12);
    EXPECT_EQ(pred.stages[k].y, 0.0);
    EXPECT_NEAR(pred.stages[k].lambda_a, pred.stages[0].lambda_a, 1e-12);
  }
}

TEST(Propagate, NoisyCovarianceStaysPsdAndAlignsWithRoute)
{
  const PredictorConfig cfg;
  const double heading = 0.7;
  PathGraph g;
  g.add_node(0.0, 0.0);
  g.add_node(100.0 * std::cos(heading), 100.0 * std::sin(heading));
  g.add_edge(0, 1);
  const PedestrianState m{std::cos(heading), std::sin(heading), 1.4, heading};
  const auto routes = assign_references(m, g, cfg);
  ASSERT_EQ(routes.size(), 1u);
  const auto pred = propagate(m, routes[0], cfg);
  for (std::size_t k = 0; k < pred.stages.size(); ++k) {
    const auto & st = pred.stages[k];
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(st.covariance);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12) << "stage " << k;
    EXPECT_GE(st.lambda_a, st.lambda_b);
    // independent eigendecomposition of the position block
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> pb(st.covariance.topLeftCorner<2, 2>());
    EXPECT_NEAR(st.lambda_a, cfg.confidence_scale * std::sqrt(pb.eigenvalues()[1]), 1e-12);
    EXPECT_NEAR(st.lambda_b, cfg.confidence_scale * std::sqrt(std::max(0.0, pb.eigenvalues()[0])), 1e-9);
    if (k >= 10) {
      // along-track growth dominates, so the major axis follows the route (mod pi)
      EXPECT_LT(std::abs(std::sin(st.alpha - heading)), 1e-3) << "stage " << k;
      EXPECT_GT(st.lambda_a, st.lambda_b);
    }
  }
  EXPECT_GT(pred.stages.back().lambda_a, pred.stages.front().lambda_a);
}

TEST(Propagate, LateralOffsetContracts)
{
  const PredictorConfig cfg = noiseless();
  PathGraph g = line_graph();
  // heading already pointing back at the route
  const double toward = -std::atan(cfg.lateral_gain * 1.0);
  const PedestrianState m{5.0, 1.0, cfg.nominal_speed, toward};
  const auto pred = propagate(m, assign_references(m, g, cfg).at(0), cfg);
  for (std::size_t k = 1; k < pred.stages.size(); ++k) {
    EXPECT_LT(std::abs(pred.stages[k].y), std::abs(pred.stages[k - 1].y)) << "stage " << k;
  }
  EXPECT_LT(std::abs(pred.stages.back().y), 0.1);

  // walking parallel to the route: the first Euler step keeps the offset, then it shrinks
  const PedestrianState par{5.0, 1.0, cfg.nominal_speed, 0.0};
  const auto p2 = propagate(par, assign_references(par, g, cfg).at(0), cfg);
  EXPECT_EQ(p2.stages[1].y, 1.0);
  for (std::size_t k = 2; k < p2.stages.size(); ++k) { EXPECT_LT(p2.stages[k].y, p2.stages[k - 1].y); }
}

TEST(Propagate, CovarianceEllipseOfCircle)
{
  PredictedStage st;
  detail::covariance_ellipse(Eigen::Matrix2d::Identity() * 0.04, 2.0, st);
  EXPECT_NEAR(st.lambda_a, 0.4, 1e-15);
  EXPECT_NEAR(st.lambda_b, 0.4, 1e-15);
}

TEST(PredictAll, Counts)
{
  const PredictorConfig cfg;
  EXPECT_TRUE(predict_all({}, junction_graph(), cfg).predictions.empty());

  const std::vector<PedestrianState> one{{55.0, -5.0, 1.4, 0.0}};
  const auto b1 = predict_all(one, junction_graph(), cfg);
  ASSERT_EQ(b1.predictions.size(), 2u);
  EXPECT_EQ(b1.predictions[0].weight, 0.5);
  EXPECT_EQ(b1.predictions[1].weight, 0.5);
  EXPECT_EQ(b1.predictions[1].hypothesis, 1u);

  const std::vector<PedestrianState> three{{10, 0, 1.4, 0.0}, {30, 0.5, 1.2, 0.0}, {500, 500, 1.0, 0.0}, {60, 0, 1.0, 0.0}};
  const auto b3 = predict_all(three, line_graph(), cfg);
  ASSERT_EQ(b3.predictions.size(), 3u);
  EXPECT_EQ(b3.predictions[0].pedestrian, 0u);
  EXPECT_EQ(b3.predictions[1].pedestrian, 1u);
  EXPECT_EQ(b3.predictions[2].pedestrian, 3u);
  EXPECT_EQ(b3.unmatched, (std::vector<std::size_t>{2}));
}

TEST(PredictorConfig, Validation)
{
  PredictorConfig c;
  c.heading_gain = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PredictorConfig{};
  c.process_noise(0, 0) = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
