#include <gtest/gtest.h>

#include <cmath>

#include "../support/gradient_check.hpp"
#include "../support/scenes.hpp"
#include "springsim/gradients.hpp"

using namespace springsim;

TEST(FiniteDiff, Quadratic) {
  const std::vector<double> x{3.0};
  const auto g = central_difference([](std::span<const double> p) { return p[0] * p[0]; }, x, 1e-4);
  EXPECT_NEAR(g[0], 6.0, 1e-8);
}

TEST(FiniteDiff, Constant) {
  const std::vector<double> x{1.0, -2.0};
  const auto g = central_difference([](std::span<const double>) { return 4.2; }, x, 1e-4);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(FiniteDiff, Sine) {
  const std::vector<double> x{1.0};
  const auto g = central_difference([](std::span<const double> p) { return std::sin(p[0]); }, x, 1e-4);
  EXPECT_NEAR(g[0], std::cos(1.0), 1e-8);
}

TEST(FiniteDiff, OverParams) {
  auto p = PhysicalParams::with_uniform_stiffness(2, 1.0);
  p.kappa = 0.5;
  const auto g = finite_diff_gradient([](const PhysicalParams& q) { return q.kappa * q.kappa + q.v0.x(); }, p, 1e-4);
  EXPECT_NEAR(g.kappa, 1.0, 1e-8);
  EXPECT_NEAR(g.v0.x(), 1.0, 1e-8);
  EXPECT_EQ(g.log_k[0], 0.0);
}

TEST(FlatLayout, RoundTrip) {
  auto p = PhysicalParams::with_uniform_stiffness(3, 10.0);
  p.v0 = Vec3(1, 2, 3);
  p.kappa = -0.5;
  p.boundary.height = 0.1;
  p.boundary.friction_logit = 0.7;
  const auto flat = flatten_learnables(p);
  ASSERT_EQ(flat.size(), 3u + 3u + 3u);
  PhysicalParams q = PhysicalParams::with_uniform_stiffness(3, 1.0);
  assign_learnables(q, flat);
  EXPECT_EQ(flatten_learnables(q), flat);
}

namespace {

Trajectory constant_trajectory(const std::vector<Vec3>& pts, std::size_t frames, double dt) {
  Trajectory t;
  t.frame_dt = dt;
  for (std::size_t f = 0; f < frames; ++f) t.keyframes.push_back({static_cast<double>(f) * dt, scenes::cloud(pts)});
  return t;
}

}  // namespace

TEST(GradRollout, ZeroWeightGivesZeroGradient) {
  const auto s = scenes::gradient_scene(1, true);
  LossSpec spec = s.spec;
  spec.weight = 0.0;
  const auto r = grad_rollout(s.anchors, s.topology, s.params, constant_trajectory(s.anchors, 3, 1.0 / 30), spec);
  EXPECT_EQ(r.loss, 0.0);
  for (double g : flatten(r.gradient)) EXPECT_EQ(g, 0.0);
}

TEST(GradRollout, BallisticVelocitySensitivity) {
  // Two anchors at rest length moving together: springs stay slack.
  const std::vector<Vec3> pts{Vec3(0, 0, 1), Vec3(0.3, 0, 1)};
  const auto topo = build_topology(pts, 1);
  auto p = PhysicalParams::with_uniform_stiffness(2, 100.0);
  p.boundary.enabled = false;
  p.v0 = Vec3(0.4, -0.2, 1.5);
  const double T = 0.5;
  const std::vector<Vec3> target{Vec3(0.5, 0.1, 0.9), Vec3(0.6, -0.3, 1.4)};
  Trajectory obs = constant_trajectory(pts, 2, T);
  obs.keyframes[1].cloud.positions = target;
  LossSpec spec{LossKind::Correspondence, 1.0, 50};
  const auto r = grad_rollout(pts, topo, p, obs, spec);
  const auto traj = rollout(pts, topo, p, {2, 50, T});
  // L = (1/2 frames) * (1/2 anchors) * sum_i |x_i(T) - x*_i|^2 and dx(T)/dv0 = T I.
  Vec3 expect = Vec3::Zero();
  for (std::size_t i = 0; i < 2; ++i) expect += 2.0 * (traj.keyframes[1].cloud.positions[i] - target[i]) * T;
  expect /= 4.0;
  EXPECT_LT((r.gradient.v0 - expect).norm(), 1e-10 * expect.norm());
}

TEST(GradRollout, ForwardLossBitIdenticalToRollout) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = scenes::gradient_scene(seed, seed % 2 == 1);
    const auto r = grad_rollout(s.anchors, s.topology, s.params, s.observed, s.spec);
    const auto traj = rollout(s.anchors, s.topology, s.params, {3, s.spec.n_t, s.observed.frame_dt});
    EXPECT_EQ(r.loss, trajectory_loss_value(traj, s.observed, s.spec));
  }
}

TEST(GradRollout, Deterministic) {
  const auto s = scenes::gradient_scene(4, true);
  const auto a = grad_rollout(s.anchors, s.topology, s.params, s.observed, s.spec);
  const auto b = grad_rollout(s.anchors, s.topology, s.params, s.observed, s.spec);
  EXPECT_EQ(flatten(a.gradient), flatten(b.gradient));
  EXPECT_EQ(a.branch_signature, b.branch_signature);
}

TEST(GradRollout, MatchesFiniteDifferencesWithoutContact) {
  const auto c = scenes::check_gradient(scenes::gradient_scene(10, false));
  EXPECT_EQ(c.contacts, 0u);
  EXPECT_EQ(c.excluded, 0u);
  EXPECT_GE(c.within_1e3, static_cast<std::size_t>(0.95 * c.coordinates));
  EXPECT_EQ(c.within_1e2, c.coordinates);
}

TEST(GradRollout, MatchesFiniteDifferencesWithContact) {
  for (std::uint64_t seed : {11u, 12u}) {
    const auto c = scenes::check_gradient(scenes::gradient_scene(seed, true));
    EXPECT_GT(c.contacts, 0u);
    const auto checked = c.coordinates - c.excluded;
    EXPECT_GT(checked, c.coordinates / 2);
    EXPECT_GE(c.within_1e3, static_cast<std::size_t>(std::ceil(0.95 * checked)));
    EXPECT_EQ(c.within_1e2, checked) << "worst " << c.worst;
  }
}

TEST(GradRollout, CorrespondenceLossMatchesFiniteDifferences) {
  auto s = scenes::gradient_scene(13, true);
  s.spec.kind = LossKind::Correspondence;
  const auto c = scenes::check_gradient(s);
  const auto checked = c.coordinates - c.excluded;
  EXPECT_EQ(c.within_1e2, checked) << "worst " << c.worst;
}

TEST(GradRollout, NonFiniteReportsStep) {
  auto s = scenes::gradient_scene(5, false);
  s.params.log_k[3] = 700.0;
  try {
    grad_rollout(s.anchors, s.topology, s.params, s.observed, s.spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}
