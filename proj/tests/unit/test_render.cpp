#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <random>

#include "../support/camera.hpp"
#include "../support/scenes.hpp"
#include "springsim/splat_render.hpp"

using namespace springsim;

namespace {

GaussianCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianCloud g;
  for (std::size_t i = 0; i < n; ++i) {
    g.centers.emplace_back(u(rng) - 0.5, u(rng) - 0.5, 1.5 + u(rng));
    g.scales.push_back(0.01 + 0.05 * u(rng));
    // Colors drawn from {red, green}; background blue spans a simplex.
    g.colors.push_back(u(rng) < 0.5 ? Vec3(1, 0, 0) : Vec3(0, 1, 0));
    g.opacities.push_back(u(rng));
  }
  // A few exact depth ties.
  g.centers[1].z() = g.centers[0].z();
  g.centers[2].z() = g.centers[0].z();
  return g;
}

}  // namespace

TEST(Project, OnAxisCovariance) {
  const auto cam = scenes::axis_camera();
  const auto p = project_gaussian(Vec3(0, 0, 2.0), 0.05, cam);
  EXPECT_FALSE(p.culled);
  EXPECT_EQ(p.mean, Eigen::Vector2d(cam.cx, cam.cy));
  EXPECT_NEAR(p.covariance(0, 0), std::pow(80.0 * 0.05 / 2.0, 2), 1e-12);
  EXPECT_NEAR(p.covariance(1, 1), std::pow(80.0 * 0.05 / 2.0, 2), 1e-12);
  EXPECT_NEAR(p.covariance(0, 1), 0.0, 1e-15);
  const auto far = project_gaussian(Vec3(0, 0, 4.0), 0.05, cam);
  EXPECT_NEAR(std::sqrt(far.covariance(0, 0)), 0.5 * std::sqrt(p.covariance(0, 0)), 1e-12);
}

TEST(Project, BehindNearPlaneCulled) {
  EXPECT_TRUE(project_gaussian(Vec3(0, 0, -1.0), 0.05, scenes::axis_camera()).culled);
  EXPECT_TRUE(project_gaussian(Vec3(0, 0, 0.001), 0.05, scenes::axis_camera()).culled);
}

TEST(Project, RotatedCameraMatchesJacobianFormula) {
  auto cam = scenes::axis_camera();
  cam.rotation = Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  cam.translation = Vec3(0.1, -0.2, 3.0);
  const Vec3 x(0.2, 0.1, 0.4);
  const auto p = project_gaussian(x, 0.03, cam);
  const Vec3 c = cam.rotation * x + cam.translation;
  Eigen::Matrix<double, 2, 3> J;
  J << cam.fx / c.z(), 0, -cam.fx * c.x() / (c.z() * c.z()), 0, cam.fy / c.z(), -cam.fy * c.y() / (c.z() * c.z());
  const Eigen::Matrix2d expect = J * cam.rotation * (0.03 * 0.03 * Mat3::Identity()) * cam.rotation.transpose() * J.transpose();
  EXPECT_LT((p.covariance - expect).norm(), 1e-12);
}

TEST(Rasterize, EmptyIsBackground) {
  const auto cam = scenes::axis_camera();
  const Vec3 bg(0.2, 0.4, 0.6);
  const auto img = rasterize(GaussianCloud{}, cam, bg);
  for (std::size_t y = 0; y < cam.height; ++y)
    for (std::size_t x = 0; x < cam.width; ++x)
      for (int c = 0; c < 3; ++c) ASSERT_EQ(img.at(x, y, c), bg[c]);
  const auto sil = render_silhouette(GaussianCloud{}, cam);
  for (double v : sil.data) ASSERT_EQ(v, 0.0);
}

TEST(Rasterize, SingleKernelCenterPixel) {
  const auto cam = scenes::axis_camera();
  const Vec3 bg(0.2, 0.4, 0.6);
  const auto img = rasterize(scenes::single_kernel(Vec3(0, 0, 2), 0.05, Vec3(1, 0, 0), 0.99), cam, bg);
  const Vec3 expect = 0.99 * Vec3(1, 0, 0) + 0.01 * bg;
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(32, 24, c), expect[c], 1e-6);
}

TEST(Rasterize, OpaqueFrontKernelHidesBackKernel) {
  const auto cam = scenes::axis_camera();
  GaussianCloud g = scenes::single_kernel(Vec3(0, 0, 3), 0.05, Vec3(0, 1, 0), 1.0);
  g.centers.push_back(Vec3(0.001, 0, 2));
  g.scales.push_back(0.05);
  g.colors.push_back(Vec3(1, 0, 0));
  g.opacities.push_back(1.0);
  const auto img = rasterize(g, cam, Vec3::Zero());
  EXPECT_LT(img.at(32, 24, 1), 0.015);
  EXPECT_GT(img.at(32, 24, 0), 0.98);
  const auto sil = render_silhouette(g, cam);
  EXPECT_GE(sil.at(32, 24, 0), 0.99);
}

TEST(Rasterize, CompositingIsConvex) {
  const auto cam = scenes::axis_camera();
  const auto img = rasterize(random_cloud(300, 1), cam, Vec3(0, 0, 1));
  for (std::size_t p = 0; p < cam.width * cam.height; ++p) {
    const double r = img.data[3 * p], g = img.data[3 * p + 1], b = img.data[3 * p + 2];
    ASSERT_GE(r, 0.0);
    ASSERT_GE(g, 0.0);
    ASSERT_GE(b, 0.0);
    ASSERT_NEAR(r + g + b, 1.0, 1e-12);
  }
}

TEST(Rasterize, TilingAndThreadsDoNotChangeOutput) {
  const auto cam = scenes::axis_camera(70, 53);
  const auto cloud = random_cloud(200, 2);
  const auto ref = rasterize(cloud, cam, Vec3(0.1, 0.1, 0.1));
  for (RasterOptions o : {RasterOptions{1, 1}, RasterOptions{7, 3}, RasterOptions{64, 2}, RasterOptions{16, 4}}) {
    EXPECT_EQ(rasterize(cloud, cam, Vec3(0.1, 0.1, 0.1), o).data, ref.data);
    EXPECT_EQ(render_silhouette(cloud, cam, o).data, render_silhouette(cloud, cam).data);
  }
}

TEST(Silhouette, BoundedAndMonotone) {
  const auto cam = scenes::axis_camera();
  auto cloud = random_cloud(150, 3);
  auto before = render_silhouette(cloud, cam);
  for (double v : before.data) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    cloud.centers.emplace_back(u(rng) - 0.5, u(rng) - 0.5, 1.0 + 2.0 * u(rng));
    cloud.scales.push_back(0.02 + 0.05 * u(rng));
    cloud.colors.push_back(Vec3(0, 1, 0));
    cloud.opacities.push_back(u(rng));
    const auto after = render_silhouette(cloud, cam);
    for (std::size_t i = 0; i < after.data.size(); ++i) ASSERT_GE(after.data[i], before.data[i]);
    before = after;
  }
}
