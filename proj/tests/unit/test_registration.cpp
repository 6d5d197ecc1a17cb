#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <numbers>
#include <random>

#include "../support/scenes.hpp"
#include "springsim/registration.hpp"

using namespace springsim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Similarity make_similarity(double scale, const Mat3& r, const Vec3& t) {
  Similarity s;
  s.scale = scale;
  s.translation = t;
  s.rot6d = {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
  return s;
}

void expect_recovered(const Similarity& got, const Similarity& truth) {
  EXPECT_NEAR(got.scale, truth.scale, 1e-3);
  EXPECT_LT(rotation_geodesic(got.rotation(), truth.rotation()), 0.5 * kDeg);
  EXPECT_LT((got.translation - truth.translation).norm(), 1e-3);
}

}  // namespace

TEST(Rot6d, IdentityAndScaleInvariance) {
  EXPECT_EQ(rot6d_to_matrix({1, 0, 0, 0, 1, 0}), Mat3::Identity());
  EXPECT_EQ(rot6d_to_matrix({2, 0, 0, 0, 3, 0}), Mat3::Identity());
}

TEST(Rot6d, OrthonormalOnRandomInput) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int t = 0; t < 1000; ++t) {
    const Rot6 r{n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)};
    const Mat3 m = rot6d_to_matrix(r);
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
  }
}

TEST(Rot6d, DegenerateThrows) {
  EXPECT_THROW(rot6d_to_matrix({0, 0, 0, 0, 1, 0}), Error);
  EXPECT_THROW(rot6d_to_matrix({1, 0, 0, 2, 0, 0}), Error);
}

TEST(Rot6d, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int t = 0; t < 20; ++t) {
    Rot6 r{n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)};
    Mat3 w;
    for (int i = 0; i < 9; ++i) w.data()[i] = n(rng);
    const auto g = rot6d_backward(r, w);
    for (int i = 0; i < 6; ++i) {
      const double x = r[i], h = 1e-6;
      r[i] = x + h;
      const double fp = (rot6d_to_matrix(r).cwiseProduct(w)).sum();
      r[i] = x - h;
      const double fm = (rot6d_to_matrix(r).cwiseProduct(w)).sum();
      r[i] = x;
      EXPECT_NEAR(g[i], (fp - fm) / (2 * h), 1e-7);
    }
  }
}

TEST(Similarity, ApplyExamplesAndInverse) {
  const std::vector<Vec3> p{Vec3(1, 1, 1)};
  EXPECT_EQ(apply_similarity(Similarity{}, p)[0], Vec3(1, 1, 1));
  const auto s = make_similarity(2.0, Mat3::Identity(), Vec3(1, 0, 0));
  EXPECT_EQ(apply_similarity(s, p)[0], Vec3(3, 2, 2));

  const auto t = make_similarity(1.7, Eigen::AngleAxisd(0.7, Vec3(1, -2, 0.5).normalized()).toRotationMatrix(),
                                 Vec3(0.3, -0.1, 2.0));
  const auto pts = scenes::unit_cube(100, 3);
  const auto back = apply_similarity(t.inverse(), apply_similarity(t, pts));
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((back[i] - pts[i]).norm(), 1e-12);
}

TEST(Similarity, JsonRoundTrip) {
  const auto t = make_similarity(1.3, Eigen::AngleAxisd(0.2, Vec3::UnitZ()).toRotationMatrix(), Vec3(1, 2, 3));
  const auto j = t.to_json();
  EXPECT_TRUE(j.contains("scale") && j.contains("translation") && j.contains("rot6d"));
  const auto u = Similarity::from_json(j);
  EXPECT_EQ(u.scale, t.scale);
  EXPECT_EQ(u.translation, t.translation);
  EXPECT_EQ(u.rot6d, t.rot6d);
}

TEST(Register, IdentityFixedPoint) {
  const auto src = scenes::cloud(scenes::lumpy_ellipsoid(600, 1));
  const auto r = register_clouds(src, src);
  expect_recovered(r.transform, Similarity{});
  EXPECT_LE(r.final_loss, r.initial_loss);
}

TEST(Register, RecoversKnownSimilarity) {
  const auto src = scenes::cloud(scenes::lumpy_ellipsoid(600, 2));
  const auto truth = make_similarity(1.3, Eigen::AngleAxisd(20 * kDeg, Vec3(0.3, 1, -0.2).normalized()).toRotationMatrix(),
                                     Vec3(0.1, -0.2, 0.05));
  const auto r = register_clouds(src, scenes::cloud(apply_similarity(truth, src.positions)));
  expect_recovered(r.transform, truth);
  EXPECT_LT(r.final_loss, 1e-6);
}

TEST(Register, OutliersBarelyMoveTranslation) {
  const auto base = scenes::lumpy_ellipsoid(500, 3);
  const auto truth = make_similarity(1.1, Eigen::AngleAxisd(10 * kDeg, Vec3::UnitZ()).toRotationMatrix(), Vec3(0.2, 0.1, -0.1));
  const auto clean = apply_similarity(truth, base);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto target = clean;
    // 1% uniform outliers in the target's bounding box.
    Vec3 lo = clean[0], hi = clean[0];
    for (const auto& p : clean) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const auto extra = scenes::uniform_box(clean.size() / 100, seed, lo, hi);
    target.insert(target.end(), extra.begin(), extra.end());
    RegistrationConfig cfg;
    cfg.iterations = 200;
    const auto r = register_clouds(scenes::cloud(base), scenes::cloud(target), cfg);
    EXPECT_LT((r.transform.translation - truth.translation).norm(), 5e-3) << "seed " << seed;
  }
}

TEST(Register, ReturnedLossNeverWorseThanStart) {
  const auto src = scenes::cloud(scenes::lumpy_ellipsoid(300, 4));
  const auto dst = scenes::cloud(scenes::unit_cube(300, 5));
  RegistrationConfig cfg;
  cfg.iterations = 50;
  const auto r = register_clouds(src, dst, cfg);
  EXPECT_LE(r.final_loss, r.initial_loss);
  EXPECT_EQ(r.final_loss, registration_loss(r.transform, src.positions, dst.positions, cfg));
}
