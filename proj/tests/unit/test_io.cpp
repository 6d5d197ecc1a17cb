#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "../support/scenes.hpp"
#include "../support/tempdir.hpp"
#include "springsim/io/documents.hpp"
#include "springsim/io/ply.hpp"
#include "springsim/io/png.hpp"
#include "springsim/io/trajectory_io.hpp"

using namespace springsim;
namespace fs = std::filesystem;

namespace {

std::vector<Vec3> float_exact(std::vector<Vec3> pts) {
  for (auto& p : pts)
    for (int d = 0; d < 3; ++d) p[d] = static_cast<float>(p[d]);
  return pts;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Ply, BinaryRoundTripIsFloatExact) {
  scenes::TempDir dir("ply");
  PointCloud c = scenes::cloud(scenes::unit_cube(1000, 1));
  io::save_ply(c, dir / "c.ply");
  const auto back = io::load_ply(dir / "c.ply");
  EXPECT_EQ(back.positions, float_exact(c.positions));
  EXPECT_FALSE(back.colors.has_value());
  // Second round trip is exact.
  io::save_ply(back, dir / "d.ply");
  EXPECT_EQ(io::load_ply(dir / "d.ply").positions, back.positions);
}

TEST(Ply, ColorsAndOpacity) {
  scenes::TempDir dir("ply_attr");
  PointCloud c = scenes::cloud({Vec3(0, 0, 0), Vec3(1, 2, 3)});
  c.colors = std::vector<Vec3>{Vec3(1, 0, 0.5), Vec3(0.2, 0.4, 0.6)};
  c.opacities = std::vector<double>{0.25, 0.9};
  io::save_ply(c, dir / "c.ply");
  const auto back = io::load_ply(dir / "c.ply");
  ASSERT_TRUE(back.colors && back.opacities);
  for (std::size_t i = 0; i < 2; ++i) {
    for (int d = 0; d < 3; ++d) EXPECT_NEAR((*back.colors)[i][d], (*c.colors)[i][d], 0.5 / 255.0 + 1e-12);
    EXPECT_EQ((*back.opacities)[i], static_cast<float>((*c.opacities)[i]));
  }
}

TEST(Ply, AsciiMatchesBinary) {
  scenes::TempDir dir("ply_ascii");
  write_text(dir / "a.ply",
             "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
             "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
             "0.5 1.25 -2 255 0 51\n1 2 3 0 0 0\n-0.125 0 4 10 20 30\n3 0 1 2\n");
  const auto a = io::load_ply(dir / "a.ply");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.positions[0], Vec3(0.5, 1.25, -2));
  EXPECT_NEAR((*a.colors)[0].z(), 0.2, 1e-12);
  io::save_ply(a, dir / "b.ply");
  const auto b = io::load_ply(dir / "b.ply");
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(*a.colors, *b.colors);
}

TEST(Ply, MissingPropertyNamed) {
  scenes::TempDir dir("ply_bad");
  write_text(dir / "a.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n");
  try {
    io::load_ply(dir / "a.ply");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos) << e.what();
  }
}

TEST(Ply, MalformedInputsRejected) {
  scenes::TempDir dir("ply_bad2");
  write_text(dir / "a.ply", "not a ply\n");
  EXPECT_THROW(io::load_ply(dir / "a.ply"), Error);
  write_text(dir / "b.ply",
             "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
             "end_header\n1 2 3\n");
  EXPECT_THROW(io::load_ply(dir / "b.ply"), Error);
  write_text(dir / "c.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
             "end_header\n1 nan 3\n");
  EXPECT_THROW(io::load_ply(dir / "c.ply"), Error);
  EXPECT_THROW(io::load_ply(dir / "missing.ply"), Error);
}

TEST(TrajectoryIo, RoundTrip) {
  scenes::TempDir dir("traj");
  Trajectory t;
  t.frame_dt = 1.0 / 30.0;
  for (std::size_t f = 0; f < 3; ++f)
    t.keyframes.push_back({static_cast<double>(f) * t.frame_dt, scenes::cloud(float_exact(scenes::unit_cube(20, f)))});
  io::save_trajectory(t, dir.path());
  const auto manifest = io::read_json(dir / "manifest.json");
  EXPECT_EQ(manifest["format_version"], 1);
  EXPECT_EQ(manifest["units"], "m");
  EXPECT_EQ(manifest["n_frames"], 3);
  EXPECT_TRUE(fs::exists(dir.path() / "frames" / "frame_0002.ply"));
  const auto back = io::load_trajectory(dir.path());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(back.keyframes[f].time, t.keyframes[f].time);
    EXPECT_EQ(back.keyframes[f].cloud.positions, t.keyframes[f].cloud.positions);
  }
}

TEST(TrajectoryIo, TimesFromFps) {
  scenes::TempDir dir("traj_fps");
  Trajectory t;
  t.frame_dt = 1.0 / 30.0;
  for (std::size_t f = 0; f < 20; ++f)
    t.keyframes.push_back({static_cast<double>(f) / 30.0, scenes::cloud({Vec3(0, 0, 0)})});
  io::save_trajectory(t, dir.path());
  EXPECT_EQ(io::read_json(dir / "manifest.json")["fps"].get<double>(), 30.0);
  const auto back = io::load_trajectory(dir.path());
  for (std::size_t f = 0; f < 20; ++f) EXPECT_NEAR(back.keyframes[f].time, f / 30.0, 1e-15);
}

TEST(TrajectoryIo, MissingFrameNamed) {
  scenes::TempDir dir("traj_missing");
  Trajectory t;
  t.frame_dt = 0.1;
  for (std::size_t f = 0; f < 3; ++f) t.keyframes.push_back({0.1 * static_cast<double>(f), scenes::cloud({Vec3(0, 0, 0)})});
  io::save_trajectory(t, dir.path());
  fs::remove(io::frame_path(dir.path(), 1));
  try {
    io::load_trajectory(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("frame_0001.ply"), std::string::npos) << e.what();
  }
}

TEST(Png, RoundTripAndRounding) {
  scenes::TempDir dir("png");
  Image img(5, 4, 3);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& v : img.data) v = u(rng) / 255.0;
  img.data[0] = -0.3;  // clamps
  img.data[1] = 1.7;
  io::save_png(img, dir / "a.png");
  const auto back = io::load_png(dir / "a.png");
  ASSERT_EQ(back.width, 5u);
  ASSERT_EQ(back.height, 4u);
  EXPECT_EQ(back.data[0], 0.0);
  EXPECT_EQ(back.data[1], 1.0);
  for (std::size_t i = 2; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 1e-12);
  // Exact ties round to even: 0.5/255 -> 0, 1.5/255 -> 2.
  Image tie(2, 1, 1);
  tie.data = {0.5 / 255.0, 1.5 / 255.0};
  io::save_png(tie, dir / "t.png");
  const auto t = io::load_png(dir / "t.png");
  EXPECT_EQ(t.channels, 1u);
  EXPECT_EQ(t.data[0], 0.0);
  EXPECT_EQ(t.data[1], 2.0 / 255.0);
}

TEST(Documents, TopologyRoundTripAndTamperDetection) {
  const auto topo = build_topology(scenes::unit_cube(30, 2), 5);
  auto j = io::topology_to_json(topo);
  const auto back = io::topology_from_json(j);
  EXPECT_EQ(back.neighbors, topo.neighbors);
  EXPECT_EQ(back.rest_lengths, topo.rest_lengths);
  EXPECT_EQ(back.fingerprint(), topo.fingerprint());
  j["rest_lengths"][3][0] = j["rest_lengths"][3][0].get<double>() + 1e-3;
  EXPECT_THROW(io::topology_from_json(j), Error);
}

TEST(Documents, CheckpointRefusesOtherTopology) {
  const auto pts = scenes::unit_cube(30, 2);
  const auto topo = build_topology(pts, 5);
  io::ParamCheckpoint c;
  c.params = PhysicalParams::with_uniform_stiffness(30, 1234.0);
  c.params.v0 = Vec3(0.1, 0.2, 0.3);
  c.params.kappa = -0.7;
  c.params.boundary.sticky = true;
  c.n_k = 5;
  c.topology_fingerprint = topo.fingerprint();
  c.n_t = 16;
  const auto back = io::ParamCheckpoint::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.params.log_k, c.params.log_k);
  EXPECT_EQ(back.params.v0, c.params.v0);
  EXPECT_NO_THROW(back.check_topology(topo));
  EXPECT_THROW(back.check_topology(build_topology(pts, 4)), Error);
  auto moved = pts;
  moved[0].x() += 1e-6;
  EXPECT_THROW(back.check_topology(build_topology(moved, 5)), Error);
  EXPECT_EQ(c.to_json()["format_version"], 1);
}

TEST(Documents, ScenarioRoundTripAndValidation) {
  io::ScenarioConfig s;
  s.gravity = Vec3(0, 0, -4.9);
  s.ground.height = 0.2;
  s.ground.sticky = true;
  s.stiffness_scale = 2.0;
  s.v0_override = Vec3(1, 0, 0);
  const auto back = io::ScenarioConfig::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  s.fps = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s.fps = 30.0;
  s.stiffness_scale = -1.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Documents, ApplyScenario) {
  auto p = PhysicalParams::with_uniform_stiffness(3, 100.0);
  io::ScenarioConfig s;
  s.gravity = Vec3(0, 0, -4.9);
  s.stiffness_scale = 2.0;
  s.v0_override = Vec3(0, 1, 0);
  s.ground.height = -0.5;
  const auto q = io::apply_scenario(p, s);
  EXPECT_NEAR(q.stiffness(1), 200.0, 1e-9);
  EXPECT_EQ(q.gravity, s.gravity);
  EXPECT_EQ(q.v0, Vec3(0, 1, 0));
  EXPECT_EQ(q.boundary.height, -0.5);
}

TEST(Documents, CameraRoundTrip) {
  Camera c;
  c.fx = 500;
  c.fy = 510;
  c.cx = 320;
  c.cy = 240;
  c.width = 640;
  c.height = 480;
  c.rotation << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  c.translation = Vec3(0.1, 0.2, 3);
  const auto back = io::camera_from_json(io::camera_to_json(c));
  EXPECT_EQ(back.rotation, c.rotation);
  EXPECT_EQ(back.translation, c.translation);
  EXPECT_EQ(back.width, 640u);
}

TEST(Documents, IdentConfigRejectsUnknownKeys) {
  const auto cfg = io::ident_config_from_json(nlohmann::json{{"iterations", 12}, {"nt_max", 32}});
  EXPECT_EQ(cfg.iterations, 12u);
  EXPECT_EQ(cfg.nt_max, 32u);
  EXPECT_THROW(io::ident_config_from_json(nlohmann::json{{"iteratons", 12}}), Error);
}
