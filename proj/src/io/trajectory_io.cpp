#include "springsim/io/trajectory_io.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "springsim/io/ply.hpp"

namespace springsim::io {

std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%04zu.ply", frame);
  return dir / "frames" / name;
}

void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& dir) {
  trajectory.validate(1);
  if (!(trajectory.frame_dt > 0.0)) throw Error("save_trajectory: frame interval must be positive");
  std::filesystem::create_directories(dir / "frames");
  nlohmann::json manifest{{"format_version", kTrajectoryFormatVersion},
                          {"fps", 1.0 / trajectory.frame_dt},
                          {"dt", trajectory.frame_dt},
                          {"n_frames", trajectory.size()},
                          {"units", "m"}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error((dir / "manifest.json").string() + ": cannot write manifest");
  out << manifest.dump(2) << '\n';
  for (std::size_t f = 0; f < trajectory.size(); ++f)
    save_ply(trajectory.keyframes[f].cloud, frame_path(dir, f));
}

Trajectory load_trajectory(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(manifest_path.string() + ": missing trajectory manifest");
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  const int version = m.value("format_version", 0);
  if (version != kTrajectoryFormatVersion)
    throw Error(manifest_path.string() + ": unsupported format_version " + std::to_string(version));
  if (m.value("units", std::string("m")) != "m")
    throw Error(manifest_path.string() + ": only meter units are supported");
  const auto n_frames = m.at("n_frames").get<std::size_t>();
  double dt;
  if (m.contains("dt")) dt = m.at("dt").get<double>();
  else dt = 1.0 / m.at("fps").get<double>();
  if (!(dt > 0.0)) throw Error(manifest_path.string() + ": frame interval must be positive");

  Trajectory traj;
  traj.frame_dt = dt;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto p = frame_path(dir, f);
    if (!std::filesystem::exists(p))
      throw Error("trajectory manifest lists " + std::to_string(n_frames) + " frames but " +
                  p.string() + " is missing");
    traj.keyframes.push_back({static_cast<double>(f) * dt, load_ply(p)});
  }
  if (std::filesystem::exists(frame_path(dir, n_frames)))
    throw Error(dir.string() + ": more frame files than the manifest's n_frames=" +
                std::to_string(n_frames));
  return traj;
}

}  // namespace springsim::io
