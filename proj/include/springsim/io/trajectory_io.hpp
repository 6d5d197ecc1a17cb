#pragma once

#include <filesystem>

#include "springsim/trajectory.hpp"

namespace springsim::io {

inline constexpr int kTrajectoryFormatVersion = 1;

/// dir/manifest.json {fps, n_frames, dt, units:"m", format_version} and
/// dir/frames/frame_%04d.ply.
void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& dir);
Trajectory load_trajectory(const std::filesystem::path& dir);

std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t frame);

}  // namespace springsim::io
