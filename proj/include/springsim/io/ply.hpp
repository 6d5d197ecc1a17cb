#pragma once

#include <filesystem>

#include "springsim/geometry.hpp"

namespace springsim::io {

/// Reads vertex x/y/z (any numeric type), optional red/green/blue and
/// opacity. Accepts ascii and binary_little_endian files.
PointCloud load_ply(const std::filesystem::path& path);

/// Writes binary_little_endian: float x y z [uchar red green blue] [float opacity].
void save_ply(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace springsim::io
