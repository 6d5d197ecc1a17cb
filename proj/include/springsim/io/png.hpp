#pragma once

#include <filesystem>

#include "springsim/image.hpp"

namespace springsim::io {

/// 8-bit PNG; samples are clamped to [0,1] and rounded half-to-even.
void save_png(const Image& image, const std::filesystem::path& path);
Image load_png(const std::filesystem::path& path);

}  // namespace springsim::io
