#pragma once

#include <vector>

#include "springsim/geometry.hpp"

namespace springsim {

struct Keyframe {
  double time = 0.0;  // seconds
  PointCloud cloud;
};

/// Time-stamped keyframe clouds, uniformly spaced by frame_dt. Units: meters.
struct Trajectory {
  std::vector<Keyframe> keyframes;
  double frame_dt = 0.0;

  std::size_t size() const { return keyframes.size(); }

  /// Strictly increasing times, uniform spacing within 1e-9 s.
  /// min_frames lets the dynamics layer accept single-frame rollouts.
  void validate(std::size_t min_frames = 2) const;
};

}  // namespace springsim
