#include "springsim/trajectory.hpp"

#include <cmath>
#include <string>

namespace springsim {

void Trajectory::validate(std::size_t min_frames) const {
  if (keyframes.size() < min_frames)
    throw Error("trajectory needs at least " + std::to_string(min_frames) +
                " keyframes, got " + std::to_string(keyframes.size()));
  if (keyframes.size() >= 2 && !(frame_dt > 0.0))
    throw Error("trajectory frame interval must be positive");
  for (std::size_t f = 0; f < keyframes.size(); ++f) {
    keyframes[f].cloud.validate();
    if (f == 0) continue;
    const double gap = keyframes[f].time - keyframes[f - 1].time;
    if (!(gap > 0.0)) throw Error("keyframe times must be strictly increasing");
    if (std::abs(gap - frame_dt) > 1e-9)
      throw Error("keyframe " + std::to_string(f) + " breaks uniform spacing");
  }
}

}  // namespace springsim
