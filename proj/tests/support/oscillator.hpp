#pragma once

// Measurements on the two-mass scene shared by the dynamics tests and the
// acceptance suite.

#include <vector>

#include "scenes.hpp"

namespace scenes {

struct OscillatorTrace {
  std::vector<double> extension;  // separation - rest length, per step
  std::vector<double> energy;     // kinetic + elastic, per step
};

inline OscillatorTrace run_two_mass(const TwoMass& s, double dt, std::size_t steps) {
  OscillatorTrace trace;
  springsim::SimState st{s.positions, {Vec3::Zero(), Vec3::Zero()}, 0.0};
  const auto eta = springsim::soft_vector(s.params.kappa, 1, 1);
  const double k = s.params.stiffness(0);
  auto record = [&] {
    const double dl = (st.positions[1] - st.positions[0]).norm() - 1.0;
    const double ke = 0.5 * s.params.mass * (st.velocities[0].squaredNorm() + st.velocities[1].squaredNorm());
    trace.extension.push_back(dl);
    trace.energy.push_back(ke + spring_energy(k, dl, s.params.p_k));
  };
  record();
  for (std::size_t i = 0; i < steps; ++i) {
    st = springsim::step(st, s.topology, s.params, eta, dt);
    record();
  }
  return trace;
}

/// Times of upward zero crossings, linearly interpolated between samples.
inline std::vector<double> upward_crossings(const std::vector<double>& x, double dt) {
  std::vector<double> t;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] < 0.0 && x[i] >= 0.0) t.push_back(dt * (static_cast<double>(i - 1) + x[i - 1] / (x[i - 1] - x[i])));
  return t;
}

/// Maximum of x over each interval between consecutive upward crossings.
inline std::vector<double> cycle_peaks(const std::vector<double>& x) {
  std::vector<double> peaks;
  double cur = 0.0;
  bool started = false;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i - 1] < 0.0 && x[i] >= 0.0) {
      if (started) peaks.push_back(cur);
      started = true;
      cur = x[i];
    } else if (started) {
      cur = std::max(cur, x[i]);
    }
  }
  return peaks;
}

}  // namespace scenes
