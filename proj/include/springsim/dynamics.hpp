#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "springsim/geometry.hpp"
#include "springsim/trajectory.hpp"

namespace springsim {

/// Ground plane z = height. Smooth contact zeroes the normal velocity and
/// scales the tangential velocity by (1 - sigmoid(friction_logit)); sticky
/// contact zeroes the whole velocity.
struct Boundary {
  double height = 0.0;
  double friction_logit = 0.0;
  bool sticky = false;
  bool enabled = true;

  double friction() const;
};

struct PhysicalParams {
  // Learnable.
  Vec3 v0 = Vec3::Zero();
  std::vector<double> log_k;  // per anchor
  double kappa = 0.0;
  Boundary boundary;

  // Fixed.
  double mass = 1.0;
  double damping = 0.1;  // zeta_0
  double p_k = 0.5;
  std::size_t n_c = 16;
  Vec3 gravity{0.0, 0.0, -9.8};

  /// Parameters with every anchor at the same stiffness.
  static PhysicalParams with_uniform_stiffness(std::size_t anchor_count, double k);

  double stiffness(std::size_t i) const { return std::exp(log_k[i]); }
  void validate(std::size_t anchor_count) const;
};

struct SimState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double time = 0.0;
};

/// Per-rank spring gate: 1 for the first n_c ranks, then decaying with kappa.
std::vector<double> soft_vector(double kappa, std::size_t n_c, std::size_t n_k);

double softplus(double x);
double sigmoid(double x);

/// Nonlinear spring force on x_i from the directed spring (i -> j).
Vec3 spring_force(const Vec3& x_i, const Vec3& x_j, double rest_length,
                  double stiffness, double eta, double p_k);

/// Axial damping force on x_i from the directed spring (i -> j).
Vec3 damping_force(const Vec3& x_i, const Vec3& x_j, const Vec3& v_i,
                   const Vec3& v_j, double damping);

/// Springs + damping + gravity for every anchor, neighbor slots summed in
/// stored order.
std::vector<Vec3> total_force(const SimState& state, const SpringTopology& topology,
                              const PhysicalParams& params, std::span<const double> eta);

struct BoundaryResult {
  Vec3 position;
  Vec3 velocity;
  bool contact = false;
};

BoundaryResult apply_boundary(const Vec3& position, const Vec3& velocity,
                              const Boundary& boundary);

/// One semi-implicit Euler step (velocity first), then the ground boundary.
SimState step(const SimState& state, const SpringTopology& topology,
              const PhysicalParams& params, std::span<const double> eta, double dt);

/// IDW placement of bound kernels using the onset distances.
std::vector<Vec3> interpolate_kernels(const BindingTable& binding,
                                      std::span<const Vec3> anchor_positions);

struct RolloutConfig {
  std::size_t n_keyframes = 2;
  std::size_t n_t = 4;     // substeps per keyframe interval
  double frame_dt = 1.0 / 30.0;
};

/// Keyframe anchor states starting from positions with every velocity = v0.
std::vector<SimState> rollout_states(std::span<const Vec3> initial_positions,
                                     const SpringTopology& topology,
                                     const PhysicalParams& params,
                                     const RolloutConfig& config);

Trajectory rollout(std::span<const Vec3> initial_positions, const SpringTopology& topology,
                   const PhysicalParams& params, const RolloutConfig& config);

namespace detail {

/// Writes per-anchor pre-boundary state and contact flags; shared by step()
/// and the reverse-mode tape so both run the same arithmetic.
void step_into(const SimState& state, const SpringTopology& topology,
               const PhysicalParams& params, std::span<const double> eta, double dt,
               SimState& out, std::vector<Vec3>* pre_velocity,
               std::vector<std::uint8_t>* contact);

}  // namespace detail

}  // namespace springsim
