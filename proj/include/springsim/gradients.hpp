#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "springsim/dynamics.hpp"
#include "springsim/trajectory.hpp"

namespace springsim {

/// d loss / d learnable parameters; stiffness is reported in log space.
struct ParamGradient {
  Vec3 v0 = Vec3::Zero();
  std::vector<double> log_k;
  double kappa = 0.0;
  double ground_height = 0.0;
  double friction_logit = 0.0;

  bool all_finite() const;
};

/// Flat layout shared by the optimizer and the finite-difference oracle:
/// [v0.x, v0.y, v0.z, log_k..., kappa, ground_height, friction_logit].
std::vector<double> flatten(const ParamGradient& g);
ParamGradient unflatten_gradient(std::span<const double> flat, std::size_t anchor_count);
std::vector<double> flatten_learnables(const PhysicalParams& p);
void assign_learnables(PhysicalParams& p, std::span<const double> flat);

enum class LossKind {
  Chamfer,         // mean per-keyframe symmetric Chamfer distance
  Correspondence,  // mean per-keyframe mean squared distance, point i to point i
};

struct LossSpec {
  LossKind kind = LossKind::Chamfer;
  double weight = 1.0;
  std::size_t n_t = 4;
};

/// Loss of a predicted trajectory against observations; the forward half of
/// grad_rollout.
double trajectory_loss_value(const Trajectory& predicted, const Trajectory& observed,
                             const LossSpec& spec);

struct GradResult {
  double loss = 0.0;
  ParamGradient gradient;
  /// Hash of every discrete branch the forward pass took (contacts,
  /// nearest-neighbor assignments, soft-vector clamps). Equal signatures mean
  /// the same smooth piece of the objective.
  std::uint64_t branch_signature = 0;
};

/// Rollout over observed.keyframes with spec.n_t substeps per interval,
/// then reverse-mode accumulation of the loss gradient.
GradResult grad_rollout(std::span<const Vec3> initial_positions,
                        const SpringTopology& topology, const PhysicalParams& params,
                        const Trajectory& observed, const LossSpec& spec);

/// Central differences of f around x, one coordinate at a time.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h);

/// Central-difference gradient of objective over the learnable parameters.
ParamGradient finite_diff_gradient(const std::function<double(const PhysicalParams&)>& objective,
                                   const PhysicalParams& params, double h);

}  // namespace springsim
