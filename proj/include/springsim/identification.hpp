#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "springsim/dynamics.hpp"
#include "springsim/gradients.hpp"
#include "springsim/optim.hpp"
#include "springsim/trajectory.hpp"

namespace springsim {

struct IdentConfig {
  std::size_t iterations = 300;

  double lr_log_k = 1e-2;
  double lr_kappa = 1e-2;
  double lr_boundary = 1e-3;
  double lr_v0 = 1e-3;
  AdamConfig adam;

  // Substep schedule: n_t doubles (up to nt_max) once the relative loss
  // improvement across plateau_window iterations drops below the threshold.
  std::size_t nt_initial = 4;
  std::size_t nt_growth = 2;
  std::size_t plateau_window = 20;
  double plateau_threshold = 1e-3;
  std::size_t nt_max = 64;

  std::size_t n_pre = 3;  // contact-free frames for the v0 pre-stage
  std::uint64_t seed = 0;

  double initial_k = 1000.0;
  bool single_global_k = false;  // tie every k_i (ablation)
  bool refine_v0 = true;
  bool learn_kappa = true;
  bool learn_friction = true;
  bool learn_ground_height = false;

  /// Skip the pre-stage and start from this v0.
  std::optional<Vec3> initial_v0;

  /// Fixed constants (mass, damping, p_k, n_c, gravity) and the starting
  /// boundary; log_k, kappa and v0 are overwritten by the initialization.
  PhysicalParams base;

  void validate() const;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double loss = 0.0;
  std::size_t n_t = 0;
};

struct IdentResult {
  PhysicalParams params;               // best-loss parameters
  PhysicalParams initial_params;
  double initial_loss = 0.0;           // at final_n_t
  double best_loss = 0.0;              // at final_n_t
  std::size_t final_n_t = 0;
  std::vector<IterationRecord> history;
};

/// Mean per-keyframe symmetric Chamfer distance (m^2).
double trajectory_loss(const Trajectory& predicted, const Trajectory& observed);

/// Closed-form least-squares initial velocity from the centroids of the first
/// n_pre keyframes under constant gravity.
Vec3 estimate_v0(const Trajectory& observed, std::size_t n_pre,
                 const Vec3& gravity = Vec3(0.0, 0.0, -9.8));

/// Next substep count given the losses recorded since n_t last changed.
std::size_t substep_schedule(std::span<const double> loss_history, std::size_t current_n_t,
                             const IdentConfig& config);

/// Staged parameter identification: v0 pre-stage, then Adam on the
/// learnables against the Chamfer trajectory loss with the substep schedule.
IdentResult identify(std::span<const Vec3> anchors, const SpringTopology& topology,
                     const Trajectory& observed, const IdentConfig& config);

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const IterationRecord> history);

}  // namespace springsim
