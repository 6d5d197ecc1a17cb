#include "springsim/identification.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

namespace springsim {

void IdentConfig::validate() const {
  if (iterations == 0) throw Error("identify: iterations must be positive");
  if (nt_initial < 1 || nt_max < nt_initial) throw Error("identify: invalid n_t range");
  if (nt_growth < 1) throw Error("identify: n_t growth factor must be >= 1");
  if (plateau_window < 1) throw Error("identify: plateau window must be >= 1");
  if (!(initial_k > 0.0)) throw Error("identify: initial stiffness must be positive");
}

double trajectory_loss(const Trajectory& predicted, const Trajectory& observed) {
  return trajectory_loss_value(predicted, observed, LossSpec{LossKind::Chamfer, 1.0, 1});
}

Vec3 estimate_v0(const Trajectory& observed, std::size_t n_pre, const Vec3& gravity) {
  if (n_pre < 2) throw Error("estimate_v0: need at least 2 pre-stage frames");
  if (n_pre > observed.size())
    throw Error("estimate_v0: n_pre=" + std::to_string(n_pre) + " exceeds the " +
                std::to_string(observed.size()) + " available frames");
  const double t0 = observed.keyframes[0].time;
  const Vec3 c0 = centroid(observed.keyframes[0].cloud.positions);
  Vec3 num = Vec3::Zero();
  double den = 0.0;
  for (std::size_t f = 1; f < n_pre; ++f) {
    const double t = observed.keyframes[f].time - t0;
    const Vec3 c = centroid(observed.keyframes[f].cloud.positions);
    num += t * (c - c0 - 0.5 * t * t * gravity);
    den += t * t;
  }
  if (!(den > 0.0)) throw Error("estimate_v0: pre-stage frames span zero time");
  return num / den;
}

std::size_t substep_schedule(std::span<const double> loss_history, std::size_t current_n_t,
                             const IdentConfig& config) {
  if (current_n_t >= config.nt_max) return current_n_t;
  if (loss_history.size() < config.plateau_window || config.plateau_window < 2)
    return current_n_t;
  const double start = loss_history[loss_history.size() - config.plateau_window];
  const double end = loss_history.back();
  const double scale = std::max(std::abs(start), std::numeric_limits<double>::min());
  const double improvement = (start - end) / scale;
  if (improvement >= config.plateau_threshold) return current_n_t;
  return std::min(config.nt_max, current_n_t * config.nt_growth);
}

namespace {

double loss_at(std::span<const Vec3> anchors, const SpringTopology& topology,
               const PhysicalParams& params, const Trajectory& observed, std::size_t n_t) {
  RolloutConfig rc{observed.size(), n_t, observed.frame_dt};
  return trajectory_loss(rollout(anchors, topology, params, rc), observed);
}

}  // namespace

IdentResult identify(std::span<const Vec3> anchors, const SpringTopology& topology,
                     const Trajectory& observed, const IdentConfig& config) {
  config.validate();
  observed.validate(2);
  const std::size_t n = topology.anchor_count;
  if (anchors.size() != n) throw Error("identify: anchor count does not match topology");

  PhysicalParams params = config.base;
  params.log_k.assign(n, std::log(config.initial_k));
  params.kappa = 0.0;
  params.v0 = config.initial_v0 ? *config.initial_v0
                                : estimate_v0(observed, config.n_pre, params.gravity);
  params.validate(n);

  IdentResult result;
  result.initial_params = params;

  // Per-coordinate learning rates in the flat layout; 0 freezes a coordinate.
  std::vector<double> lr(n + 6, 0.0);
  for (int c = 0; c < 3; ++c) lr[c] = config.refine_v0 ? config.lr_v0 : 0.0;
  for (std::size_t i = 0; i < n; ++i) lr[3 + i] = config.lr_log_k;
  lr[3 + n] = config.learn_kappa ? config.lr_kappa : 0.0;
  lr[4 + n] = config.learn_ground_height ? config.lr_boundary : 0.0;
  lr[5 + n] = config.learn_friction ? config.lr_boundary : 0.0;

  Adam adam(n + 6, config.adam);
  auto flat = flatten_learnables(params);

  std::size_t n_t = config.nt_initial;
  PhysicalParams best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> stage_losses;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    GradResult gr;
    try {
      gr = grad_rollout(anchors, topology, params, observed, LossSpec{LossKind::Chamfer, 1.0, n_t});
    } catch (const Error& e) {
      throw Error("identify diverged at iteration " + std::to_string(it) + ": " + e.what());
    }
    if (!std::isfinite(gr.loss))
      throw Error("identify diverged at iteration " + std::to_string(it) + ": loss is NaN");
    result.history.push_back({it, gr.loss, n_t});
    if (gr.loss < best_loss) {
      best_loss = gr.loss;
      best = params;
    }

    auto grad = flatten(gr.gradient);
    if (config.single_global_k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += grad[3 + i];
      for (std::size_t i = 0; i < n; ++i) grad[3 + i] = total;
    }
    adam.step(flat, grad, lr);
    assign_learnables(params, flat);

    stage_losses.push_back(gr.loss);
    const std::size_t next_n_t = substep_schedule(stage_losses, n_t, config);
    if (next_n_t != n_t) {
      n_t = next_n_t;
      stage_losses.clear();
      // Losses at different substep counts are not comparable; re-rank.
      best_loss = loss_at(anchors, topology, best, observed, n_t);
      const double init_loss = loss_at(anchors, topology, result.initial_params, observed, n_t);
      if (init_loss < best_loss) {
        best_loss = init_loss;
        best = result.initial_params;
      }
    }
  }

  // The last update was never scored.
  try {
    if (const double last = loss_at(anchors, topology, params, observed, n_t);
        std::isfinite(last) && last < best_loss) {
      best_loss = last;
      best = params;
    }
  } catch (const Error&) {
    // An unstable final update is simply not a candidate.
  }

  result.params = best;
  result.best_loss = best_loss;
  result.final_n_t = n_t;
  result.initial_loss = loss_at(anchors, topology, result.initial_params, observed, n_t);
  return result;
}

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const IterationRecord> history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write loss history to " + path.string());
  out << "iteration,loss,n_t\n";
  out << std::setprecision(17);
  for (const auto& r : history) out << r.iteration << ',' << r.loss << ',' << r.n_t << '\n';
}

}  // namespace springsim
