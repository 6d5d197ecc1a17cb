#include "springsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace springsim {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double Boundary::friction() const { return sigmoid(friction_logit); }

PhysicalParams PhysicalParams::with_uniform_stiffness(std::size_t anchor_count, double k) {
  PhysicalParams p;
  p.log_k.assign(anchor_count, std::log(k));
  return p;
}

void PhysicalParams::validate(std::size_t anchor_count) const {
  if (log_k.size() != anchor_count)
    throw Error("stiffness count " + std::to_string(log_k.size()) +
                " does not match anchor count " + std::to_string(anchor_count));
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error("mass must be positive");
  if (!(p_k >= 0.0)) throw Error("p_k must be non-negative");
  if (!(damping >= 0.0)) throw Error("damping must be non-negative");
  if (!all_finite(v0) || !all_finite(gravity)) throw Error("non-finite v0 or gravity");
  for (double lk : log_k)
    if (!std::isfinite(lk)) throw Error("non-finite log stiffness");
  if (!std::isfinite(kappa)) throw Error("non-finite kappa");
}

std::vector<double> soft_vector(double kappa, std::size_t n_c, std::size_t n_k) {
  if (n_c < 1 || n_c > n_k) throw Error("soft_vector requires 1 <= n_c <= n_k");
  std::vector<double> eta(n_k, 1.0);
  const double base = std::exp(softplus(kappa));
  for (std::size_t j = n_c + 1; j <= n_k; ++j) {
    const double v = 2.0 - std::pow(base, static_cast<double>(j - n_c));
    eta[j - 1] = std::clamp(v, 0.0, 1.0);
  }
  return eta;
}

namespace {

// sign(dl) * |dl|^(1+p)
inline double stretch_term(double dl, double p_k) {
  return dl * std::pow(std::abs(dl), p_k);
}

}  // namespace

Vec3 spring_force(const Vec3& x_i, const Vec3& x_j, double rest_length,
                  double stiffness, double eta, double p_k) {
  const Vec3 d = x_i - x_j;
  const double r = std::sqrt(dot3(d, d));
  if (r == 0.0) return Vec3::Zero();
  const Vec3 u = d / r;
  const double s = stretch_term(r - rest_length, p_k);
  return (-(eta * stiffness * s)) * u;
}

Vec3 damping_force(const Vec3& x_i, const Vec3& x_j, const Vec3& v_i,
                   const Vec3& v_j, double damping) {
  const Vec3 d = x_i - x_j;
  const double r = std::sqrt(dot3(d, d));
  if (r == 0.0) return Vec3::Zero();
  const Vec3 u = d / r;
  const Vec3 w = v_i - v_j;
  return (-(damping * dot3(w, u))) * u;
}

namespace {

void accumulate_forces(const SimState& state, const SpringTopology& topology,
                       const PhysicalParams& params, std::span<const double> eta,
                       std::vector<Vec3>& forces) {
  const std::size_t n = topology.anchor_count;
  const std::size_t n_k = topology.n_k;
  const Vec3 weight = params.mass * params.gravity;
  forces.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double k_i = params.stiffness(i);
    const Vec3& xi = state.positions[i];
    const Vec3& vi = state.velocities[i];
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < n_k; ++j) {
      const auto nb = static_cast<std::size_t>(topology.neighbor(i, j));
      const double l = topology.rest_length(i, j);
      const Vec3 d = xi - state.positions[nb];
      const double r = std::sqrt(dot3(d, d));
      if (r == 0.0) continue;
      const Vec3 u = d / r;
      const double s = stretch_term(r - l, params.p_k);
      acc += (-(eta[j] * (k_i / l) * s)) * u;
      const Vec3 w = vi - state.velocities[nb];
      acc += (-((params.damping / l) * dot3(w, u))) * u;
    }
    forces[i] = acc + weight;
  }
}

}  // namespace

std::vector<Vec3> total_force(const SimState& state, const SpringTopology& topology,
                              const PhysicalParams& params, std::span<const double> eta) {
  if (state.positions.size() != topology.anchor_count ||
      state.velocities.size() != topology.anchor_count)
    throw Error("state size does not match topology");
  if (eta.size() != topology.n_k) throw Error("soft vector length must equal n_k");
  std::vector<Vec3> forces;
  accumulate_forces(state, topology, params, eta, forces);
  return forces;
}

BoundaryResult apply_boundary(const Vec3& position, const Vec3& velocity,
                              const Boundary& boundary) {
  BoundaryResult out{position, velocity, false};
  if (!boundary.enabled || !(position.z() < boundary.height)) return out;
  out.contact = true;
  out.position.z() = boundary.height;
  if (boundary.sticky) {
    out.velocity = Vec3::Zero();
  } else {
    const double keep = 1.0 - boundary.friction();
    out.velocity = Vec3(velocity.x() * keep, velocity.y() * keep, 0.0);
  }
  return out;
}

namespace detail {

void step_into(const SimState& state, const SpringTopology& topology,
               const PhysicalParams& params, std::span<const double> eta, double dt,
               SimState& out, std::vector<Vec3>* pre_velocity,
               std::vector<std::uint8_t>* contact) {
  if (!(dt > 0.0)) throw Error("step: dt must be positive");
  thread_local std::vector<Vec3> forces;
  accumulate_forces(state, topology, params, eta, forces);
  const std::size_t n = topology.anchor_count;
  out.positions.resize(n);
  out.velocities.resize(n);
  if (pre_velocity) pre_velocity->resize(n);
  if (contact) contact->resize(n);
  const double inv_mass = 1.0 / params.mass;
  for (std::size_t i = 0; i < n; ++i) {
    if (!all_finite(forces[i]))
      throw Error("non-finite force on anchor " + std::to_string(i));
    const Vec3 v_hat = state.velocities[i] + (forces[i] * inv_mass) * dt;
    const Vec3 x_hat = state.positions[i] + v_hat * dt;
    const auto b = apply_boundary(x_hat, v_hat, params.boundary);
    out.positions[i] = b.position;
    out.velocities[i] = b.velocity;
    if (pre_velocity) (*pre_velocity)[i] = v_hat;
    if (contact) (*contact)[i] = b.contact ? 1 : 0;
  }
  out.time = state.time + dt;
}

}  // namespace detail

SimState step(const SimState& state, const SpringTopology& topology,
              const PhysicalParams& params, std::span<const double> eta, double dt) {
  if (state.positions.size() != topology.anchor_count ||
      state.velocities.size() != topology.anchor_count)
    throw Error("state size does not match topology");
  if (eta.size() != topology.n_k) throw Error("soft vector length must equal n_k");
  SimState out;
  detail::step_into(state, topology, params, eta, dt, out, nullptr, nullptr);
  return out;
}

std::vector<Vec3> interpolate_kernels(const BindingTable& binding,
                                      std::span<const Vec3> anchor_positions) {
  std::vector<Vec3> out(binding.kernel_count);
  std::vector<double> w(binding.n_b);
  for (std::size_t i = 0; i < binding.kernel_count; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < binding.n_b; ++j) {
      w[j] = 1.0 / std::pow(binding.distances[i * binding.n_b + j], binding.p_b);
      den += w[j];
    }
    // Normalized first so a single anchor or equal weights reproduce positions exactly.
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < binding.n_b; ++j) {
      const auto a = static_cast<std::size_t>(binding.anchors[i * binding.n_b + j]);
      if (a >= anchor_positions.size())
        throw Error("binding references anchor " + std::to_string(a) + " out of range");
      acc += anchor_positions[a] * (w[j] / den);
    }
    out[i] = acc;
  }
  return out;
}

std::vector<SimState> rollout_states(std::span<const Vec3> initial_positions,
                                     const SpringTopology& topology,
                                     const PhysicalParams& params,
                                     const RolloutConfig& config) {
  if (config.n_t < 1) throw Error("rollout: n_t must be >= 1");
  if (config.n_keyframes < 1) throw Error("rollout: need at least one keyframe");
  if (!(config.frame_dt > 0.0)) throw Error("rollout: frame interval must be positive");
  if (initial_positions.size() != topology.anchor_count)
    throw Error("rollout: anchor count does not match topology");
  params.validate(topology.anchor_count);

  const auto eta = soft_vector(params.kappa, std::min(params.n_c, topology.n_k), topology.n_k);
  const double dt = config.frame_dt / static_cast<double>(config.n_t);

  std::vector<SimState> frames;
  frames.reserve(config.n_keyframes);
  SimState cur;
  cur.positions.assign(initial_positions.begin(), initial_positions.end());
  cur.velocities.assign(initial_positions.size(), params.v0);
  cur.time = 0.0;
  frames.push_back(cur);
  SimState next;
  for (std::size_t f = 1; f < config.n_keyframes; ++f) {
    for (std::size_t s = 0; s < config.n_t; ++s) {
      detail::step_into(cur, topology, params, eta, dt, next, nullptr, nullptr);
      std::swap(cur, next);
    }
    cur.time = static_cast<double>(f) * config.frame_dt;
    frames.push_back(cur);
  }
  return frames;
}

Trajectory rollout(std::span<const Vec3> initial_positions, const SpringTopology& topology,
                   const PhysicalParams& params, const RolloutConfig& config) {
  Trajectory traj;
  traj.frame_dt = config.frame_dt;
  for (auto& s : rollout_states(initial_positions, topology, params, config))
    traj.keyframes.push_back({s.time, PointCloud{std::move(s.positions), {}, {}}});
  return traj;
}

}  // namespace springsim
