#include "springsim/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "springsim/metrics.hpp"

namespace springsim {

bool ParamGradient::all_finite() const {
  if (!springsim::all_finite(v0) || !std::isfinite(kappa) || !std::isfinite(ground_height) ||
      !std::isfinite(friction_logit))
    return false;
  return std::all_of(log_k.begin(), log_k.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double> flatten(const ParamGradient& g) {
  std::vector<double> out{g.v0.x(), g.v0.y(), g.v0.z()};
  out.insert(out.end(), g.log_k.begin(), g.log_k.end());
  out.push_back(g.kappa);
  out.push_back(g.ground_height);
  out.push_back(g.friction_logit);
  return out;
}

ParamGradient unflatten_gradient(std::span<const double> flat, std::size_t anchor_count) {
  if (flat.size() != anchor_count + 6) throw Error("gradient vector has the wrong length");
  ParamGradient g;
  g.v0 = Vec3(flat[0], flat[1], flat[2]);
  g.log_k.assign(flat.begin() + 3, flat.begin() + 3 + static_cast<std::ptrdiff_t>(anchor_count));
  g.kappa = flat[3 + anchor_count];
  g.ground_height = flat[4 + anchor_count];
  g.friction_logit = flat[5 + anchor_count];
  return g;
}

std::vector<double> flatten_learnables(const PhysicalParams& p) {
  std::vector<double> out{p.v0.x(), p.v0.y(), p.v0.z()};
  out.insert(out.end(), p.log_k.begin(), p.log_k.end());
  out.push_back(p.kappa);
  out.push_back(p.boundary.height);
  out.push_back(p.boundary.friction_logit);
  return out;
}

void assign_learnables(PhysicalParams& p, std::span<const double> flat) {
  const std::size_t n = p.log_k.size();
  if (flat.size() != n + 6) throw Error("parameter vector has the wrong length");
  p.v0 = Vec3(flat[0], flat[1], flat[2]);
  std::copy(flat.begin() + 3, flat.begin() + 3 + static_cast<std::ptrdiff_t>(n), p.log_k.begin());
  p.kappa = flat[3 + n];
  p.boundary.height = flat[4 + n];
  p.boundary.friction_logit = flat[5 + n];
}

namespace {

void check_grids(const Trajectory& predicted, const Trajectory& observed) {
  if (predicted.size() != observed.size())
    throw Error("keyframe count mismatch: predicted " + std::to_string(predicted.size()) +
                ", observed " + std::to_string(observed.size()));
  if (predicted.size() == 0) throw Error("trajectory loss of an empty trajectory");
  for (std::size_t f = 0; f < predicted.size(); ++f)
    if (std::abs(predicted.keyframes[f].time - observed.keyframes[f].time) > 1e-9)
      throw Error("keyframe " + std::to_string(f) + " times differ");
}

double correspondence_mse(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.size() != b.size() || a.empty())
    throw Error("correspondence loss needs equal, non-empty point counts");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += squared_distance(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

// Per-frame loss; fills nearest-neighbor terms for the Chamfer case.
double frame_loss(std::span<const Vec3> pred, std::span<const Vec3> obs, LossKind kind,
                  metrics::ChamferTerms* terms) {
  if (kind == LossKind::Correspondence) return correspondence_mse(pred, obs);
  if (terms) {
    *terms = metrics::chamfer_terms(pred, obs);
    return terms->value;
  }
  return metrics::chamfer(pred, obs);
}

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void mix(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
};

}  // namespace

double trajectory_loss_value(const Trajectory& predicted, const Trajectory& observed,
                             const LossSpec& spec) {
  check_grids(predicted, observed);
  double sum = 0.0;
  for (std::size_t f = 0; f < predicted.size(); ++f)
    sum += frame_loss(predicted.keyframes[f].cloud.positions,
                      observed.keyframes[f].cloud.positions, spec.kind, nullptr);
  return spec.weight * (sum / static_cast<double>(predicted.size()));
}

GradResult grad_rollout(std::span<const Vec3> initial_positions,
                        const SpringTopology& topology, const PhysicalParams& params,
                        const Trajectory& observed, const LossSpec& spec) {
  observed.validate(1);
  if (spec.n_t < 1) throw Error("grad_rollout: n_t must be >= 1");
  const std::size_t n = topology.anchor_count;
  const std::size_t n_k = topology.n_k;
  const std::size_t frames = observed.size();
  const std::size_t n_t = spec.n_t;
  if (initial_positions.size() != n) throw Error("grad_rollout: anchor count mismatch");
  if (frames >= 2 && std::abs(observed.keyframes[0].time) > 1e-9)
    throw Error("grad_rollout: observations must start at t = 0");
  params.validate(n);

  const std::size_t n_c = std::min(params.n_c, n_k);
  const auto eta = soft_vector(params.kappa, n_c, n_k);
  const double frame_dt = frames >= 2 ? observed.frame_dt : 1.0;
  const double dt = frame_dt / static_cast<double>(n_t);
  const std::size_t steps = (frames - 1) * n_t;

  // Forward tape: every substep state, pre-boundary velocity and contact mask.
  std::vector<SimState> states(steps + 1);
  std::vector<std::vector<Vec3>> pre_velocity(steps + 1);
  std::vector<std::vector<std::uint8_t>> contact(steps + 1);
  states[0].positions.assign(initial_positions.begin(), initial_positions.end());
  states[0].velocities.assign(n, params.v0);
  Fnv sig;
  for (std::size_t s = 1; s <= steps; ++s) {
    try {
      detail::step_into(states[s - 1], topology, params, eta, dt, states[s], &pre_velocity[s],
                        &contact[s]);
    } catch (const Error& e) {
      throw Error("grad_rollout: step " + std::to_string(s) + ": " + e.what());
    }
    if (s % n_t == 0) states[s].time = static_cast<double>(s / n_t) * frame_dt;
    for (auto c : contact[s]) sig.mix(c);
  }
  for (std::size_t j = n_c; j < n_k; ++j) sig.mix(eta[j] == 0.0 ? 1 : 0);

  // Loss and its gradient w.r.t. each keyframe's positions.
  std::vector<std::vector<Vec3>> frame_grad(frames, std::vector<Vec3>(n, Vec3::Zero()));
  double sum = 0.0;
  const double frame_scale = spec.weight / static_cast<double>(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto& pred = states[f * n_t].positions;
    const auto& obs = observed.keyframes[f].cloud.positions;
    metrics::ChamferTerms terms;
    sum += frame_loss(pred, obs, spec.kind, &terms);
    if (spec.kind == LossKind::Chamfer) {
      metrics::accumulate_chamfer_gradient(pred, obs, terms, frame_scale, frame_grad[f]);
      for (auto i : terms.nearest_in_b) sig.mix(i);
      for (auto i : terms.nearest_in_a) sig.mix(i);
    } else {
      const double w = 2.0 * frame_scale / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) frame_grad[f][i] += w * (pred[i] - obs[i]);
    }
  }

  GradResult result;
  result.loss = spec.weight * (sum / static_cast<double>(frames));
  result.branch_signature = sig.h;
  if (!std::isfinite(result.loss)) throw Error("grad_rollout: non-finite loss");

  ParamGradient& g = result.gradient;
  g.log_k.assign(n, 0.0);
  std::vector<double> d_eta(n_k, 0.0);
  double d_friction = 0.0;

  std::vector<Vec3> ax(n, Vec3::Zero()), av(n, Vec3::Zero());
  std::vector<Vec3> ax_prev(n), av_prev(n), a_force(n);
  const double mu = params.boundary.friction();
  const double keep = 1.0 - mu;
  const double inv_mass = 1.0 / params.mass;

  for (std::size_t s = steps; s >= 1; --s) {
    if (s % n_t == 0) {
      const auto& fg = frame_grad[s / n_t];
      for (std::size_t i = 0; i < n; ++i) ax[i] += fg[i];
    }
    const SimState& prev = states[s - 1];
    // Boundary, position update and velocity update, per anchor.
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 ax_hat = ax[i];
      Vec3 av_hat = av[i];
      if (contact[s][i]) {
        g.ground_height += ax[i].z();
        ax_hat.z() = 0.0;
        if (params.boundary.sticky) {
          av_hat = Vec3::Zero();
        } else {
          const Vec3& vh = pre_velocity[s][i];
          d_friction -= av[i].x() * vh.x() + av[i].y() * vh.y();
          av_hat = Vec3(keep * av[i].x(), keep * av[i].y(), 0.0);
        }
      }
      // x_hat = x + v_hat dt ; v_hat = v + F/m dt
      av_hat += ax_hat * dt;
      ax_prev[i] = ax_hat;
      av_prev[i] = av_hat;
    }
    // Force VJP: a_F = av_hat * dt / m.
    for (std::size_t i = 0; i < n; ++i) a_force[i] = av_prev[i] * (dt * inv_mass);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& a = a_force[i];
      if (a.x() == 0.0 && a.y() == 0.0 && a.z() == 0.0) continue;
      const double k_i = params.stiffness(i);
      const Vec3& xi = prev.positions[i];
      const Vec3& vi = prev.velocities[i];
      for (std::size_t j = 0; j < n_k; ++j) {
        const auto nb = static_cast<std::size_t>(topology.neighbor(i, j));
        const double l = topology.rest_length(i, j);
        const Vec3 d = xi - prev.positions[nb];
        const double r = std::sqrt(dot3(d, d));
        if (r == 0.0) continue;
        const Vec3 u = d / r;
        const double dl = r - l;
        const double pw = std::pow(std::abs(dl), params.p_k);
        const double stretch = dl * pw;
        const double d_stretch = (1.0 + params.p_k) * pw;
        const double k_ij = k_i / l;
        const double zeta = params.damping / l;
        const double au = dot3(a, u);
        const Vec3 a_perp = a - au * u;

        // Spring.
        g.log_k[i] += -(eta[j] * k_ij * stretch) * au;
        d_eta[j] += -(k_ij * stretch) * au;
        Vec3 gd = -eta[j] * k_ij * (d_stretch * au * u + (stretch / r) * a_perp);

        // Damping.
        const Vec3 w = vi - prev.velocities[nb];
        const double wu = dot3(w, u);
        const Vec3 aw = -zeta * au * u;
        av_prev[i] += aw;
        av_prev[nb] -= aw;
        gd += (-zeta / r) * (au * (w - wu * u) + wu * a_perp);

        ax_prev[i] += gd;
        ax_prev[nb] -= gd;
      }
    }
    std::swap(ax, ax_prev);
    std::swap(av, av_prev);
  }

  for (std::size_t i = 0; i < n; ++i) g.v0 += av[i];

  // eta_j = clamp(2 - exp(softplus(kappa))^m, 0, 1), m = j - n_c (1-based j).
  const double base = std::exp(softplus(params.kappa));
  const double dsp = sigmoid(params.kappa);
  for (std::size_t j = n_c; j < n_k; ++j) {
    const double m = static_cast<double>(j + 1 - n_c);
    const double raw = 2.0 - std::pow(base, m);
    if (raw < 0.0 || raw > 1.0) continue;
    g.kappa += d_eta[j] * (-m * std::pow(base, m) * dsp);
  }
  g.friction_logit = d_friction * mu * (1.0 - mu);

  if (!g.all_finite()) throw Error("grad_rollout: non-finite gradient");
  return result;
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h) {
  if (!(h > 0.0)) throw Error("central_difference: h must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    out[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

ParamGradient finite_diff_gradient(const std::function<double(const PhysicalParams&)>& objective,
                                   const PhysicalParams& params, double h) {
  const auto x = flatten_learnables(params);
  PhysicalParams probe = params;
  auto f = [&](std::span<const double> flat) {
    assign_learnables(probe, flat);
    return objective(probe);
  };
  return unflatten_gradient(central_difference(f, x, h), params.log_k.size());
}

}  // namespace springsim
