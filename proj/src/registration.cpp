#include "springsim/registration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "springsim/metrics.hpp"
#include "springsim/optim.hpp"

namespace springsim {

Mat3 rot6d_to_matrix(const Rot6& r) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  if (!(n1 > 1e-12)) throw Error("rot6d: first vector is degenerate");
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (!(n2 > 1e-12 * std::max(1.0, a2.norm())))
    throw Error("rot6d: second vector is parallel to the first");
  const Vec3 b2 = u2 / n2;
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

Rot6 rot6d_backward(const Rot6& r, const Mat3& grad_rotation) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  const Vec3 b2 = u2 / n2;
  const Vec3 g1 = grad_rotation.col(0), g2 = grad_rotation.col(1), g3 = grad_rotation.col(2);

  Vec3 gb1 = g1 + b2.cross(g3);
  const Vec3 gb2 = g2 + g3.cross(b1);
  const Vec3 gu2 = (gb2 - b2.dot(gb2) * b2) / n2;
  const Vec3 ga2 = gu2 - b1.dot(gu2) * b1;
  gb1 -= b1.dot(a2) * gu2 + b1.dot(gu2) * a2;
  const Vec3 ga1 = (gb1 - b1.dot(gb1) * b1) / n1;
  return {ga1.x(), ga1.y(), ga1.z(), ga2.x(), ga2.y(), ga2.z()};
}

Mat3 Similarity::rotation() const { return rot6d_to_matrix(rot6d); }

Similarity Similarity::inverse() const {
  const Mat3 rt = rotation().transpose();
  Similarity inv;
  inv.scale = 1.0 / scale;
  inv.translation = -(rt * translation) / scale;
  inv.rot6d = {rt(0, 0), rt(1, 0), rt(2, 0), rt(0, 1), rt(1, 1), rt(2, 1)};
  return inv;
}

nlohmann::json Similarity::to_json() const {
  return {{"format_version", 1},
          {"scale", scale},
          {"translation", {translation.x(), translation.y(), translation.z()}},
          {"rot6d", rot6d}};
}

Similarity Similarity::from_json(const nlohmann::json& j) {
  Similarity s;
  s.scale = j.at("scale").get<double>();
  const auto t = j.at("translation").get<std::vector<double>>();
  const auto r = j.at("rot6d").get<std::vector<double>>();
  if (t.size() != 3 || r.size() != 6) throw Error("similarity JSON has malformed arrays");
  if (!(s.scale > 0.0)) throw Error("similarity scale must be positive");
  s.translation = Vec3(t[0], t[1], t[2]);
  std::copy(r.begin(), r.end(), s.rot6d.begin());
  rot6d_to_matrix(s.rot6d);
  return s;
}

std::vector<Vec3> apply_similarity(const Similarity& t, std::span<const Vec3> points) {
  const Mat3 rot = t.rotation();
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    // Rotated first into a named value, exactly as the optimizer's forward pass.
    const Vec3 rotated = rot * p;
    out.push_back(t.scale * rotated + t.translation);
  }
  return out;
}

double rotation_geodesic(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

namespace {

struct LossAndGrad {
  double loss = 0.0;
  double d_log_scale = 0.0;
  Vec3 d_translation = Vec3::Zero();
  Rot6 d_rot6d{};
};

LossAndGrad evaluate(const Similarity& t, std::span<const Vec3> source,
                     std::span<const Vec3> target, const Vec3& target_centroid,
                     const RegistrationConfig& config) {
  const Mat3 rot = t.rotation();
  std::vector<Vec3> rotated(source.size());
  std::vector<Vec3> moved(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    rotated[i] = rot * source[i];
    moved[i] = t.scale * rotated[i] + t.translation;
  }
  const auto terms = metrics::chamfer_terms(moved, target);
  const Vec3 c = centroid(moved);
  const Vec3 dc = c - target_centroid;

  LossAndGrad out;
  out.loss = config.chamfer_weight * terms.value + config.center_weight * dc.squaredNorm();

  std::vector<Vec3> grad(source.size(), Vec3::Zero());
  metrics::accumulate_chamfer_gradient(moved, target, terms, config.chamfer_weight, grad);
  const Vec3 center_grad = (2.0 * config.center_weight / static_cast<double>(source.size())) * dc;
  Mat3 grad_rot = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 g = grad[i] + center_grad;
    out.d_translation += g;
    out.d_log_scale += t.scale * g.dot(rotated[i]);
    grad_rot += t.scale * g * source[i].transpose();
  }
  out.d_rot6d = rot6d_backward(t.rot6d, grad_rot);
  return out;
}

Vec3 bbox_extent(std::span<const Vec3> pts) {
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return hi - lo;
}

}  // namespace

double registration_loss(const Similarity& t, std::span<const Vec3> source,
                         std::span<const Vec3> target, const RegistrationConfig& config) {
  const auto moved = apply_similarity(t, source);
  const Vec3 dc = centroid(moved) - centroid(target);
  return config.chamfer_weight * metrics::chamfer(moved, target) +
         config.center_weight * dc.squaredNorm();
}

RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target,
                                   const RegistrationConfig& config) {
  source.validate();
  target.validate();
  if (config.iterations == 0) throw Error("register: iterations must be positive");
  const auto& src = source.positions;
  const auto& tgt = target.positions;
  const Vec3 tgt_centroid = centroid(tgt);

  Similarity t;
  const double src_diag = bbox_extent(src).norm();
  const double tgt_diag = bbox_extent(tgt).norm();
  t.scale = (src_diag > 0.0 && tgt_diag > 0.0) ? tgt_diag / src_diag : 1.0;
  t.translation = tgt_centroid - t.scale * centroid(src);

  // Flat layout: [log s, t(3), r(6)].
  std::vector<double> x{std::log(t.scale), t.translation.x(), t.translation.y(),
                        t.translation.z()};
  x.insert(x.end(), t.rot6d.begin(), t.rot6d.end());
  auto unpack = [](std::span<const double> v) {
    Similarity s;
    s.scale = std::exp(v[0]);
    s.translation = Vec3(v[1], v[2], v[3]);
    std::copy(v.begin() + 4, v.end(), s.rot6d.begin());
    return s;
  };

  Adam adam(x.size());
  std::vector<double> lr(x.size());
  const double decay =
      std::pow(config.final_lr_fraction, 1.0 / static_cast<double>(config.iterations));

  RegistrationResult result;
  result.transform = t;
  double best = std::numeric_limits<double>::infinity();
  double rate = config.learning_rate;
  for (std::size_t it = 0; it <= config.iterations; ++it) {
    const Similarity cur = unpack(x);
    const auto lg = evaluate(cur, src, tgt, tgt_centroid, config);
    if (!std::isfinite(lg.loss))
      throw Error("register diverged at iteration " + std::to_string(it));
    if (it == 0) result.initial_loss = lg.loss;
    if (lg.loss < best) {
      best = lg.loss;
      result.transform = cur;
    }
    if (it == config.iterations) break;
    std::vector<double> g{lg.d_log_scale, lg.d_translation.x(), lg.d_translation.y(),
                          lg.d_translation.z()};
    g.insert(g.end(), lg.d_rot6d.begin(), lg.d_rot6d.end());
    std::fill(lr.begin(), lr.end(), rate);
    adam.step(x, g, lr);
    rate *= decay;
  }
  result.final_loss = best;
  return result;
}

}  // namespace springsim
