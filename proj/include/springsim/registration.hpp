#pragma once

#include <array>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "springsim/geometry.hpp"

namespace springsim {

using Rot6 = std::array<double, 6>;

/// p' = scale * R(rot6d) * p + translation
struct Similarity {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();
  Rot6 rot6d{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  Mat3 rotation() const;
  Similarity inverse() const;

  nlohmann::json to_json() const;
  static Similarity from_json(const nlohmann::json& j);
};

/// Gram-Schmidt on the two 3-vectors; columns (b1, b2, b1 x b2).
Mat3 rot6d_to_matrix(const Rot6& r);

/// Vector-Jacobian product of rot6d_to_matrix: d loss / d r given d loss / d R.
Rot6 rot6d_backward(const Rot6& r, const Mat3& grad_rotation);

std::vector<Vec3> apply_similarity(const Similarity& t, std::span<const Vec3> points);

/// Rotation angle between two rotation matrices, radians.
double rotation_geodesic(const Mat3& a, const Mat3& b);

struct RegistrationConfig {
  std::size_t iterations = 500;
  double learning_rate = 1e-2;
  /// Learning rate decays geometrically to learning_rate * final_lr_fraction.
  double final_lr_fraction = 1e-2;
  double chamfer_weight = 1.0;
  double center_weight = 1.0;
};

struct RegistrationResult {
  Similarity transform;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

double registration_loss(const Similarity& t, std::span<const Vec3> source,
                         std::span<const Vec3> target, const RegistrationConfig& config);

RegistrationResult register_clouds(const PointCloud& source, const PointCloud& target,
                                   const RegistrationConfig& config = {});

}  // namespace springsim
