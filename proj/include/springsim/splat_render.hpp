#pragma once

#include <optional>
#include <span>
#include <vector>

#include "springsim/image.hpp"
#include "springsim/types.hpp"

namespace springsim {

/// Isotropic Gaussian kernels: covariance scale^2 * I.
struct GaussianCloud {
  std::vector<Vec3> centers;
  std::vector<double> scales;
  std::vector<Vec3> colors;
  std::vector<double> opacities;

  std::size_t size() const { return centers.size(); }
  void validate() const;
};

/// Pinhole camera with a world-to-camera rigid transform (x_cam = R x + t).
/// Pixel (u, v) samples the image plane at coordinates (u, v).
struct Camera {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::size_t width = 0, height = 0;
  double near_plane = 0.01;

  void validate() const;
};

struct ProjectedGaussian {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();  // pixels
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // pixels^2, no low-pass
  double depth = 0.0;
  bool culled = false;
};

ProjectedGaussian project_gaussian(const Vec3& center, double scale, const Camera& camera);

inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kLowPassVariance = 0.3;
inline constexpr double kSupportSigmas = 3.0;

struct RasterOptions {
  std::size_t tile_size = 16;
  std::size_t threads = 1;
};

Image rasterize(const GaussianCloud& cloud, const Camera& camera, const Vec3& background,
                const RasterOptions& options = {});

/// Accumulated opacity 1 - T_final per pixel.
Image render_silhouette(const GaussianCloud& cloud, const Camera& camera,
                        const RasterOptions& options = {});

}  // namespace springsim
