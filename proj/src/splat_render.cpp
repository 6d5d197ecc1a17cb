#include "springsim/splat_render.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace springsim {

void GaussianCloud::validate() const {
  const std::size_t n = centers.size();
  if (scales.size() != n || colors.size() != n || opacities.size() != n)
    throw Error("gaussian cloud attribute counts differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!all_finite(centers[i]) || !all_finite(colors[i]) || !std::isfinite(scales[i]) ||
        !std::isfinite(opacities[i]))
      throw Error("gaussian " + std::to_string(i) + " has non-finite attributes");
    if (!(scales[i] > 0.0)) throw Error("gaussian " + std::to_string(i) + " has scale <= 0");
  }
}

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera focal lengths must be positive");
  if (width == 0 || height == 0) throw Error("camera image size must be positive");
  const Mat3 should_be_identity = rotation.transpose() * rotation;
  if (!should_be_identity.isApprox(Mat3::Identity(), 1e-6) || rotation.determinant() < 0.0)
    throw Error("camera rotation is not a proper rotation");
}

ProjectedGaussian project_gaussian(const Vec3& center, double scale, const Camera& camera) {
  ProjectedGaussian out;
  const Vec3 p = camera.rotation * center + camera.translation;
  out.depth = p.z();
  if (!(p.z() > camera.near_plane)) {
    out.culled = true;
    return out;
  }
  const double inv_z = 1.0 / p.z();
  out.mean = {camera.fx * p.x() * inv_z + camera.cx, camera.fy * p.y() * inv_z + camera.cy};
  Eigen::Matrix<double, 2, 3> jac;
  jac << camera.fx * inv_z, 0.0, -camera.fx * p.x() * inv_z * inv_z,
         0.0, camera.fy * inv_z, -camera.fy * p.y() * inv_z * inv_z;
  // Sigma' = J W Sigma W^T J^T with Sigma = s^2 I, so W drops out.
  const Eigen::Matrix<double, 2, 3> jw = jac * camera.rotation;
  out.covariance = (scale * scale) * (jw * jw.transpose());
  return out;
}

namespace {

struct Splat {
  Eigen::Vector2d mean;
  double inv_a, inv_b, inv_c;  // conic: [[a, b], [b, c]]
  double opacity;
  Vec3 color;
  long x0, x1, y0, y1;  // inclusive pixel bounds of the 3-sigma support
};

std::vector<Splat> prepare(const GaussianCloud& cloud, const Camera& camera) {
  cloud.validate();
  camera.validate();
  struct Entry {
    double depth;
    std::size_t index;
    ProjectedGaussian proj;
  };
  std::vector<Entry> visible;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto proj = project_gaussian(cloud.centers[i], cloud.scales[i], camera);
    if (!proj.culled) visible.push_back({proj.depth, i, proj});
  }
  std::sort(visible.begin(), visible.end(), [](const Entry& a, const Entry& b) {
    return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
  });
  std::vector<Splat> splats;
  splats.reserve(visible.size());
  for (const auto& e : visible) {
    Eigen::Matrix2d cov = e.proj.covariance;
    cov(0, 0) += kLowPassVariance;
    cov(1, 1) += kLowPassVariance;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    if (!(det > 0.0)) continue;
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = kSupportSigmas * std::sqrt(lambda_max);
    Splat s;
    s.mean = e.proj.mean;
    s.inv_a = cov(1, 1) / det;
    s.inv_b = -cov(0, 1) / det;
    s.inv_c = cov(0, 0) / det;
    s.opacity = cloud.opacities[e.index];
    s.color = cloud.colors[e.index];
    s.x0 = static_cast<long>(std::ceil(s.mean.x() - radius));
    s.x1 = static_cast<long>(std::floor(s.mean.x() + radius));
    s.y0 = static_cast<long>(std::ceil(s.mean.y() - radius));
    s.y1 = static_cast<long>(std::floor(s.mean.y() + radius));
    if (s.x1 < 0 || s.y1 < 0 || s.x0 >= static_cast<long>(camera.width) ||
        s.y0 >= static_cast<long>(camera.height))
      continue;
    splats.push_back(s);
  }
  return splats;
}

struct PixelResult {
  Vec3 color;
  double transmittance;
};

// The silhouette skips the early-out: stopping at a transmittance threshold
// lets a kernel added in front raise the final T, so coverage would not be
// monotone in the kernel set.
PixelResult composite(const std::vector<const Splat*>& list, double px, double py,
                      bool early_out) {
  Vec3 c = Vec3::Zero();
  double t = 1.0;
  for (const Splat* s : list) {
    const double dx = px - s->mean.x();
    const double dy = py - s->mean.y();
    const double maha = s->inv_a * dx * dx + 2.0 * s->inv_b * dx * dy + s->inv_c * dy * dy;
    if (maha > kSupportSigmas * kSupportSigmas) continue;
    const double alpha = std::min(kMaxAlpha, s->opacity * std::exp(-0.5 * maha));
    c += (t * alpha) * s->color;
    t *= 1.0 - alpha;
    if (early_out && t < kMinTransmittance) break;
  }
  return {c, t};
}

// Renders every tile; per-pixel work depends only on the sorted splat list,
// so tiling and threading cannot change the output.
template <class WritePixel>
void render_tiles(const std::vector<Splat>& splats, const Camera& camera,
                  const RasterOptions& options, bool early_out, WritePixel write) {
  const std::size_t tile = std::max<std::size_t>(1, options.tile_size);
  const std::size_t tiles_x = (camera.width + tile - 1) / tile;
  const std::size_t tiles_y = (camera.height + tile - 1) / tile;
  const std::size_t tile_count = tiles_x * tiles_y;

  auto render_tile = [&](std::size_t t) {
    const long tx0 = static_cast<long>((t % tiles_x) * tile);
    const long ty0 = static_cast<long>((t / tiles_x) * tile);
    const long tx1 = std::min<long>(tx0 + static_cast<long>(tile), static_cast<long>(camera.width)) - 1;
    const long ty1 = std::min<long>(ty0 + static_cast<long>(tile), static_cast<long>(camera.height)) - 1;
    std::vector<const Splat*> list;
    for (const auto& s : splats)
      if (s.x1 >= tx0 && s.x0 <= tx1 && s.y1 >= ty0 && s.y0 <= ty1) list.push_back(&s);
    for (long y = ty0; y <= ty1; ++y)
      for (long x = tx0; x <= tx1; ++x)
        write(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
              composite(list, static_cast<double>(x), static_cast<double>(y), early_out));
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, tile_count));
  if (threads == 1) {
    for (std::size_t t = 0; t < tile_count; ++t) render_tile(t);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < tile_count; t += threads) render_tile(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

Image rasterize(const GaussianCloud& cloud, const Camera& camera, const Vec3& background,
                const RasterOptions& options) {
  const auto splats = prepare(cloud, camera);
  Image img(camera.width, camera.height, 3);
  render_tiles(splats, camera, options, true, [&](std::size_t x, std::size_t y, const PixelResult& r) {
    const Vec3 c = r.color + r.transmittance * background;
    for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = c[ch];
  });
  return img;
}

Image render_silhouette(const GaussianCloud& cloud, const Camera& camera,
                        const RasterOptions& options) {
  const auto splats = prepare(cloud, camera);
  Image img(camera.width, camera.height, 1);
  render_tiles(splats, camera, options, false, [&](std::size_t x, std::size_t y, const PixelResult& r) {
    img.at(x, y, 0) = 1.0 - r.transmittance;
  });
  return img;
}

}  // namespace springsim
