#include <limits>

#include "springsim/simd/distance_kernels.hpp"

namespace springsim::simd {
namespace {

inline double d2_at(const PointsSoA& p, std::size_t i, double qx, double qy,
                    double qz) {
  const double dx = p.x[i] - qx;
  const double dy = p.y[i] - qy;
  const double dz = p.z[i] - qz;
  return dx * dx + dy * dy + dz * dz;
}

void squared_distances(const PointsSoA& pts, const Vec3& q, double* out) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = d2_at(pts, i, q.x(), q.y(), q.z());
}

void update_min_squared_distances(const PointsSoA& pts, const Vec3& q,
                                  double* min_d2) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = d2_at(pts, i, q.x(), q.y(), q.z());
    if (d2 < min_d2[i]) min_d2[i] = d2;
  }
}

Nearest nearest(const PointsSoA& pts, const Vec3& q) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 = d2_at(pts, i, q.x(), q.y(), q.z());
    if (d2 < best.squared_distance) best = {i, d2};
  }
  return best;
}

std::size_t argmax(const double* values, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace

namespace detail {
const KernelTable kScalarKernels{Isa::Scalar, &squared_distances,
                                 &update_min_squared_distances, &nearest,
                                 &argmax};
}  // namespace detail

}  // namespace springsim::simd
