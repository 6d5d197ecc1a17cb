// Compiled with -mavx2 only (no -mfma): products and sums round exactly like
// the scalar reference.

#include <immintrin.h>

#include <limits>

#include "springsim/simd/distance_kernels.hpp"

namespace springsim::simd {
namespace {

inline __m256d d2_block(const PointsSoA& p, std::size_t i, __m256d qx,
                        __m256d qy, __m256d qz) {
  const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(p.x.data() + i), qx);
  const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(p.y.data() + i), qy);
  const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(p.z.data() + i), qz);
  return _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                       _mm256_mul_pd(dz, dz));
}

inline double d2_at(const PointsSoA& p, std::size_t i, const Vec3& q) {
  const double dx = p.x[i] - q.x();
  const double dy = p.y[i] - q.y();
  const double dz = p.z[i] - q.z();
  return dx * dx + dy * dy + dz * dz;
}

void squared_distances(const PointsSoA& pts, const Vec3& q, double* out) {
  const std::size_t n = pts.size();
  const __m256d qx = _mm256_set1_pd(q.x());
  const __m256d qy = _mm256_set1_pd(q.y());
  const __m256d qz = _mm256_set1_pd(q.z());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, d2_block(pts, i, qx, qy, qz));
  for (; i < n; ++i) out[i] = d2_at(pts, i, q);
}

void update_min_squared_distances(const PointsSoA& pts, const Vec3& q,
                                  double* min_d2) {
  const std::size_t n = pts.size();
  const __m256d qx = _mm256_set1_pd(q.x());
  const __m256d qy = _mm256_set1_pd(q.y());
  const __m256d qz = _mm256_set1_pd(q.z());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d2 = d2_block(pts, i, qx, qy, qz);
    // min_pd(a, b) == (a < b ? a : b), the scalar update rule.
    _mm256_storeu_pd(min_d2 + i, _mm256_min_pd(d2, _mm256_loadu_pd(min_d2 + i)));
  }
  for (; i < n; ++i) {
    const double d2 = d2_at(pts, i, q);
    if (d2 < min_d2[i]) min_d2[i] = d2;
  }
}

Nearest nearest(const PointsSoA& pts, const Vec3& q) {
  const std::size_t n = pts.size();
  const __m256d qx = _mm256_set1_pd(q.x());
  const __m256d qy = _mm256_set1_pd(q.y());
  const __m256d qz = _mm256_set1_pd(q.z());
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d2 = d2_block(pts, i, qx, qy, qz);
    const __m256d lt = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, d2, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    idx = _mm256_add_pd(idx, four);
  }
  alignas(32) double lane_val[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_val, best);
  _mm256_store_pd(lane_idx, best_idx);
  Nearest out{0, std::numeric_limits<double>::infinity()};
  for (int l = 0; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(lane_idx[l]);
    if (lane_val[l] < out.squared_distance ||
        (lane_val[l] == out.squared_distance && li < out.index))
      out = {li, lane_val[l]};
  }
  for (; i < n; ++i) {
    const double d2 = d2_at(pts, i, q);
    if (d2 < out.squared_distance) out = {i, d2};
  }
  return out;
}

std::size_t argmax(const double* values, std::size_t n) {
  __m256d best = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(values + i);
    const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, v, gt);
    best_idx = _mm256_blendv_pd(best_idx, idx, gt);
    idx = _mm256_add_pd(idx, four);
  }
  alignas(32) double lane_val[4];
  alignas(32) double lane_idx[4];
  _mm256_store_pd(lane_val, best);
  _mm256_store_pd(lane_idx, best_idx);
  std::size_t out = 0;
  double out_val = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (int l = 0; l < 4 && i >= 4; ++l) {
    const auto li = static_cast<std::size_t>(lane_idx[l]);
    if (!have || lane_val[l] > out_val || (lane_val[l] == out_val && li < out)) {
      out = li;
      out_val = lane_val[l];
      have = true;
    }
  }
  if (!have) {
    out = 0;
    out_val = values[0];
    i = 1;
  }
  for (; i < n; ++i)
    if (values[i] > out_val) {
      out = i;
      out_val = values[i];
    }
  return out;
}

}  // namespace

namespace detail {
const KernelTable kAvx2Kernels{Isa::Avx2, &squared_distances,
                               &update_min_squared_distances, &nearest, &argmax};
}  // namespace detail

}  // namespace springsim::simd
