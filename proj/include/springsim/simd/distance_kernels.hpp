#pragma once

// Data-parallel point-distance kernels shared by sampling, neighbor search and
// the Chamfer metric. Every ISA variant must return bit-identical results to
// the scalar reference: same operation order, no fused multiply-add, and the
// lowest index wins ties.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "springsim/types.hpp"

namespace springsim::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Structure-of-arrays copy of a point list, the layout the kernels stream.
struct PointsSoA {
  std::vector<double> x, y, z;

  PointsSoA() = default;
  explicit PointsSoA(std::span<const Vec3> points);

  std::size_t size() const { return x.size(); }
};

struct Nearest {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

struct KernelTable {
  Isa isa;
  /// out[i] = |p_i - q|^2
  void (*squared_distances)(const PointsSoA& pts, const Vec3& q, double* out);
  /// min_d2[i] = min(min_d2[i], |p_i - q|^2)
  void (*update_min_squared_distances)(const PointsSoA& pts, const Vec3& q,
                                       double* min_d2);
  /// Nearest point to q; requires pts non-empty.
  Nearest (*nearest)(const PointsSoA& pts, const Vec3& q);
  /// Index of the first maximum; requires n > 0.
  std::size_t (*argmax)(const double* values, std::size_t n);
};

bool isa_supported(Isa isa);

/// Table for a specific ISA. Throws Error if the CPU lacks it.
const KernelTable& kernels_for(Isa isa);

/// Best supported ISA, unless SPRINGSIM_SIMD=scalar is set in the environment.
const KernelTable& kernels();

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(SPRINGSIM_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace springsim::simd
