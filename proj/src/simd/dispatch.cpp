#include <cstdlib>
#include <string>

#include "springsim/simd/distance_kernels.hpp"

namespace springsim::simd {

PointsSoA::PointsSoA(std::span<const Vec3> points) {
  x.reserve(points.size());
  y.reserve(points.size());
  z.reserve(points.size());
  for (const auto& p : points) {
    x.push_back(p.x());
    y.push_back(p.y());
    z.push_back(p.z());
  }
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(SPRINGSIM_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa))
    throw Error("SIMD kernels for " + std::string(isa_name(isa)) +
                " are not available on this CPU/build");
#if defined(SPRINGSIM_HAVE_AVX2)
  if (isa == Isa::Avx2) return detail::kAvx2Kernels;
#endif
  return detail::kScalarKernels;
}

namespace {
const KernelTable& select_kernels() {
  if (const char* env = std::getenv("SPRINGSIM_SIMD"); env && std::string(env) == "scalar")
    return detail::kScalarKernels;
  if (isa_supported(Isa::Avx2)) return kernels_for(Isa::Avx2);
  return detail::kScalarKernels;
}
}  // namespace

const KernelTable& kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace springsim::simd
