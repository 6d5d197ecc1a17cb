#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "springsim/types.hpp"

namespace springsim {

/// Raw geometry: kernel centers or observed points, in meters.
struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<std::vector<Vec3>> colors;      // per point, in [0,1]
  std::optional<std::vector<double>> opacities;  // per point, in [0,1]

  std::size_t size() const { return positions.size(); }

  /// Throws Error on empty positions, non-finite values or mismatched
  /// attribute lengths.
  void validate() const;
};

struct AnchorSystem {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double mass = 1.0;

  std::size_t size() const { return positions.size(); }
  void validate() const;
};

/// Row-major N x k neighbor table with matching distances.
struct NeighborTable {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::int32_t> indices;
  std::vector<double> distances;

  std::int32_t index(std::size_t i, std::size_t j) const { return indices[i * k + j]; }
  double distance(std::size_t i, std::size_t j) const { return distances[i * k + j]; }
};

/// Directed KNN springs: neighbors of anchor i in ascending distance order,
/// rest lengths fixed at construction.
struct SpringTopology {
  std::size_t anchor_count = 0;
  std::size_t n_k = 0;
  std::vector<std::int32_t> neighbors;  // anchor_count * n_k
  std::vector<double> rest_lengths;     // anchor_count * n_k

  std::int32_t neighbor(std::size_t i, std::size_t j) const { return neighbors[i * n_k + j]; }
  double rest_length(std::size_t i, std::size_t j) const { return rest_lengths[i * n_k + j]; }

  /// FNV-1a over the neighbor table and the rest-length bit patterns.
  std::uint64_t fingerprint() const;
  void validate() const;
};

/// Kernel-to-anchor binding captured once, before any simulation step.
struct BindingTable {
  std::size_t kernel_count = 0;
  std::size_t n_b = 0;
  double p_b = 0.5;
  std::vector<std::int32_t> anchors;  // kernel_count * n_b
  std::vector<double> distances;      // kernel_count * n_b, clamped >= kMinBindingDistance
};

inline constexpr double kMinBindingDistance = 1e-8;

/// Farthest-point sampling over the cloud, starting at index seed % |points|.
AnchorSystem volume_sample(const PointCloud& points, std::size_t n_a,
                           std::uint64_t seed, double mass = 1.0);

/// Indices (into points) of a farthest-point sample; the building block of
/// volume_sample and of the EMD subsampling.
std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points,
                                                std::size_t count,
                                                std::uint64_t seed);

/// k nearest reference points per query, ascending distance, ties by index.
/// With exclude_self, query i is assumed to alias reference i and is skipped.
NeighborTable knn(std::span<const Vec3> query, std::span<const Vec3> reference,
                  std::size_t k, bool exclude_self = false);

SpringTopology build_topology(const AnchorSystem& anchors, std::size_t n_k);
SpringTopology build_topology(std::span<const Vec3> anchor_positions, std::size_t n_k);

BindingTable bind_kernels(const PointCloud& kernels, const AnchorSystem& anchors,
                          std::size_t n_b, double p_b);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace springsim
