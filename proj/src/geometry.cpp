#include "springsim/geometry.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <string>

#include "springsim/simd/distance_kernels.hpp"

namespace springsim {

void PointCloud::validate() const {
  if (positions.empty()) throw Error("point cloud is empty");
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (!all_finite(positions[i]))
      throw Error("point " + std::to_string(i) + " has a non-finite coordinate");
  if (colors && colors->size() != positions.size())
    throw Error("color count does not match point count");
  if (opacities && opacities->size() != positions.size())
    throw Error("opacity count does not match point count");
}

void AnchorSystem::validate() const {
  if (positions.size() < 2) throw Error("an anchor system needs at least 2 anchors");
  if (velocities.size() != positions.size())
    throw Error("anchor velocity count does not match position count");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error("anchor mass must be positive");
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (!all_finite(positions[i]) || !all_finite(velocities[i]))
      throw Error("anchor " + std::to_string(i) + " has a non-finite state");
}

std::uint64_t SpringTopology::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(anchor_count);
  mix(n_k);
  for (auto n : neighbors) mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)));
  for (double l : rest_lengths) mix(std::bit_cast<std::uint64_t>(l));
  return h;
}

void SpringTopology::validate() const {
  if (neighbors.size() != anchor_count * n_k || rest_lengths.size() != anchor_count * n_k)
    throw Error("spring topology tables have inconsistent sizes");
  for (std::size_t i = 0; i < anchor_count; ++i)
    for (std::size_t j = 0; j < n_k; ++j) {
      const auto n = neighbor(i, j);
      if (n < 0 || static_cast<std::size_t>(n) >= anchor_count)
        throw Error("spring neighbor index out of range at anchor " + std::to_string(i));
      if (static_cast<std::size_t>(n) == i)
        throw Error("spring self-loop at anchor " + std::to_string(i));
      if (!(rest_length(i, j) > 0.0))
        throw Error("non-positive rest length at anchor " + std::to_string(i));
    }
}

std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points,
                                                std::size_t count,
                                                std::uint64_t seed) {
  if (points.size() < count)
    throw Error("farthest-point sampling needs at least " + std::to_string(count) +
                " points, got " + std::to_string(points.size()));
  std::vector<std::size_t> chosen;
  if (count == 0) return chosen;
  chosen.reserve(count);

  const auto& k = simd::kernels();
  const simd::PointsSoA soa(points);
  std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
  std::size_t next = static_cast<std::size_t>(seed % points.size());
  for (std::size_t s = 0; s < count; ++s) {
    chosen.push_back(next);
    k.update_min_squared_distances(soa, points[next], min_d2.data());
    // Mark chosen points below any distance so duplicates are never re-picked.
    min_d2[next] = -1.0;
    if (s + 1 < count) next = k.argmax(min_d2.data(), min_d2.size());
  }
  return chosen;
}

AnchorSystem volume_sample(const PointCloud& points, std::size_t n_a,
                           std::uint64_t seed, double mass) {
  if (n_a < 2) throw Error("volume_sample needs n_a >= 2");
  if (points.size() < n_a)
    throw Error("cannot sample " + std::to_string(n_a) + " anchors from " +
                std::to_string(points.size()) + " points");
  points.validate();
  AnchorSystem out;
  out.mass = mass;
  for (auto idx : farthest_point_indices(points.positions, n_a, seed))
    out.positions.push_back(points.positions[idx]);
  out.velocities.assign(n_a, Vec3::Zero());
  return out;
}

NeighborTable knn(std::span<const Vec3> query, std::span<const Vec3> reference,
                  std::size_t k, bool exclude_self) {
  const std::size_t available = reference.size() - (exclude_self ? 1 : 0);
  if (reference.empty() || k == 0 || k > available)
    throw Error("knn: k=" + std::to_string(k) + " exceeds the " +
                std::to_string(reference.empty() ? 0 : available) +
                " available reference points");
  if (exclude_self && query.size() > reference.size())
    throw Error("knn: self-query requires query to alias reference");

  NeighborTable out;
  out.rows = query.size();
  out.k = k;
  out.indices.resize(query.size() * k);
  out.distances.resize(query.size() * k);

  const auto& kern = simd::kernels();
  const simd::PointsSoA soa(reference);
  std::vector<double> d2(reference.size());
  std::vector<std::int32_t> order(reference.size());
  for (std::size_t q = 0; q < query.size(); ++q) {
    kern.squared_distances(soa, query[q], d2.data());
    std::iota(order.begin(), order.end(), 0);
    if (exclude_self) {
      std::swap(order[q], order.back());
      order.pop_back();
    }
    auto less = [&d2](std::int32_t a, std::int32_t b) {
      return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), less);
    for (std::size_t j = 0; j < k; ++j) {
      out.indices[q * k + j] = order[j];
      out.distances[q * k + j] = std::sqrt(d2[order[j]]);
    }
    if (exclude_self) order.resize(reference.size());
  }
  return out;
}

SpringTopology build_topology(std::span<const Vec3> anchor_positions, std::size_t n_k) {
  if (anchor_positions.size() <= n_k)
    throw Error("build_topology: need more than n_k=" + std::to_string(n_k) +
                " anchors, got " + std::to_string(anchor_positions.size()));
  if (n_k == 0) throw Error("build_topology: n_k must be positive");
  auto table = knn(anchor_positions, anchor_positions, n_k, /*exclude_self=*/true);
  SpringTopology topo;
  topo.anchor_count = anchor_positions.size();
  topo.n_k = n_k;
  topo.neighbors = std::move(table.indices);
  topo.rest_lengths = std::move(table.distances);
  for (std::size_t i = 0; i < topo.rest_lengths.size(); ++i)
    if (!(topo.rest_lengths[i] > 0.0))
      throw Error("build_topology: anchors " + std::to_string(i / n_k) + " and " +
                  std::to_string(topo.neighbors[i]) + " coincide");
  return topo;
}

SpringTopology build_topology(const AnchorSystem& anchors, std::size_t n_k) {
  return build_topology(anchors.positions, n_k);
}

BindingTable bind_kernels(const PointCloud& kernels, const AnchorSystem& anchors,
                          std::size_t n_b, double p_b) {
  if (n_b == 0 || n_b > anchors.size())
    throw Error("bind_kernels: n_b=" + std::to_string(n_b) + " but only " +
                std::to_string(anchors.size()) + " anchors");
  if (!(p_b > 0.0)) throw Error("bind_kernels: p_b must be positive");
  auto table = knn(kernels.positions, anchors.positions, n_b);
  BindingTable out;
  out.kernel_count = kernels.size();
  out.n_b = n_b;
  out.p_b = p_b;
  out.anchors = std::move(table.indices);
  out.distances = std::move(table.distances);
  for (double& d : out.distances) d = std::max(d, kMinBindingDistance);
  return out;
}

Vec3 centroid(std::span<const Vec3> points) {
  if (points.empty()) throw Error("centroid of an empty point set");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

}  // namespace springsim
