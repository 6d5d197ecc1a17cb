#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "springsim/geometry.hpp"
#include "springsim/image.hpp"

namespace springsim::metrics {

/// Symmetric sum of directed mean squared nearest-neighbor distances (m^2).
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer(const PointCloud& a, const PointCloud& b);

/// Chamfer value plus the nearest-neighbor assignments it used.
struct ChamferTerms {
  double value = 0.0;
  std::vector<std::size_t> nearest_in_b;  // for each a
  std::vector<std::size_t> nearest_in_a;  // for each b
};

ChamferTerms chamfer_terms(std::span<const Vec3> a, std::span<const Vec3> b);

/// grad_a[i] += scale * d chamfer / d a_i, with the assignments held fixed.
void accumulate_chamfer_gradient(std::span<const Vec3> a, std::span<const Vec3> b,
                                 const ChamferTerms& terms, double scale,
                                 std::span<Vec3> grad_a);

/// Minimum-cost perfect matching of a square cost matrix (row-major n x n).
/// Returns the column assigned to each row.
std::vector<std::size_t> hungarian_assignment(std::span<const double> cost, std::size_t n);

inline constexpr std::size_t kEmdMaxPoints = 1024;

/// Exact EMD (mean matched Euclidean distance, m). Clouds larger than
/// min(|a|, |b|, 1024) are reduced by farthest-point sampling with seed 0.
double emd(std::span<const Vec3> a, std::span<const Vec3> b);
double emd(const PointCloud& a, const PointCloud& b);

inline constexpr double kPsnrCap = 100.0;

double psnr(const Image& image, const Image& reference);

/// Mean SSIM over all fully covered 11x11 Gaussian windows (sigma 1.5),
/// averaged over channels.
double ssim(const Image& image, const Image& reference);

/// CD stored in m^2; table units are 1e3 mm^2, i.e. m^2 * 1e3.
inline double chamfer_to_table_units(double cd_m2) { return cd_m2 * 1e3; }

struct MetricReport {
  std::optional<double> cd;  // m^2
  std::optional<double> emd;  // m
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::vector<double> per_frame_cd;
  std::vector<double> per_frame_emd;

  nlohmann::json to_json(bool table_units) const;
};

}  // namespace springsim::metrics
