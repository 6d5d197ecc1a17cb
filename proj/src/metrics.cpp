#include "springsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "springsim/simd/distance_kernels.hpp"

namespace springsim::metrics {

namespace {

double directed_mean(std::span<const Vec3> from, const simd::PointsSoA& to,
                     std::vector<std::size_t>* nearest) {
  const auto& k = simd::kernels();
  double sum = 0.0;
  if (nearest) nearest->resize(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto nn = k.nearest(to, from[i]);
    sum += nn.squared_distance;
    if (nearest) (*nearest)[i] = nn.index;
  }
  return sum / static_cast<double>(from.size());
}

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b, const char* what) {
  if (a.empty() || b.empty())
    throw Error(std::string(what) + ": point clouds must be non-empty");
}

}  // namespace

ChamferTerms chamfer_terms(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b, "chamfer");
  ChamferTerms t;
  const simd::PointsSoA sa(a), sb(b);
  const double ab = directed_mean(a, sb, &t.nearest_in_b);
  const double ba = directed_mean(b, sa, &t.nearest_in_a);
  t.value = ab + ba;
  return t;
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b, "chamfer");
  const simd::PointsSoA sa(a), sb(b);
  return directed_mean(a, sb, nullptr) + directed_mean(b, sa, nullptr);
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  return chamfer(std::span<const Vec3>(a.positions), std::span<const Vec3>(b.positions));
}

void accumulate_chamfer_gradient(std::span<const Vec3> a, std::span<const Vec3> b,
                                 const ChamferTerms& terms, double scale,
                                 std::span<Vec3> grad_a) {
  const double wa = 2.0 * scale / static_cast<double>(a.size());
  const double wb = 2.0 * scale / static_cast<double>(b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    grad_a[i] += wa * (a[i] - b[terms.nearest_in_b[i]]);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::size_t i = terms.nearest_in_a[j];
    grad_a[i] += wb * (a[i] - b[j]);
  }
}

std::vector<std::size_t> hungarian_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw Error("hungarian: cost matrix must be n x n");
  // Shortest augmenting paths with row/column potentials, 1-based with a
  // virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_v(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(min_v.begin(), min_v.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost[(r0 - 1) * n + (c - 1)] - u[r0] - v[c];
        if (cur < min_v[c]) {
          min_v[c] = cur;
          way[c] = col0;
        }
        if (min_v[c] < delta) {
          delta = min_v[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          min_v[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t c = 1; c <= n; ++c) assignment[match[c] - 1] = c - 1;
  return assignment;
}

double emd(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_nonempty(a, b, "emd");
  const std::size_t n = std::min({a.size(), b.size(), kEmdMaxPoints});
  auto reduce = [n](std::span<const Vec3> pts) {
    std::vector<Vec3> out;
    if (pts.size() == n) return std::vector<Vec3>(pts.begin(), pts.end());
    for (auto idx : farthest_point_indices(pts, n, 0)) out.push_back(pts[idx]);
    return out;
  };
  const auto ra = reduce(a);
  const auto rb = reduce(b);
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = distance(ra[i], rb[j]);
  const auto assign = hungarian_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assign[i]];
  return total / static_cast<double>(n);
}

double emd(const PointCloud& a, const PointCloud& b) {
  return emd(std::span<const Vec3>(a.positions), std::span<const Vec3>(b.positions));
}

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw Error(std::string(what) + ": image dimensions differ (" + std::to_string(a.width) +
                "x" + std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                std::to_string(b.channels) + ")");
  if (a.data.empty()) throw Error(std::string(what) + ": empty image");
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::vector<double> ssim_kernel_1d() {
  std::vector<double> g(kSsimWindow);
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    g[i] = std::exp(-(x * x) / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

}  // namespace

double psnr(const Image& image, const Image& reference) {
  require_same_shape(image, reference, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double d = image.data[i] - reference.data[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(image.data.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& image, const Image& reference) {
  require_same_shape(image, reference, "ssim");
  if (image.width < kSsimWindow || image.height < kSsimWindow)
    throw Error("ssim: images must be at least 11x11");
  const auto g = ssim_kernel_1d();
  const std::size_t w = image.width, h = image.height;
  const std::size_t ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;

  // Separable filter: rows first into (ow x h), then columns into (ow x oh).
  auto filter = [&](auto&& sample) {
    std::vector<double> rows(ow * h), out(ow * oh);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int t = 0; t < kSsimWindow; ++t) acc += g[t] * sample(x + t, y);
        rows[y * ow + x] = acc;
      }
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int t = 0; t < kSsimWindow; ++t) acc += g[t] * rows[(y + t) * ow + x];
        out[y * ow + x] = acc;
      }
    return out;
  };

  double total = 0.0;
  for (std::size_t c = 0; c < image.channels; ++c) {
    auto X = [&](std::size_t x, std::size_t y) { return image.at(x, y, c); };
    auto Y = [&](std::size_t x, std::size_t y) { return reference.at(x, y, c); };
    const auto mx = filter(X);
    const auto my = filter(Y);
    const auto mxx = filter([&](std::size_t x, std::size_t y) { return X(x, y) * X(x, y); });
    const auto myy = filter([&](std::size_t x, std::size_t y) { return Y(x, y) * Y(x, y); });
    const auto mxy = filter([&](std::size_t x, std::size_t y) { return X(x, y) * Y(x, y); });
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cxy = mxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + kSsimC1) * (2.0 * cxy + kSsimC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(image.channels);
}

nlohmann::json MetricReport::to_json(bool table_units) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["cd_units"] = table_units ? "1e3 mm^2" : "m^2";
  auto cd_out = [&](double v) { return table_units ? chamfer_to_table_units(v) : v; };
  j["cd"] = cd ? nlohmann::json(cd_out(*cd)) : nlohmann::json(nullptr);
  j["emd"] = emd ? nlohmann::json(*emd) : nlohmann::json(nullptr);
  j["psnr"] = psnr ? nlohmann::json(*psnr) : nlohmann::json(nullptr);
  j["ssim"] = ssim ? nlohmann::json(*ssim) : nlohmann::json(nullptr);
  if (!per_frame_cd.empty()) {
    auto arr = nlohmann::json::array();
    for (double v : per_frame_cd) arr.push_back(cd_out(v));
    j["per_frame_cd"] = arr;
  }
  if (!per_frame_emd.empty()) j["per_frame_emd"] = per_frame_emd;
  return j;
}

}  // namespace springsim::metrics
