#include "lffuse/refine.hpp"

#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <cmath>
#include <vector>

namespace lffuse {

void RefineConfig::validate() const {
  if (spatial_radius < 0 || plane_radius < 0 || bilateral_radius < 0)
    throw Error(ErrorCode::Parameter, "refine radii must be >= 0");
  if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0))
    throw Error(ErrorCode::Parameter, "refine sigmas must be positive");
}

Dpv filter_volume(const Dpv& fused, const RefineConfig& cfg) {
  cfg.validate();
  const int K = fused.n_planes();
  const int rs = cfg.spatial_radius;
  std::vector<Plane> spatial(static_cast<std::size_t>(K));
  const Plane counts = box_sum<double>(Plane::Ones(fused.height(), fused.width()), rs, rs);
  parallel_for(K, [&](std::ptrdiff_t k) {
    spatial[static_cast<std::size_t>(k)] = box_sum(fused.plane(static_cast<int>(k)), rs, rs) / counts;
  });
  std::vector<Plane> smoothed(static_cast<std::size_t>(K));
  const int rk = cfg.plane_radius;
  for (int k = 0; k < K; ++k) {
    const int lo = std::max(0, k - rk);
    const int hi = std::min(K - 1, k + rk);
    Plane acc = spatial[static_cast<std::size_t>(lo)];
    for (int j = lo + 1; j <= hi; ++j) acc += spatial[static_cast<std::size_t>(j)];
    smoothed[static_cast<std::size_t>(k)] = acc / static_cast<double>(hi - lo + 1);
  }
  return normalize_dpv(Dpv(fused.labels(), fused.unit(), std::move(smoothed))).volume;
}

DisparityMap guided_refine(const DisparityMap& disparity, const Image& guide, const RefineConfig& cfg) {
  cfg.validate();
  const auto H = disparity.rows();
  const auto W = disparity.cols();
  if (guide.height() != H || guide.width() != W || guide.n_channels() < 1)
    throw Error(ErrorCode::Guide, "guide image does not match the disparity map");
  const int R = cfg.bilateral_radius;
  std::vector<double> spatial(static_cast<std::size_t>((2 * R + 1) * (2 * R + 1)));
  for (int dy = -R; dy <= R; ++dy)
    for (int dx = -R; dx <= R; ++dx)
      spatial[static_cast<std::size_t>((dy + R) * (2 * R + 1) + dx + R)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.sigma_spatial * cfg.sigma_spatial));
  const double range_scale = 1.0 / (2.0 * cfg.sigma_range * cfg.sigma_range);

  DisparityMap out(H, W);
  parallel_for(H, [&](std::ptrdiff_t y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      double num = 0.0, den = 0.0;
      for (int dy = -R; dy <= R; ++dy) {
        const auto yy = y + dy;
        if (yy < 0 || yy >= H) continue;
        for (int dx = -R; dx <= R; ++dx) {
          const auto xx = x + dx;
          if (xx < 0 || xx >= W) continue;
          double dist2 = 0.0;
          for (const auto& ch : guide.channels) {
            const double diff = ch(yy, xx) - ch(y, x);
            dist2 += diff * diff;
          }
          const double w = spatial[static_cast<std::size_t>((dy + R) * (2 * R + 1) + dx + R)] *
                           std::exp(-dist2 * range_scale);
          num += w * disparity(yy, xx);
          den += w;
        }
      }
      out(y, x) = num / den;
    }
  });
  return out;
}

DisparityMap extract_disparity(const Dpv& volume) {
  require_unit(volume, LabelUnit::InverseDepth, "extract_disparity");
  return expected_label(volume);
}

}  // namespace lffuse
