#include "lffuse/fusion.hpp"

#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lffuse {

Eigen::Matrix3d plane_induced_homography(const CameraModel& src, const CameraModel& tgt,
                                         const Eigen::Vector3d& normal_world, double distance) {
  if (!(distance > 0.0)) throw Error(ErrorCode::Parameter, "plane distance must be positive");
  const Eigen::Vector3d baseline = src.center() - tgt.center();
  const Eigen::Matrix3d plane = Eigen::Matrix3d::Identity() - baseline * normal_world.transpose() / distance;
  return src.intrinsics() * src.R * plane * tgt.R.transpose() * tgt.intrinsics_inverse();
}

Eigen::Matrix3d plane_homography(const CameraModel& src, const CameraModel& tgt, double depth) {
  return plane_induced_homography(src, tgt, tgt.principal_axis(), depth);
}

WarpedVolume warp_volume(const Dpv& source, const CameraModel& src, const CameraModel& tgt,
                         const Eigen::VectorXd& target_labels) {
  require_unit(source, LabelUnit::InverseDepth, "warp_volume");
  const int K_src = source.n_planes();
  const auto K = static_cast<int>(target_labels.size());
  const int H0 = tgt.height;
  const int W0 = tgt.width;
  if (source.height() != src.height || source.width() != src.width)
    throw Error(ErrorCode::Frame, "source volume does not match its camera size");
  if (K < 1 || (target_labels.array() <= 0.0).any())
    throw Error(ErrorCode::Frame, "target inverse-depth labels must be positive");

  std::vector<int> order(static_cast<std::size_t>(K_src));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& sl = source.labels();
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sl[a] < sl[b]; });
  std::vector<double> sorted(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = sl[order[i]];
  const double half_lo = K_src > 1 ? 0.5 * (sorted[1] - sorted[0]) : 0.5 * std::abs(sorted[0]);
  const double half_hi = K_src > 1 ? 0.5 * (sorted[K_src - 1] - sorted[K_src - 2]) : 0.5 * std::abs(sorted[0]);
  const double span_lo = sorted.front() - half_lo;
  const double span_hi = sorted.back() + half_hi;
  auto nearest_plane = [&](double s) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), s);
    std::size_t i = static_cast<std::size_t>(it - sorted.begin());
    if (i == sorted.size()) return order.back();
    if (i > 0 && s - sorted[i - 1] <= sorted[i] - s) --i;
    return order[i];
  };

  WarpedVolume out;
  out.labels = target_labels;
  out.probs.assign(static_cast<std::size_t>(K), Plane::Zero(H0, W0));
  out.coverage.assign(static_cast<std::size_t>(K), Mask::Zero(H0, W0));
  parallel_for(K, [&](std::ptrdiff_t k) {
    const double depth = 1.0 / target_labels[k];
    const Eigen::Matrix3d H = plane_homography(src, tgt, depth);
    Plane& probs = out.probs[static_cast<std::size_t>(k)];
    Mask& cov = out.coverage[static_cast<std::size_t>(k)];
    for (int y = 0; y < H0; ++y) {
      for (int x = 0; x < W0; ++x) {
        const Eigen::Vector3d p = H * Eigen::Vector3d(x, y, 1.0);
        if (!(p.z() > 0.0)) continue;
        // Third homogeneous coordinate is source depth over target depth.
        const double s = 1.0 / (depth * p.z());
        if (s < span_lo || s > span_hi) continue;
        double value;
        if (!sample_bilinear(source.plane(nearest_plane(s)), p.x() / p.z(), p.y() / p.z(), value)) continue;
        probs(y, x) = value;
        cov(y, x) = 1;
      }
    }
  });
  return out;
}

double default_sigma_pos(const std::vector<CameraModel>& sources) {
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j, ++pairs)
      total += (sources[i].center() - sources[j].center()).norm();
  return pairs > 0 && total > 0.0 ? total / pairs : 1.0;
}

namespace {

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += out[i] = std::exp(logits[i] - top);
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

FusionWeights fusion_weights(const std::vector<CameraModel>& sources, const CameraModel& target, double sigma_pos,
                             double sigma_dir) {
  if (sources.empty()) throw Error(ErrorCode::Fusion, "fusion needs at least one source");
  if (!(sigma_pos > 0.0) || !(sigma_dir > 0.0)) throw Error(ErrorCode::Parameter, "fusion sigmas must be positive");
  std::vector<double> pos, dir;
  for (const auto& s : sources) {
    pos.push_back(-(s.center() - target.center()).norm() / sigma_pos);
    const double cosang = std::clamp(s.principal_axis().dot(target.principal_axis()), -1.0, 1.0);
    dir.push_back(-std::acos(cosang) / sigma_dir);
  }
  return {softmax(pos), softmax(dir), sigma_pos, sigma_dir};
}

FusionResult fuse_volumes(const std::vector<WarpedVolume>& warped, const FusionWeights& weights,
                          bool renormalize_per_bin) {
  if (warped.empty()) throw Error(ErrorCode::Fusion, "nothing to fuse");
  if (weights.w_pos.size() != warped.size() || weights.w_dir.size() != warped.size())
    throw Error(ErrorCode::Fusion, "one weight pair per source is required");
  const auto& ref = warped.front();
  const int K = ref.n_planes();
  const auto H = ref.probs.empty() ? 0 : ref.probs[0].rows();
  const auto W = ref.probs.empty() ? 0 : ref.probs[0].cols();
  for (const auto& w : warped) {
    if (w.n_planes() != K || !(w.labels.array() == ref.labels.array()).all())
      throw Error(ErrorCode::Fusion, "warped volumes disagree on target labels");
    for (int k = 0; k < K; ++k)
      if (w.probs[k].rows() != H || w.probs[k].cols() != W || w.coverage[k].rows() != H || w.coverage[k].cols() != W)
        throw Error(ErrorCode::Fusion, "warped volumes disagree on target size");
  }

  FusionResult out;
  out.unnormalized.assign(static_cast<std::size_t>(K), Plane::Zero(H, W));
  out.n_rays.assign(static_cast<std::size_t>(K), PlaneT<int>::Zero(H, W));
  parallel_for(K, [&](std::ptrdiff_t k) {
    Plane& acc = out.unnormalized[static_cast<std::size_t>(k)];
    PlaneT<int>& rays = out.n_rays[static_cast<std::size_t>(k)];
    Plane weight_sum = Plane::Zero(H, W);
    for (std::size_t t = 0; t < warped.size(); ++t) {
      const double w = weights.w_pos[t] * weights.w_dir[t];
      const Plane& p = warped[t].probs[static_cast<std::size_t>(k)];
      const Mask& c = warped[t].coverage[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < acc.size(); ++i) {
        if (!c.data()[i]) continue;
        acc.data()[i] += w * p.data()[i];
        weight_sum.data()[i] += w;
        rays.data()[i] += 1;
      }
    }
    for (Eigen::Index i = 0; i < acc.size(); ++i) {
      if (rays.data()[i] == 0) continue;
      acc.data()[i] /= renormalize_per_bin ? weight_sum.data()[i] : static_cast<double>(rays.data()[i]);
    }
  });
  auto normalized = normalize_dpv(Dpv(ref.labels, LabelUnit::InverseDepth, out.unnormalized));
  out.volume = std::move(normalized.volume);
  out.zero_mass_pixels = normalized.zero_mass_pixels;
  return out;
}

}  // namespace lffuse
