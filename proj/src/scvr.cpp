#include "lffuse/scvr.hpp"

#include "lffuse/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lffuse {

void ScvrConfig::validate() const {
  if (iterations < 1) throw Error(ErrorCode::Parameter, "SCVR needs at least one iteration");
  if (!(convergence_eps > 0.0)) throw Error(ErrorCode::Parameter, "convergence eps must be positive");
  if (min_surviving_planes < 2) throw Error(ErrorCode::Parameter, "min_surviving_planes must be >= 2");
  if (n_planes != 0 && n_planes < 2) throw Error(ErrorCode::Parameter, "n_planes must be >= 2");
}

ScaleMapping fit_scale_mapping(std::span<const double> labels, std::span<const double> depths) {
  if (labels.size() != depths.size()) throw Error(ErrorCode::Precondition, "label/depth count mismatch");
  std::vector<double> u;
  std::vector<double> z;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0.0 || !std::isfinite(labels[i])) continue;
    u.push_back(1.0 / labels[i]);
    z.push_back(depths[i]);
  }
  const auto n = static_cast<double>(u.size());
  if (u.size() < 2) throw Error(ErrorCode::Singular, "scale fit needs at least 2 anchors with nonzero disparity");

  const double u_mean = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double z_mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double suu = 0.0, suz = 0.0, u_scale = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - u_mean) * (u[i] - u_mean);
    suz += (u[i] - u_mean) * (z[i] - z_mean);
    u_scale = std::max(u_scale, std::abs(u[i]));
  }
  if (!(std::sqrt(suu / n) > 1e-12 * u_scale))
    throw Error(ErrorCode::Singular, "all anchor disparities are equal; scale fit is singular");

  ScaleMapping m;
  m.alpha = suz / suu;
  m.beta = z_mean - m.alpha * u_mean;
  if (m.alpha == 0.0) throw Error(ErrorCode::Singular, "fitted alpha is zero");
  double sse = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = m.alpha * u[i] + m.beta - z[i];
    sse += r * r;
  }
  m.rms_error = std::sqrt(sse / n);
  m.n_anchors = static_cast<int>(u.size());
  return m;
}

ScaleMapping fit_scale_mapping(const DisparityMap& disparity, const std::vector<AnchorObservation>& anchors) {
  std::vector<double> labels;
  std::vector<double> depths;
  labels.reserve(anchors.size());
  depths.reserve(anchors.size());
  for (const auto& a : anchors) {
    labels.push_back(sample_bilinear_clamped(disparity, a.x, a.y));
    depths.push_back(a.depth);
  }
  return fit_scale_mapping(labels, depths);
}

Dpv apply_mapping(const Dpv& dpv, const ScaleMapping& mapping) {
  if (dpv.unit() != LabelUnit::SourceDisparity && dpv.unit() != LabelUnit::InverseDepth)
    throw Error(ErrorCode::Frame, "apply_mapping expects disparity or inverse-depth labels");
  Eigen::VectorXd depth(dpv.n_planes());
  for (int k = 0; k < dpv.n_planes(); ++k) {
    const double label = dpv.labels()[k];
    if (label == 0.0) throw Error(ErrorCode::InvalidMapping, "plane " + std::to_string(k) + " has a zero label");
    depth[k] = mapping(label);
    if (!(depth[k] > 0.0)) {
      std::ostringstream os;
      os << "plane " << k << " (label " << label << ") maps to non-positive depth " << depth[k];
      throw Error(ErrorCode::InvalidMapping, os.str());
    }
  }
  return Dpv(std::move(depth), LabelUnit::WorldDepth, dpv.planes());
}

Dpv trim_planes(const Dpv& dpv, const DepthRange& range, int min_surviving_planes) {
  require_unit(dpv, LabelUnit::WorldDepth, "trim_planes");
  // Relative slack so labels sitting on the range ends survive round-off.
  const double lo = range.min * (1.0 - 1e-9);
  const double hi = range.max * (1.0 + 1e-9);
  std::vector<int> keep;
  for (int k = 0; k < dpv.n_planes(); ++k) {
    const double z = dpv.labels()[k];
    if (z >= lo && z <= hi) keep.push_back(k);
  }
  if (static_cast<int>(keep.size()) < min_surviving_planes) {
    std::ostringstream os;
    os << "only " << keep.size() << " planes survive depth range [" << range.min << ", " << range.max
       << "], need " << min_surviving_planes;
    throw Error(ErrorCode::ExcessiveTrim, os.str());
  }
  Eigen::VectorXd labels(static_cast<Eigen::Index>(keep.size()));
  std::vector<Plane> planes;
  planes.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    labels[static_cast<Eigen::Index>(i)] = dpv.labels()[keep[i]];
    planes.push_back(dpv.plane(keep[i]));
  }
  return Dpv(std::move(labels), LabelUnit::WorldDepth, std::move(planes));
}

Dpv resample_to_inverse_depth(const Dpv& dpv, const Eigen::VectorXd& inverse_depth_labels) {
  if (dpv.unit() != LabelUnit::WorldDepth && dpv.unit() != LabelUnit::InverseDepth)
    throw Error(ErrorCode::Frame, "resampling expects world-depth or inverse-depth labels");
  const int K_in = dpv.n_planes();
  if (K_in < 2) throw Error(ErrorCode::Resample, "resampling needs at least 2 input planes");

  // Input knots in inverse depth, sorted ascending.
  std::vector<int> order(static_cast<std::size_t>(K_in));
  std::vector<double> knot(static_cast<std::size_t>(K_in));
  for (int k = 0; k < K_in; ++k) {
    const double l = dpv.labels()[k];
    knot[k] = dpv.unit() == LabelUnit::WorldDepth ? 1.0 / l : l;
  }
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return knot[a] < knot[b]; });
  const double lo = knot[order.front()];
  const double hi = knot[order.back()];

  const auto K_out = inverse_depth_labels.size();
  std::vector<Plane> planes(static_cast<std::size_t>(K_out), Plane::Zero(dpv.height(), dpv.width()));
  for (Eigen::Index j = 0; j < K_out; ++j) {
    const double t = inverse_depth_labels[j];
    const double slack = 1e-12 * std::max(std::abs(lo), std::abs(hi));
    if (t < lo - slack || t > hi + slack) continue;
    auto it = std::upper_bound(order.begin(), order.end(), t, [&](double v, int k) { return v < knot[k]; });
    std::size_t upper = static_cast<std::size_t>(it - order.begin());
    upper = std::clamp<std::size_t>(upper, 1, order.size() - 1);
    const int a = order[upper - 1];
    const int b = order[upper];
    const double w = std::clamp((t - knot[a]) / (knot[b] - knot[a]), 0.0, 1.0);
    planes[static_cast<std::size_t>(j)] = (1.0 - w) * dpv.plane(a) + w * dpv.plane(b);
  }
  return normalize_dpv(Dpv(inverse_depth_labels, LabelUnit::InverseDepth, std::move(planes))).volume;
}

Dpv resample_planes(const Dpv& dpv, int n_planes) {
  require_unit(dpv, LabelUnit::WorldDepth, "resample_planes");
  if (dpv.n_planes() < 2) throw Error(ErrorCode::Resample, "resampling needs at least 2 surviving planes");
  if (n_planes < 2) throw Error(ErrorCode::Resample, "resampling target needs at least 2 planes");
  const double near_inv = 1.0 / dpv.labels().minCoeff();
  const double far_inv = 1.0 / dpv.labels().maxCoeff();
  // Keep the input's direction along depth: ascending depth means
  // descending inverse depth.
  const Eigen::VectorXd labels = dpv.ascending() ? uniform_labels(near_inv, far_inv, n_planes)
                                                 : uniform_labels(far_inv, near_inv, n_planes);
  return resample_to_inverse_depth(dpv, labels);
}

Eigen::VectorXd shared_inverse_depth_labels(const DepthRange& range, int n_planes) {
  if (!(range.min > 0.0 && range.min < range.max)) throw Error(ErrorCode::Parameter, "invalid depth range");
  return uniform_labels(1.0 / range.max, 1.0 / range.min, n_planes);
}

ScvrResult scvr_run(const Dpv& dpv, const std::vector<AnchorObservation>& anchors, const DepthRange& range,
                    const ScvrConfig& cfg) {
  cfg.validate();
  if (dpv.unit() == LabelUnit::WorldDepth) throw Error(ErrorCode::Frame, "SCVR input must carry disparity-like labels");
  const int K = cfg.n_planes > 0 ? cfg.n_planes : dpv.n_planes();

  ScvrResult result;
  Dpv current = dpv.normalized() ? dpv : normalize_dpv(dpv).volume;
  for (int n = 1; n <= cfg.iterations; ++n) {
    try {
      const DisparityMap d_cur = expected_label(current);
      const ScaleMapping m = fit_scale_mapping(d_cur, anchors);
      const Dpv trimmed = trim_planes(apply_mapping(current, m), range, cfg.min_surviving_planes);
      current = resample_planes(trimmed, K);
      result.history.push_back({n, m, trimmed.n_planes()});
      if (std::abs(m.alpha - 1.0) + std::abs(m.beta) < cfg.convergence_eps) {
        result.converged = true;
        break;
      }
    } catch (const Error& e) {
      throw Error(e.code(), "SCVR iteration " + std::to_string(n) + ": " + e.what());
    }
  }
  result.volume = resample_to_inverse_depth(current, shared_inverse_depth_labels(range, K));
  return result;
}

}  // namespace lffuse
