#include "lffuse/plane_sweep.hpp"

#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lffuse {

void PlaneSweepConfig::validate() const {
  if (n_planes < 2) throw Error(ErrorCode::Parameter, "plane sweep needs at least 2 planes");
  if (!(d_min < d_max)) throw Error(ErrorCode::Parameter, "plane sweep needs d_min < d_max");
  if (window < 0) throw Error(ErrorCode::Parameter, "window radius must be >= 0");
  if (!(temperature > 0.0)) throw Error(ErrorCode::Parameter, "temperature must be positive");
  if (!(temperature_spread >= 0.0)) throw Error(ErrorCode::Parameter, "temperature spread must be >= 0");
}

CostVolume plane_sweep_cost(const LightField& lf, const PlaneSweepConfig& cfg) {
  cfg.validate();
  if (lf.rows() % 2 == 0 || lf.cols() % 2 == 0)
    throw Error(ErrorCode::UnsupportedGrid, "plane sweep needs an odd angular grid");
  const int H = lf.height();
  const int W = lf.width();
  const int C = lf.n_channels();
  const Image& center = lf.central();
  const int rc = (lf.rows() - 1) / 2;
  const int cc = (lf.cols() - 1) / 2;

  CostVolume out;
  out.labels = uniform_labels(cfg.d_min, cfg.d_max, cfg.n_planes);
  out.costs.assign(static_cast<std::size_t>(cfg.n_planes), Plane::Zero(H, W));
  PlaneT<int> unresolved_any = PlaneT<int>::Zero(H, W);
  std::vector<PlaneT<int>> unresolved(static_cast<std::size_t>(cfg.n_planes));

  parallel_for(cfg.n_planes, [&](std::ptrdiff_t k) {
    const double d = out.labels[k];
    Plane cost_sum = Plane::Zero(H, W);
    PlaneT<int> views_used = PlaneT<int>::Zero(H, W);
    Plane sq(H, W);
    Plane valid(H, W);
    for (int r = 0; r < lf.rows(); ++r) {
      for (int c = 0; c < lf.cols(); ++c) {
        if (r == rc && c == cc) continue;
        const AngularOffset v = lf.offset(r, c);
        const Image& view = lf.view(r, c);
        const double sx = kParallaxSign * d * v.du;
        const double sy = kParallaxSign * d * v.dv;
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            bool inside = true;
            for (int ch = 0; ch < C && inside; ++ch) {
              double s = 0.0;
              inside = sample_bilinear(view.channels[ch], x + sx, y + sy, s);
              const double diff = s - center.channels[ch](y, x);
              acc += diff * diff;
            }
            sq(y, x) = inside ? acc / C : 0.0;
            valid(y, x) = inside ? 1.0 : 0.0;
          }
        }
        const Plane num = box_sum(sq, cfg.window, cfg.window);
        const Plane den = box_sum(valid, cfg.window, cfg.window);
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            if (den(y, x) > 0.0) {
              cost_sum(y, x) += num(y, x) / den(y, x);
              views_used(y, x) += 1;
            }
          }
        }
      }
    }
    Plane& cost = out.costs[static_cast<std::size_t>(k)];
    PlaneT<int>& missing = unresolved[static_cast<std::size_t>(k)];
    missing = PlaneT<int>::Zero(H, W);
    const bool has_views = lf.rows() * lf.cols() > 1;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (views_used(y, x) > 0) {
          cost(y, x) = cost_sum(y, x) / views_used(y, x);
        } else if (has_views) {
          missing(y, x) = 1;
        }
      }
    }
  });

  // A hypothesis with no valid comparison in any view gets the worst cost
  // seen at that pixel, so it cannot win by default.
  for (const auto& m : unresolved) unresolved_any = unresolved_any.max(m);
  if (unresolved_any.any()) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (!unresolved_any(y, x)) continue;
        double worst = 0.0;
        for (int k = 0; k < cfg.n_planes; ++k)
          if (!unresolved[k](y, x)) worst = std::max(worst, out.costs[k](y, x));
        for (int k = 0; k < cfg.n_planes; ++k)
          if (unresolved[k](y, x)) out.costs[k](y, x) = worst;
      }
    }
  }
  return out;
}

Dpv cost_to_probability(const CostVolume& cost, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::Parameter, "temperature must be positive");
  const int K = cost.n_planes();
  if (K < 1 || static_cast<int>(cost.costs.size()) != K)
    throw Error(ErrorCode::Precondition, "cost volume is empty or inconsistent");
  const auto H = cost.costs[0].rows();
  const auto W = cost.costs[0].cols();
  for (const auto& c : cost.costs)
    if (!c.allFinite()) throw Error(ErrorCode::Precondition, "costs must be finite");

  Plane lowest = cost.costs[0];
  for (int k = 1; k < K; ++k) lowest = lowest.min(cost.costs[k]);
  std::vector<Plane> probs(static_cast<std::size_t>(K));
  Plane total = Plane::Zero(H, W);
  for (int k = 0; k < K; ++k) {
    probs[k] = (-(cost.costs[k] - lowest) / temperature).exp();
    total += probs[k];
  }
  for (auto& p : probs) p /= total;
  return Dpv(cost.labels, LabelUnit::SourceDisparity, std::move(probs));
}

DisparityMap estimate_initial_disparity(const Dpv& dpv) {
  require_unit(dpv, LabelUnit::SourceDisparity, "estimate_initial_disparity");
  return expected_label(dpv);
}

double calibrate_temperature(const CostVolume& cost, double spread) {
  const int K = cost.n_planes();
  if (K < 3) return 0.0;
  const auto n = cost.costs[0].size();
  std::vector<double> curvature;
  curvature.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (cost.costs[k].data()[i] < cost.costs[best].data()[i]) best = k;
    if (best == 0 || best == K - 1) continue;
    curvature.push_back(0.5 * (cost.costs[best - 1].data()[i] - 2.0 * cost.costs[best].data()[i] +
                               cost.costs[best + 1].data()[i]));
  }
  if (curvature.empty()) return 0.0;
  auto mid = curvature.begin() + static_cast<std::ptrdiff_t>(curvature.size() / 2);
  std::nth_element(curvature.begin(), mid, curvature.end());
  return *mid > 0.0 ? spread * *mid : 0.0;
}

Dpv estimate_dpv(const LightField& lf, const PlaneSweepConfig& cfg) {
  const CostVolume cost = plane_sweep_cost(lf, cfg);
  double t = cfg.temperature;
  if (cfg.temperature_spread > 0.0) {
    const double calibrated = calibrate_temperature(cost, cfg.temperature_spread);
    if (calibrated > 0.0) t = calibrated;
  }
  return cost_to_probability(cost, t);
}

}  // namespace lffuse
