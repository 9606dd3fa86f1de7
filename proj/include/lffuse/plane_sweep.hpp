#pragma once

#include "lffuse/dpv.hpp"
#include "lffuse/image.hpp"

#include <vector>

namespace lffuse {

struct PlaneSweepConfig {
  int n_planes = 100;
  double d_min = 0.0;  // pixels per angular step
  double d_max = 1.0;
  int window = 1;      // patch radius; 1 -> 3x3
  double temperature = 0.1;
  /// When positive, estimate_dpv replaces `temperature` by
  /// calibrate_temperature(cost, temperature_spread).
  double temperature_spread = 0.0;

  void validate() const;
};

/// Matching cost per pixel and disparity hypothesis.
struct CostVolume {
  Eigen::VectorXd labels;  // source disparity
  std::vector<Plane> costs;

  int n_planes() const { return static_cast<int>(labels.size()); }
};

/// For every label d and every non-central view v, samples the view at
/// x + kParallaxSign * d * v and compares it with the central view over a
/// (2w+1)^2 window. Out-of-bounds samples are left out of the window mean.
/// The per-pixel cost is the mean over views.
CostVolume plane_sweep_cost(const LightField& lf, const PlaneSweepConfig& cfg);

/// Softmin over planes: exp(-cost / T), normalized per pixel.
Dpv cost_to_probability(const CostVolume& cost, double temperature);

/// Softmin temperature matched to the cost volume: `spread` times the median,
/// over pixels whose minimum is interior, of half the second difference of
/// the cost at that minimum. With spread 1 a parabolic cost minimum becomes a
/// Gaussian about 0.7 planes wide. Returns 0 when no pixel has positive
/// curvature.
double calibrate_temperature(const CostVolume& cost, double spread = 1.0);

/// Expected source disparity of a SourceDisparity volume.
DisparityMap estimate_initial_disparity(const Dpv& dpv);

/// plane_sweep_cost followed by cost_to_probability, at the calibrated
/// temperature when cfg.temperature_spread > 0 and calibration succeeds.
Dpv estimate_dpv(const LightField& lf, const PlaneSweepConfig& cfg);

}  // namespace lffuse
