#pragma once

#include "lffuse/anchors.hpp"
#include "lffuse/dpv.hpp"

#include <span>
#include <vector>

namespace lffuse {

/// depth = alpha / label + beta, with its least-squares fit diagnostics.
struct ScaleMapping {
  double alpha = 1.0;
  double beta = 0.0;
  double rms_error = 0.0;  // world depth units
  int n_anchors = 0;

  double operator()(double label) const { return alpha / label + beta; }
};

struct ScvrConfig {
  int iterations = 7;
  double convergence_eps = 1e-6;  // on |alpha - 1| + |beta|
  int min_surviving_planes = 4;
  int n_planes = 0;               // resampled plane count; 0 keeps the input count

  void validate() const;
};

/// Closed-form least squares of depth against [1/label, 1]. Zero labels are
/// skipped; fewer than two usable pairs or a constant 1/label column raise
/// Error(Singular).
ScaleMapping fit_scale_mapping(std::span<const double> labels, std::span<const double> depths);

/// Samples `disparity` bilinearly at each anchor pixel and fits against the
/// anchor depths.
ScaleMapping fit_scale_mapping(const DisparityMap& disparity, const std::vector<AnchorObservation>& anchors);

/// Maps every plane label through the scale mapping; the result is in world
/// depth. Probabilities are carried over untouched.
Dpv apply_mapping(const Dpv& dpv, const ScaleMapping& mapping);

/// Drops planes whose depth falls outside `range`.
Dpv trim_planes(const Dpv& dpv, const DepthRange& range, int min_surviving_planes = 4);

/// Resamples a world-depth volume onto `n_planes` labels uniform in inverse
/// depth over its own span, interpolating probabilities linearly in inverse
/// depth and renormalizing. Label order follows the input's depth order.
Dpv resample_planes(const Dpv& dpv, int n_planes);

/// Resamples a WorldDepth or InverseDepth volume onto explicit inverse-depth
/// labels. Targets outside the input span get zero mass before
/// renormalization.
Dpv resample_to_inverse_depth(const Dpv& dpv, const Eigen::VectorXd& inverse_depth_labels);

/// Labels shared by every volume rescaled against the same depth range:
/// uniform in inverse depth, ascending.
Eigen::VectorXd shared_inverse_depth_labels(const DepthRange& range, int n_planes);

struct ScvrIteration {
  int index = 0;
  ScaleMapping mapping;
  int planes_kept = 0;
};

struct ScvrResult {
  Dpv volume;  // InverseDepth, labels = shared_inverse_depth_labels(range, K)
  std::vector<ScvrIteration> history;
  bool converged = false;
};

/// Iterative rescaling: each round refits the mapping against the expected
/// label of the current volume, applies it, trims to `range` and resamples.
ScvrResult scvr_run(const Dpv& dpv, const std::vector<AnchorObservation>& anchors, const DepthRange& range,
                    const ScvrConfig& cfg = {});

}  // namespace lffuse
