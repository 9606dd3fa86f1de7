#pragma once

#include "lffuse/plane_sweep.hpp"
#include "lffuse/refine.hpp"

namespace lffuse {

/// Settings the command-line pipeline starts from. The per-module config
/// structs keep their own documented defaults; these presets are what the
/// end-to-end chain is tuned with.
struct PipelinePresets {
  /// Softmin temperature calibrated from the cost volume (spread 1).
  double temperature_spread = 1.0;
  /// Narrow joint-bilateral refinement; wider kernels bleed disparity across
  /// edges whose colors are similar.
  RefineConfig refine{2, 1, 2, 1.5, 0.03};
};

inline const PipelinePresets kPipelinePresets{};

}  // namespace lffuse
