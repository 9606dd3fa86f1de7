#pragma once

#include "lffuse/dpv.hpp"
#include "lffuse/image.hpp"

namespace lffuse {

/// Classical stand-ins for learned volume filtering and image-guided
/// refinement.
struct RefineConfig {
  int spatial_radius = 2;   // box radius over (x, y) within a plane
  int plane_radius = 1;     // box radius along the plane axis
  int bilateral_radius = 5;
  double sigma_spatial = 3.0;  // pixels
  double sigma_range = 0.1;    // guide intensity, [0, 1] scale

  void validate() const;
};

/// Box-smooths every plane spatially, then along the plane axis, then
/// renormalizes each pixel. Windows are clipped at the borders.
Dpv filter_volume(const Dpv& fused, const RefineConfig& cfg);

/// Joint bilateral filter of `disparity` guided by `guide`:
/// exp(-|dx|^2 / 2 s_s^2) * exp(-|dI|^2 / 2 s_r^2), normalized per pixel.
DisparityMap guided_refine(const DisparityMap& disparity, const Image& guide, const RefineConfig& cfg);

/// Expected inverse depth of a target-frame volume.
DisparityMap extract_disparity(const Dpv& volume);

}  // namespace lffuse
