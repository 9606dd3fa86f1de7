#pragma once

#include "lffuse/image.hpp"

#include <vector>

namespace lffuse {

enum class FieldMode { ConstantLift, ForwardReproject };

struct RenderConfig {
  int rows = 7;
  int cols = 7;
  /// Parallax in pixels per angular step for a unit of input disparity.
  double pixels_per_unit = 1.0;
  FieldMode mode = FieldMode::ConstantLift;

  void validate() const;
};

/// Lifts a central disparity map to every view of the angular grid.
/// ConstantLift copies it; ForwardReproject splats it into each view with a
/// nearer-wins z-buffer and fills holes from the far side along the view
/// offset direction.
DisparityField synthesize_disparity_field(const DisparityMap& disparity, const RenderConfig& cfg);

struct WarpedView {
  Image image;
  Mask valid;  // 0 where the sample had to be clamped to the border
};

/// out(x) = image(x - kParallaxSign * F(x) * v), bilinear, clamped to edge.
WarpedView backward_warp_view(const Image& image, const Plane& field_slice, AngularOffset v);

struct RenderedLightField {
  LightField lf;
  std::vector<Mask> valid;  // row-major over the angular grid
};

/// Backward-warps every view; the central view is the input image verbatim.
RenderedLightField render_light_field(const Image& image, const DisparityField& field);

}  // namespace lffuse
