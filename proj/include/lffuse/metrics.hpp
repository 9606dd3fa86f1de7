#pragma once

#include "lffuse/image.hpp"

#include <optional>
#include <vector>

namespace lffuse {

// Masks select pixels with a nonzero entry; an absent mask selects all.

double mse(const Plane& est, const Plane& gt, const Mask* mask = nullptr);

/// Percentage of masked pixels with |est - gt| strictly below `threshold`.
double ppe(const Plane& est, const Plane& gt, double threshold, const Mask* mask = nullptr);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / mse) over all channels; identical inputs give kPsnrCap.
double psnr(const Image& est, const Image& gt, double peak = 1.0, const Mask* mask = nullptr);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), averaged over
/// windows fully inside the image and over channels. With a mask, only
/// windows centred on valid pixels count.
double ssim(const Image& est, const Image& gt, double peak = 1.0, const Mask* mask = nullptr);
double ssim(const Plane& est, const Plane& gt, double peak = 1.0, const Mask* mask = nullptr);

struct RescaleResult {
  Plane values;
  bool degenerate = false;  // est was constant; mapped to gt's minimum
};

/// Affine map of est so its masked min/max land on gt's.
RescaleResult linear_rescale_to_reference(const Plane& est, const Plane& gt, const Mask* mask = nullptr);

struct MetricsReport {
  double mse = 0.0;
  double ppe_005 = 0.0;
  double ppe_01 = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
  long pixels = 0;
  long masked_pixels = 0;
  double mask_coverage = 0.0;
};

MetricsReport disparity_report(const Plane& est, const Plane& gt, const Mask* mask = nullptr);

}  // namespace lffuse
