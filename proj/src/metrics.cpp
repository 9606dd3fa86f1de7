#include "lffuse/metrics.hpp"

#include "lffuse/error.hpp"

#include <cmath>

namespace lffuse {

namespace {

void check_same_shape(const Plane& a, const Plane& b, const Mask* mask) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::Metric, "metric inputs differ in size");
  if (mask && (mask->rows() != a.rows() || mask->cols() != a.cols()))
    throw Error(ErrorCode::Metric, "mask does not match metric inputs");
}

bool selected(const Mask* mask, Eigen::Index i) { return !mask || mask->data()[i] != 0; }

long count_selected(const Plane& a, const Mask* mask) {
  if (!mask) return static_cast<long>(a.size());
  return static_cast<long>((*mask != 0).count());
}

std::vector<double> gaussian_taps(int radius, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += taps[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (double& t : taps) t /= sum;
  return taps;
}

// 'valid' separable correlation: output is (H - 2r) x (W - 2r).
Plane filter_valid(const Plane& in, const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  const auto H = in.rows();
  const auto W = in.cols();
  Plane horiz(H, W - 2 * r);
  for (Eigen::Index y = 0; y < H; ++y)
    for (Eigen::Index x = 0; x < W - 2 * r; ++x) {
      double acc = 0.0;
      for (int i = 0; i <= 2 * r; ++i) acc += taps[static_cast<std::size_t>(i)] * in(y, x + i);
      horiz(y, x) = acc;
    }
  Plane out(H - 2 * r, W - 2 * r);
  for (Eigen::Index y = 0; y < H - 2 * r; ++y)
    for (Eigen::Index x = 0; x < W - 2 * r; ++x) {
      double acc = 0.0;
      for (int i = 0; i <= 2 * r; ++i) acc += taps[static_cast<std::size_t>(i)] * horiz(y + i, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

double mse(const Plane& est, const Plane& gt, const Mask* mask) {
  check_same_shape(est, gt, mask);
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    if (!selected(mask, i)) continue;
    const double d = est.data()[i] - gt.data()[i];
    sum += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::Metric, "metric mask is empty");
  return sum / static_cast<double>(n);
}

double ppe(const Plane& est, const Plane& gt, double threshold, const Mask* mask) {
  check_same_shape(est, gt, mask);
  if (!(threshold > 0.0)) throw Error(ErrorCode::Parameter, "PPE threshold must be positive");
  long hit = 0, n = 0;
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    if (!selected(mask, i)) continue;
    ++n;
    if (std::abs(est.data()[i] - gt.data()[i]) < threshold) ++hit;
  }
  if (n == 0) throw Error(ErrorCode::Metric, "metric mask is empty");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(n);
}

double psnr(const Image& est, const Image& gt, double peak, const Mask* mask) {
  if (est.n_channels() != gt.n_channels() || est.n_channels() == 0)
    throw Error(ErrorCode::Metric, "images differ in channel count");
  double sum = 0.0;
  for (int c = 0; c < est.n_channels(); ++c) sum += mse(est.channels[c], gt.channels[c], mask);
  const double m = sum / est.n_channels();
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double ssim(const Plane& est, const Plane& gt, double peak, const Mask* mask) {
  check_same_shape(est, gt, mask);
  constexpr int kRadius = 5;
  if (est.rows() < 2 * kRadius + 1 || est.cols() < 2 * kRadius + 1)
    throw Error(ErrorCode::Metric, "image is smaller than the 11x11 SSIM window");
  const auto taps = gaussian_taps(kRadius, 1.5);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Plane mu_x = filter_valid(est, taps);
  const Plane mu_y = filter_valid(gt, taps);
  const Plane sxx = filter_valid(est * est, taps) - mu_x * mu_x;
  const Plane syy = filter_valid(gt * gt, taps) - mu_y * mu_y;
  const Plane sxy = filter_valid(est * gt, taps) - mu_x * mu_y;
  const Plane map = ((2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)) /
                    ((mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2));
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index y = 0; y < map.rows(); ++y)
    for (Eigen::Index x = 0; x < map.cols(); ++x) {
      if (mask && (*mask)(y + kRadius, x + kRadius) == 0) continue;
      sum += map(y, x);
      ++n;
    }
  if (n == 0) throw Error(ErrorCode::Metric, "no SSIM window survives the mask");
  return sum / static_cast<double>(n);
}

double ssim(const Image& est, const Image& gt, double peak, const Mask* mask) {
  if (est.n_channels() != gt.n_channels() || est.n_channels() == 0)
    throw Error(ErrorCode::Metric, "images differ in channel count");
  double sum = 0.0;
  for (int c = 0; c < est.n_channels(); ++c) sum += ssim(est.channels[c], gt.channels[c], peak, mask);
  return sum / est.n_channels();
}

RescaleResult linear_rescale_to_reference(const Plane& est, const Plane& gt, const Mask* mask) {
  check_same_shape(est, gt, mask);
  double emin = INFINITY, emax = -INFINITY, gmin = INFINITY, gmax = -INFINITY;
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    if (!selected(mask, i)) continue;
    emin = std::min(emin, est.data()[i]);
    emax = std::max(emax, est.data()[i]);
    gmin = std::min(gmin, gt.data()[i]);
    gmax = std::max(gmax, gt.data()[i]);
  }
  if (!(gmax > gmin)) throw Error(ErrorCode::Rescale, "reference has no range to rescale onto");
  if (!(emax > emin)) return {Plane::Constant(est.rows(), est.cols(), gmin), true};
  const double scale = (gmax - gmin) / (emax - emin);
  return {(est - emin) * scale + gmin, false};
}

MetricsReport disparity_report(const Plane& est, const Plane& gt, const Mask* mask) {
  MetricsReport r;
  r.mse = mse(est, gt, mask);
  r.ppe_005 = ppe(est, gt, 0.05, mask);
  r.ppe_01 = ppe(est, gt, 0.1, mask);
  r.pixels = static_cast<long>(est.size());
  r.masked_pixels = count_selected(est, mask);
  r.mask_coverage = static_cast<double>(r.masked_pixels) / static_cast<double>(r.pixels);
  return r;
}

}  // namespace lffuse
