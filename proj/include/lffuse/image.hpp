#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace lffuse {

/// Row-major H x W scalar grid. Row index is y, column index is x; pixel
/// centers sit at integer coordinates.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;
using Mask = PlaneT<unsigned char>;

/// Per-pixel disparity (or inverse depth, depending on the producing stage).
using DisparityMap = Plane;

/// Multi-channel image with samples in [0, 1], stored one plane per channel.
struct Image {
  std::vector<Plane> channels;

  Image() = default;
  Image(int height, int width, int n_channels)
      : channels(n_channels, Plane::Zero(height, width)) {}

  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int n_channels() const { return static_cast<int>(channels.size()); }

  bool operator==(const Image& other) const {
    if (channels.size() != other.channels.size()) return false;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c].rows() != other.channels[c].rows() ||
          channels[c].cols() != other.channels[c].cols() ||
          !(channels[c] == other.channels[c]).all())
        return false;
    }
    return true;
  }
};

/// Bilinear sample at continuous (x, y). Returns false when the 2x2 footprint
/// leaves the grid; `out` is left untouched in that case.
template <typename Derived>
bool sample_bilinear(const Eigen::DenseBase<Derived>& grid, double x, double y,
                     typename Derived::Scalar& out) {
  using Scalar = typename Derived::Scalar;
  const auto rows = grid.rows();
  const auto cols = grid.cols();
  if (!(x >= 0.0) || !(y >= 0.0) || x > cols - 1 || y > rows - 1) return false;
  auto x0 = static_cast<Eigen::Index>(std::floor(x));
  auto y0 = static_cast<Eigen::Index>(std::floor(y));
  if (x0 == cols - 1) --x0;
  if (y0 == rows - 1) --y0;
  const Scalar fx = static_cast<Scalar>(x - static_cast<double>(x0));
  const Scalar fy = static_cast<Scalar>(y - static_cast<double>(y0));
  if (cols == 1 || rows == 1) {
    // Degenerate grids: fall back to 1D interpolation along the long axis.
    if (cols == 1 && rows == 1) {
      out = grid(0, 0);
    } else if (cols == 1) {
      out = (Scalar(1) - fy) * grid(y0, 0) + fy * grid(y0 + 1, 0);
    } else {
      out = (Scalar(1) - fx) * grid(0, x0) + fx * grid(0, x0 + 1);
    }
    return true;
  }
  const Scalar top = (Scalar(1) - fx) * grid(y0, x0) + fx * grid(y0, x0 + 1);
  const Scalar bottom = (Scalar(1) - fx) * grid(y0 + 1, x0) + fx * grid(y0 + 1, x0 + 1);
  out = (Scalar(1) - fy) * top + fy * bottom;
  return true;
}

/// Bilinear sample with coordinates clamped to the grid. `inside` reports
/// whether clamping was needed.
template <typename Derived>
typename Derived::Scalar sample_bilinear_clamped(const Eigen::DenseBase<Derived>& grid,
                                                 double x, double y, bool* inside = nullptr) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(grid.cols() - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(grid.rows() - 1));
  if (inside) *inside = (cx == x && cy == y);
  typename Derived::Scalar v{};
  sample_bilinear(grid, cx, cy, v);
  return v;
}

/// Sum over a (2*rx+1) x (2*ry+1) window clipped to the grid, separable.
/// Each output is summed directly so non-negative inputs stay non-negative.
template <typename Scalar>
PlaneT<Scalar> box_sum(const PlaneT<Scalar>& in, int rx, int ry) {
  const auto H = in.rows();
  const auto W = in.cols();
  PlaneT<Scalar> horiz(H, W);
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      Scalar acc = 0;
      const auto lo = std::max<Eigen::Index>(0, x - rx);
      const auto hi = std::min<Eigen::Index>(W - 1, x + rx);
      for (auto i = lo; i <= hi; ++i) acc += in(y, i);
      horiz(y, x) = acc;
    }
  }
  PlaneT<Scalar> out(H, W);
  for (Eigen::Index y = 0; y < H; ++y) {
    const auto lo = std::max<Eigen::Index>(0, y - ry);
    const auto hi = std::min<Eigen::Index>(H - 1, y + ry);
    out.row(y) = horiz.row(lo);
    for (auto j = lo + 1; j <= hi; ++j) out.row(y) += horiz.row(j);
  }
  return out;
}

/// Angular offset of a sub-aperture view from the central view, in grid
/// steps. `du` is horizontal (columns), `dv` vertical (rows).
struct AngularOffset {
  double du = 0.0;
  double dv = 0.0;
};

/// Content seen at central pixel x appears at x - d * v in the view at
/// angular offset v, for parallax d > 0. Both the plane sweep and the
/// renderer read this constant so they agree on direction.
inline constexpr double kParallaxSign = -1.0;

/// M x N grid of sub-aperture images. Views are stored row-major in the
/// angular grid; the central view is ((M-1)/2, (N-1)/2).
class LightField {
 public:
  LightField() = default;
  LightField(int rows, int cols, std::vector<Image> views);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int height() const { return views_.empty() ? 0 : views_[0].height(); }
  int width() const { return views_.empty() ? 0 : views_[0].width(); }
  int n_channels() const { return views_.empty() ? 0 : views_[0].n_channels(); }

  const Image& view(int r, int c) const { return views_[static_cast<std::size_t>(r * cols_ + c)]; }
  const Image& central() const { return view((rows_ - 1) / 2, (cols_ - 1) / 2); }
  const std::vector<Image>& views() const { return views_; }

  AngularOffset offset(int r, int c) const {
    return {static_cast<double>(c - (cols_ - 1) / 2), static_cast<double>(r - (rows_ - 1) / 2)};
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Image> views_;
};

/// Per-view parallax in pixels per unit angular offset.
class DisparityField {
 public:
  DisparityField() = default;
  DisparityField(int rows, int cols, std::vector<Plane> slices);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Plane& slice(int r, int c) const { return slices_[static_cast<std::size_t>(r * cols_ + c)]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Plane> slices_;
};

}  // namespace lffuse
