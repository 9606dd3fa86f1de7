#include "lffuse/image.hpp"

#include "lffuse/error.hpp"

namespace lffuse {

LightField::LightField(int rows, int cols, std::vector<Image> views)
    : rows_(rows), cols_(cols), views_(std::move(views)) {
  if (rows < 1 || cols < 1 || views_.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorCode::Precondition, "light field view count does not match its angular grid");
  for (const auto& v : views_) {
    if (v.height() != views_[0].height() || v.width() != views_[0].width() ||
        v.n_channels() != views_[0].n_channels())
      throw Error(ErrorCode::Precondition, "light field views differ in shape");
  }
}

DisparityField::DisparityField(int rows, int cols, std::vector<Plane> slices)
    : rows_(rows), cols_(cols), slices_(std::move(slices)) {
  if (rows < 1 || cols < 1 || slices_.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorCode::Precondition, "disparity field slice count does not match its angular grid");
}

}  // namespace lffuse
