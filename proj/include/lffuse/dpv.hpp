#pragma once

#include "lffuse/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lffuse {

/// What the plane labels of a volume measure.
enum class LabelUnit : std::uint8_t {
  SourceDisparity = 0,  ///< capture-specific parallax, pixels per angular step
  WorldDepth = 1,       ///< camera-frame z in world units
  InverseDepth = 2,     ///< 1 / z in world units
};

const char* to_string(LabelUnit unit);

/// H x W x K probability volume over plane hypotheses. Stored plane-major:
/// plane(k) is a contiguous H x W grid. Immutable once built.
class Dpv {
 public:
  Dpv() = default;

  /// Validates labels (strictly monotone, finite) and probabilities (>= 0,
  /// finite). Per-pixel sums decide the normalized flag.
  Dpv(Eigen::VectorXd labels, LabelUnit unit, std::vector<Plane> planes);

  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int n_planes() const { return static_cast<int>(labels_.size()); }

  const Eigen::VectorXd& labels() const { return labels_; }
  LabelUnit unit() const { return unit_; }
  bool ascending() const { return ascending_; }
  bool normalized() const { return normalized_; }

  const Plane& plane(int k) const { return planes_[static_cast<std::size_t>(k)]; }
  const std::vector<Plane>& planes() const { return planes_; }

  /// Per-pixel probability mass summed over planes.
  Plane mass() const;

  bool operator==(const Dpv& other) const;

 private:
  Eigen::VectorXd labels_;
  LabelUnit unit_ = LabelUnit::SourceDisparity;
  bool ascending_ = true;
  bool normalized_ = false;
  std::vector<Plane> planes_;
};

struct NormalizeResult {
  Dpv volume;
  long zero_mass_pixels = 0;
};

/// Rescales every pixel's distribution to unit mass. Pixels with no mass
/// become uniform and are counted.
NormalizeResult normalize_dpv(const Dpv& dpv);

/// Probability-weighted mean label per pixel. Requires a normalized volume;
/// the result carries the volume's label unit.
DisparityMap expected_label(const Dpv& dpv);

/// Index of the most probable plane per pixel. Ties go to the nearer plane
/// (larger disparity or inverse depth, smaller world depth).
PlaneT<int> argmax_plane(const Dpv& dpv);

/// Raises Error(Frame) unless dpv.unit() == expected.
void require_unit(const Dpv& dpv, LabelUnit expected, const char* stage);

/// Labels uniformly spaced from `first` to `last` inclusive.
Eigen::VectorXd uniform_labels(double first, double last, int count);

// DPV1 container: "DPV1", u32 H, W, K, u8 unit, f32 labels[K], f32 probs
// plane-major, all little-endian.
void write_dpv(std::ostream& os, const Dpv& dpv);
Dpv read_dpv(std::istream& is);
void write_dpv_file(const std::string& path, const Dpv& dpv);
Dpv read_dpv_file(const std::string& path);

}  // namespace lffuse
