#include "lffuse/dpv.hpp"

#include "lffuse/anchors.hpp"
#include "lffuse/error.hpp"
#include "lffuse/parallel.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lffuse {

const char* to_string(LabelUnit unit) {
  switch (unit) {
    case LabelUnit::SourceDisparity: return "source-disparity";
    case LabelUnit::WorldDepth: return "world-depth";
    case LabelUnit::InverseDepth: return "inverse-depth";
  }
  return "unknown";
}

const std::vector<AnchorObservation>& AnchorSet::view(ViewId id) const {
  static const std::vector<AnchorObservation> empty;
  auto it = observations.find(id);
  return it == observations.end() ? empty : it->second;
}

Dpv::Dpv(Eigen::VectorXd labels, LabelUnit unit, std::vector<Plane> planes)
    : labels_(std::move(labels)), unit_(unit), planes_(std::move(planes)) {
  const auto K = labels_.size();
  if (K < 1) throw Error(ErrorCode::InvalidVolume, "volume needs at least one plane");
  if (static_cast<Eigen::Index>(planes_.size()) != K)
    throw Error(ErrorCode::InvalidVolume, "plane count does not match label count");
  if (!labels_.allFinite()) throw Error(ErrorCode::InvalidVolume, "labels must be finite");
  ascending_ = K < 2 || labels_[1] > labels_[0];
  for (Eigen::Index k = 1; k < K; ++k) {
    const bool up = labels_[k] > labels_[k - 1];
    const bool down = labels_[k] < labels_[k - 1];
    if (!(ascending_ ? up : down))
      throw Error(ErrorCode::InvalidVolume, "labels must be strictly monotone");
  }
  const auto H = planes_[0].rows();
  const auto W = planes_[0].cols();
  for (const auto& p : planes_) {
    if (p.rows() != H || p.cols() != W)
      throw Error(ErrorCode::InvalidVolume, "planes differ in size");
    if (!p.allFinite()) throw Error(ErrorCode::InvalidVolume, "probabilities must be finite");
    if ((p < 0.0).any()) throw Error(ErrorCode::InvalidVolume, "negative probability");
  }
  normalized_ = ((mass() - 1.0).abs() <= 1e-6).all();
}

Plane Dpv::mass() const {
  Plane sum = Plane::Zero(height(), width());
  for (const auto& p : planes_) sum += p;
  return sum;
}

bool Dpv::operator==(const Dpv& other) const {
  if (unit_ != other.unit_ || labels_.size() != other.labels_.size() ||
      height() != other.height() || width() != other.width())
    return false;
  if (!(labels_.array() == other.labels_.array()).all()) return false;
  for (std::size_t k = 0; k < planes_.size(); ++k)
    if (!(planes_[k] == other.planes_[k]).all()) return false;
  return true;
}

NormalizeResult normalize_dpv(const Dpv& dpv) {
  const int K = dpv.n_planes();
  const Plane mass = dpv.mass();
  std::vector<Plane> planes(dpv.planes());
  long zero = 0;
  for (Eigen::Index y = 0; y < mass.rows(); ++y) {
    for (Eigen::Index x = 0; x < mass.cols(); ++x) {
      const double m = mass(y, x);
      if (m > 0.0) {
        for (auto& p : planes) p(y, x) /= m;
      } else {
        ++zero;
        for (auto& p : planes) p(y, x) = 1.0 / K;
      }
    }
  }
  return {Dpv(dpv.labels(), dpv.unit(), std::move(planes)), zero};
}

DisparityMap expected_label(const Dpv& dpv) {
  if (!dpv.normalized())
    throw Error(ErrorCode::Precondition, "expected_label needs a per-pixel normalized volume");
  DisparityMap out = DisparityMap::Zero(dpv.height(), dpv.width());
  for (int k = 0; k < dpv.n_planes(); ++k) out += dpv.plane(k) * dpv.labels()[k];
  return out;
}

PlaneT<int> argmax_plane(const Dpv& dpv) {
  const bool depth_unit = dpv.unit() == LabelUnit::WorldDepth;
  const auto& labels = dpv.labels();
  auto nearer = [&](int a, int b) { return depth_unit ? labels[a] < labels[b] : labels[a] > labels[b]; };
  PlaneT<int> best = PlaneT<int>::Zero(dpv.height(), dpv.width());
  for (int k = 1; k < dpv.n_planes(); ++k) {
    const Plane& p = dpv.plane(k);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      int& b = best.data()[i];
      const double cur = dpv.plane(b).data()[i];
      if (p.data()[i] > cur || (p.data()[i] == cur && nearer(k, b))) b = k;
    }
  }
  return best;
}

void require_unit(const Dpv& dpv, LabelUnit expected, const char* stage) {
  if (dpv.unit() != expected) {
    std::ostringstream os;
    os << stage << ": expected " << to_string(expected) << " labels, got " << to_string(dpv.unit());
    throw Error(ErrorCode::Frame, os.str());
  }
}

Eigen::VectorXd uniform_labels(double first, double last, int count) {
  if (count < 1) throw Error(ErrorCode::Parameter, "label count must be positive");
  if (count == 1) return Eigen::VectorXd::Constant(1, first);
  return Eigen::VectorXd::LinSpaced(count, first, last);
}

namespace {

constexpr std::array<char, 4> kDpvMagic{'D', 'P', 'V', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::Parse, "DPV1: truncated file");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void write_dpv(std::ostream& os, const Dpv& dpv) {
  os.write(kDpvMagic.data(), 4);
  put_u32(os, static_cast<std::uint32_t>(dpv.height()));
  put_u32(os, static_cast<std::uint32_t>(dpv.width()));
  put_u32(os, static_cast<std::uint32_t>(dpv.n_planes()));
  const auto tag = static_cast<char>(dpv.unit());
  os.write(&tag, 1);
  for (int k = 0; k < dpv.n_planes(); ++k) put_f32(os, static_cast<float>(dpv.labels()[k]));
  for (const auto& p : dpv.planes())
    for (Eigen::Index i = 0; i < p.size(); ++i) put_f32(os, static_cast<float>(p.data()[i]));
  if (!os) throw Error(ErrorCode::Io, "DPV1: write failed");
}

Dpv read_dpv(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kDpvMagic)
    throw Error(ErrorCode::Parse, "DPV1: bad magic");
  const auto H = get_u32(is);
  const auto W = get_u32(is);
  const auto K = get_u32(is);
  char tag = 0;
  if (!is.read(&tag, 1)) throw Error(ErrorCode::Parse, "DPV1: truncated header");
  if (tag < 0 || tag > 2) throw Error(ErrorCode::Parse, "DPV1: unknown unit tag");
  if (H == 0 || W == 0 || K == 0 || std::uint64_t(H) * W * K > (std::uint64_t(1) << 32))
    throw Error(ErrorCode::Parse, "DPV1: implausible dimensions");
  Eigen::VectorXd labels(K);
  for (std::uint32_t k = 0; k < K; ++k) labels[k] = get_f32(is);
  std::vector<Plane> planes(K, Plane(H, W));
  for (auto& p : planes)
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = get_f32(is);
  return Dpv(std::move(labels), static_cast<LabelUnit>(tag), std::move(planes));
}

void write_dpv_file(const std::string& path, const Dpv& dpv) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  write_dpv(os, dpv);
}

Dpv read_dpv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_dpv(is);
}

}  // namespace lffuse
