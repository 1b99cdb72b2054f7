#include "voxseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace voxseg {

namespace {

void check_dims_spacing(const Dims& d, const Spacing& s) {
  if (d[0] <= 0 || d[1] <= 0 || d[2] <= 0) {
    std::ostringstream os;
    os << "dims must be positive, got (" << d[0] << ", " << d[1] << ", " << d[2] << ")";
    throw ParamError(os.str());
  }
  for (double c : s) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ParamError("spacing components must be strictly positive and finite");
    }
  }
}

}  // namespace

Volume::Volume(Dims dims, Spacing spacing, double fill)
    : dims_(dims), spacing_(spacing), data_(voxel_count(dims), fill) {
  check_dims_spacing(dims, spacing);
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<double> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_dims_spacing(dims, spacing);
  if (data_.size() != voxel_count(dims)) {
    throw ParamError("data length does not equal nx*ny*nz");
  }
}

double Volume::min_value() const {
  return *std::min_element(data_.begin(), data_.end());
}

double Volume::max_value() const {
  return *std::max_element(data_.begin(), data_.end());
}

bool Volume::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Volume::same_grid(const Volume& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_;
}

BinaryMask::BinaryMask(Dims dims, Spacing spacing, bool fill)
    : dims_(dims), spacing_(spacing), bits_(voxel_count(dims), fill ? 1 : 0) {
  check_dims_spacing(dims, spacing);
}

std::size_t BinaryMask::count_true() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits_) n += b;
  return n;
}

bool BinaryMask::same_grid(const BinaryMask& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_;
}

Volume difference(const Volume& post, const Volume& pre) {
  if (!post.same_grid(pre)) {
    throw ShapeError("difference: dims or spacing mismatch between post and pre");
  }
  Volume out(post.dims(), post.spacing());
  const std::size_t n = post.size();
#pragma omp parallel for
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    out[i] = post[i] - pre[i];
  }
  return out;
}

Volume crop(const Volume& v, const VoxelRegion& r) {
  for (int d = 0; d < 3; ++d) {
    if (r.lo[d] < 0 || r.hi[d] > v.dims()[d] || r.lo[d] > r.hi[d]) {
      std::ostringstream os;
      os << "crop: region out of bounds on axis " << d << " (lo " << r.lo[d]
         << ", hi " << r.hi[d] << ", dim " << v.dims()[d] << ")";
      throw ShapeError(os.str());
    }
  }
  Dims nd{r.hi[0] - r.lo[0], r.hi[1] - r.lo[1], r.hi[2] - r.lo[2]};
  Volume out(nd, v.spacing());
  for (int z = 0; z < nd[2]; ++z) {
    for (int y = 0; y < nd[1]; ++y) {
      for (int x = 0; x < nd[0]; ++x) {
        out.at(x, y, z) = v.at(x + r.lo[0], y + r.lo[1], z + r.lo[2]);
      }
    }
  }
  return out;
}

double mask_volume_cm3(const BinaryMask& m) {
  const Spacing& s = m.spacing();
  return static_cast<double>(m.count_true()) * s[0] * s[1] * s[2];
}

}  // namespace voxseg
