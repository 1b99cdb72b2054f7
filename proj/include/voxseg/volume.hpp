#ifndef VOXSEG_VOLUME_HPP
#define VOXSEG_VOLUME_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "voxseg/errors.hpp"

namespace voxseg {

using Dims = std::array<int, 3>;
using Spacing = std::array<double, 3>;  // cm per voxel along x, y, z

inline std::size_t voxel_count(const Dims& d) {
  return static_cast<std::size_t>(d[0]) * d[1] * d[2];
}

/// Dense 3D scalar grid, x-fastest storage, physical voxel spacing in cm.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing, double fill = 0.0);
  Volume(Dims dims, Spacing spacing, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
  }
  double& at(int x, int y, int z) { return data_[index(x, y, z)]; }
  double at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double min_value() const;
  double max_value() const;
  bool all_finite() const;

  bool same_grid(const Volume& other) const;

 private:
  Dims dims_{0, 0, 0};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<double> data_;
};

/// Boolean voxel membership on the same grid layout as Volume.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(Dims dims, Spacing spacing, bool fill = false);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  std::size_t size() const { return bits_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_[1]) * z);
  }
  std::vector<std::uint8_t>& bits() { return bits_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  void set(int x, int y, int z, bool v) { bits_[index(x, y, z)] = v ? 1 : 0; }
  bool get(int x, int y, int z) const { return bits_[index(x, y, z)] != 0; }
  bool get(std::size_t i) const { return bits_[i] != 0; }

  std::size_t count_true() const;
  bool same_grid(const BinaryMask& other) const;

 private:
  Dims dims_{0, 0, 0};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<std::uint8_t> bits_;  // 0 or 1
};

/// Crop box: lo inclusive, hi exclusive, in voxel indices.
struct VoxelRegion {
  Dims lo{0, 0, 0};
  Dims hi{0, 0, 0};
};

/// Voxel-by-voxel post minus pre. Grids must match exactly.
Volume difference(const Volume& post, const Volume& pre);

/// Sub-volume extraction; spacing preserved.
Volume crop(const Volume& v, const VoxelRegion& r);

/// Physical volume of the mask in cm^3.
double mask_volume_cm3(const BinaryMask& m);

}  // namespace voxseg

#endif
