#ifndef VOXSEG_TEST_UTIL_HPP
#define VOXSEG_TEST_UTIL_HPP

#include <filesystem>
#include <string>

#include "voxseg/rng.hpp"
#include "voxseg/volume.hpp"

namespace voxseg::test {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("voxseg_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

inline Volume random_volume(Dims dims, Spacing spacing, std::uint64_t seed,
                            double lo = 0.0, double hi = 1.0) {
  Volume v(dims, spacing);
  Rng rng(seed);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

/// Digitized ball mask: voxel centers with |x - c|^2 <= r^2 in voxel units.
inline BinaryMask ball_mask(Dims dims, Spacing spacing, double cx, double cy, double cz,
                            double r_voxels) {
  BinaryMask m(dims, spacing);
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        const double dx = x - cx, dy = y - cy, dz = z - cz;
        m.set(x, y, z, dx * dx + dy * dy + dz * dz <= r_voxels * r_voxels);
      }
    }
  }
  return m;
}

}  // namespace voxseg::test

#endif
