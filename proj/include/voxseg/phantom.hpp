#ifndef VOXSEG_PHANTOM_HPP
#define VOXSEG_PHANTOM_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "voxseg/volume.hpp"

namespace voxseg {

enum class PhantomShape { ball, blob, ring };

/// Deterministic synthetic pre/post-contrast pair with ground truth.
struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{1.0, 1.0, 1.0};
  PhantomShape shape = PhantomShape::ball;
  std::array<double, 3> center{32.0, 32.0, 32.0};  ///< voxel coordinates
  double radius = 10.0;                            ///< physical units (cm)
  double contrast_lambda = 15.0;  ///< mean Poisson uptake in the enhancing region
  double noise_sigma = 2.0;       ///< Gaussian noise std on both volumes
  double base_intensity = 100.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct PhantomTriple {
  Volume pre;
  Volume post;
  BinaryMask truth;
};

/// pre = base + noise; post = pre + Poisson uptake (enhancing region only)
/// + independent noise. Truth is the full solid region; for ring it includes
/// the unenhanced core. Bit-identical for identical specs.
PhantomTriple generate(const PhantomSpec& spec);

/// 128 x 128 x 23 grid, (0.1, 0.1, 0.5) cm spacing, ball sized to about
/// 50 cm^3 of truth volume.
PhantomSpec paper_geometry_spec();

PhantomShape parse_shape(const std::string& name);
std::string shape_name(PhantomShape s);

/// Echo the spec as a key-value text file alongside generated volumes.
void write_spec_echo(const PhantomSpec& spec, const std::filesystem::path& path);

}  // namespace voxseg

#endif
