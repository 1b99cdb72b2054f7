#include "voxseg/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "voxseg/rng.hpp"

namespace voxseg {

namespace {

constexpr double kRingShellFraction = 0.3;   // shell thickness as fraction of radius
constexpr double kBlobAmplitude = 0.15;      // boundary perturbation amplitude

/// Physical radius from the phantom center, per voxel.
double radial_distance(const PhantomSpec& s, int x, int y, int z) {
  const double dx = (x - s.center[0]) * s.spacing[0];
  const double dy = (y - s.center[1]) * s.spacing[1];
  const double dz = (z - s.center[2]) * s.spacing[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Direction-dependent boundary radius for the blob shape.
double local_radius(const PhantomSpec& s, int x, int y, int z, double r) {
  if (s.shape != PhantomShape::blob || r == 0.0) return s.radius;
  const double dx = (x - s.center[0]) * s.spacing[0];
  const double dy = (y - s.center[1]) * s.spacing[1];
  const double dz = (z - s.center[2]) * s.spacing[2];
  const double azimuth = std::atan2(dy, dx);
  const double polar = std::acos(std::clamp(dz / r, -1.0, 1.0));
  return s.radius * (1.0 + kBlobAmplitude * std::sin(3.0 * azimuth) *
                               std::sin(2.0 * polar));
}

bool in_truth(const PhantomSpec& s, int x, int y, int z) {
  const double r = radial_distance(s, x, y, z);
  return r <= local_radius(s, x, y, z, r);
}

bool in_enhancing(const PhantomSpec& s, int x, int y, int z) {
  const double r = radial_distance(s, x, y, z);
  const double rb = local_radius(s, x, y, z, r);
  if (r > rb) return false;
  if (s.shape != PhantomShape::ring) return true;
  return r > (1.0 - kRingShellFraction) * rb;  // only the shell enhances
}

}  // namespace

void PhantomSpec::validate() const {
  for (int d = 0; d < 3; ++d) {
    if (dims[d] <= 0) throw ParamError("phantom: dims must be positive");
    if (!(spacing[d] > 0.0)) throw ParamError("phantom: spacing must be positive");
  }
  if (!(radius > 0.0)) throw ParamError("phantom: radius must be positive");
  if (contrast_lambda < 0.0) throw ParamError("phantom: contrast_lambda must be >= 0");
  if (noise_sigma < 0.0) throw ParamError("phantom: noise_sigma must be >= 0");
  const double extent = radius * (shape == PhantomShape::blob ? 1.0 + kBlobAmplitude : 1.0);
  for (int d = 0; d < 3; ++d) {
    const double r_vox = extent / spacing[d];
    if (center[d] - r_vox < 2.0 || center[d] + r_vox > dims[d] - 3.0) {
      std::ostringstream os;
      os << "phantom: shape does not fit axis " << d << " with a 2-voxel margin";
      throw ParamError(os.str());
    }
  }
}

PhantomTriple generate(const PhantomSpec& spec) {
  spec.validate();
  const std::size_t n = voxel_count(spec.dims);

  PhantomTriple out{
      Volume(spec.dims, spec.spacing, spec.base_intensity),
      Volume(spec.dims, spec.spacing, spec.base_intensity),
      BinaryMask(spec.dims, spec.spacing),
  };

  std::vector<std::uint8_t> enhancing(n, 0);
  std::size_t i = 0;
  for (int z = 0; z < spec.dims[2]; ++z) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int x = 0; x < spec.dims[0]; ++x, ++i) {
        out.truth.bits()[i] = in_truth(spec, x, y, z) ? 1 : 0;
        enhancing[i] = in_enhancing(spec, x, y, z) ? 1 : 0;
      }
    }
  }

  // Single stream, fixed draw order: pre noise, post noise, then uptake.
  Rng rng(spec.seed);
  if (spec.noise_sigma > 0.0) {
    for (i = 0; i < n; ++i) out.pre[i] += spec.noise_sigma * rng.gaussian();
    for (i = 0; i < n; ++i) out.post[i] += spec.noise_sigma * rng.gaussian();
  }
  if (spec.contrast_lambda > 0.0) {
    for (i = 0; i < n; ++i) {
      if (enhancing[i]) {
        out.post[i] += static_cast<double>(rng.poisson(spec.contrast_lambda));
      }
    }
  }
  // post rides on pre's noise plus its own.
  for (i = 0; i < n; ++i) out.post[i] += out.pre[i] - spec.base_intensity;
  return out;
}

PhantomSpec paper_geometry_spec() {
  PhantomSpec s;
  s.dims = {128, 128, 23};
  s.spacing = {0.1, 0.1, 0.5};
  s.shape = PhantomShape::ball;
  s.center = {63.5, 63.5, 11.0};
  // (4/3) pi r^3 = 50 cm^3  ->  r = 2.2854 cm
  s.radius = std::cbrt(50.0 * 3.0 / (4.0 * std::numbers::pi));
  s.contrast_lambda = 15.0;
  s.noise_sigma = 2.0;
  s.base_intensity = 100.0;
  s.seed = 42;
  return s;
}

PhantomShape parse_shape(const std::string& name) {
  if (name == "ball") return PhantomShape::ball;
  if (name == "blob") return PhantomShape::blob;
  if (name == "ring") return PhantomShape::ring;
  throw ParamError("phantom: unknown shape \"" + name + "\" (ball, blob, ring)");
}

std::string shape_name(PhantomShape s) {
  switch (s) {
    case PhantomShape::ball: return "ball";
    case PhantomShape::blob: return "blob";
    case PhantomShape::ring: return "ring";
  }
  return "";
}

void write_spec_echo(const PhantomSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open spec echo file: " + path.string());
  out.precision(17);
  out << "dims = " << spec.dims[0] << " " << spec.dims[1] << " " << spec.dims[2] << "\n";
  out << "spacing = " << spec.spacing[0] << " " << spec.spacing[1] << " "
      << spec.spacing[2] << "\n";
  out << "shape = " << shape_name(spec.shape) << "\n";
  out << "center = " << spec.center[0] << " " << spec.center[1] << " "
      << spec.center[2] << "\n";
  out << "radius = " << spec.radius << "\n";
  out << "contrast_lambda = " << spec.contrast_lambda << "\n";
  out << "noise_sigma = " << spec.noise_sigma << "\n";
  out << "base_intensity = " << spec.base_intensity << "\n";
  out << "seed = " << spec.seed << "\n";
}

}  // namespace voxseg
