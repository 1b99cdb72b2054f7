#ifndef VOXSEG_KERNELS_HPP
#define VOXSEG_KERNELS_HPP

#include "voxseg/volume.hpp"

namespace voxseg::kernels {

/// Grid geometry shared by all stencil kernels.
struct Grid {
  Dims dims;
  Spacing spacing;
};

/// Mirror (reflective) boundary index.
inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

/// Gradient magnitude floor used wherever a normal direction is needed.
inline constexpr double kGradFloor = 1e-8;

// OpenMP-parallel kernels. Each voxel of `out` depends only on the frozen
// `in` snapshot, so thread count never changes the result.

/// One explicit Perona-Malik diffusion step:
///   out = in + dt * sum_over_6_neighbors g(|delta|/h_d) * delta
/// g is evaluated on the physical-spacing gradient; the diffusion update
/// itself is in grid units so dt <= 1/6 gives an exact maximum principle.
void pm_step(const double* in, double* out, const Grid& g, double K, double dt,
             bool exponential);

/// Unit normal field n = grad(I) / max(|grad I|, floor), central differences.
void normals(const double* in, double* nx, double* ny, double* nz, const Grid& g);

/// Mean curvature kappa = div(n), central differences of the normal field.
void curvature(const double* nx, const double* ny, const double* nz, double* kappa,
               const Grid& g);

/// Central-difference gradient magnitude (physical spacing).
void central_gradmag(const double* in, double* out, const Grid& g);

/// Godunov upwind gradient magnitude for speed `a` in  u_t = a * |grad u|.
double upwind_grad(const double* f, int x, int y, int z, const Grid& g, double a);

/// One min/max flow step: out = clamp(in + dt * F * |grad in|_upwind, lo, hi)
/// with F = min(kappa,0) where the radius-R box average <= center value,
/// else max(kappa,0).
void minmax_step(const double* in, const double* kappa, double* out, const Grid& g,
                 double dt, int radius, double lo, double hi);

/// One level-set step: out = phi + dt * (-alpha*F*|grad phi|_upwind
///                                       + beta*kappa*|grad phi|_central).
/// Voxels with |phi| > band are frozen when band > 0. Accumulates the sum and
/// max of |out - phi| into the two result slots.
void levelset_step(const double* phi, const double* force, const double* kappa,
                   const double* gradc, double* out, const Grid& g, double alpha,
                   double beta, double dt, double band, double* sum_abs_delta,
                   double* max_abs_delta);

/// Straightforward serial loops with the same contracts, kept as the
/// reference implementation for tests and the seg_bench comparison.
namespace ref {
void pm_step(const double* in, double* out, const Grid& g, double K, double dt,
             bool exponential);
void normals(const double* in, double* nx, double* ny, double* nz, const Grid& g);
void curvature(const double* nx, const double* ny, const double* nz, double* kappa,
               const Grid& g);
void central_gradmag(const double* in, double* out, const Grid& g);
void minmax_step(const double* in, const double* kappa, double* out, const Grid& g,
                 double dt, int radius, double lo, double hi);
void levelset_step(const double* phi, const double* force, const double* kappa,
                   const double* gradc, double* out, const Grid& g, double alpha,
                   double beta, double dt, double band, double* sum_abs_delta,
                   double* max_abs_delta);
}  // namespace ref

}  // namespace voxseg::kernels

#endif
