#ifndef VOXSEG_LEVELSET_HPP
#define VOXSEG_LEVELSET_HPP

#include <functional>
#include <optional>
#include <vector>

#include "voxseg/probmap.hpp"
#include "voxseg/volume.hpp"

namespace voxseg {

/// Evolution parameters. dt = 0 selects the largest CFL-stable step.
struct LevelSetParams {
  double alpha = 1.0;           ///< statistical propagation weight
  double beta = -1.0;           ///< curvature weight; < 0 selects 0.2 * min spacing
  double dt = 0.0;              ///< explicit time step; 0 = auto from CFL
  int max_iterations = 300;
  int reinit_interval = 25;
  double convergence_eps = -1.0;  ///< mean |dphi| stop threshold; < 0 selects 1e-4 * h
  double band_width = 0.0;        ///< narrow band radius (physical); 0 = full grid

  double effective_beta(const Spacing& s) const;
  double effective_dt(const Spacing& s, double max_force) const;
  double effective_eps(const Spacing& s) const;
  /// Throws ParamError if the CFL bound dt*(alpha*maxF/h + 6*beta/h^2) <= 0.9
  /// is violated.
  void validate(const Spacing& s, double max_force) const;
};

/// Per-iteration convergence record.
struct TraceRecord {
  int iteration = 0;
  std::size_t inside_count = 0;
  double mean_abs_delta = 0.0;
};

/// Diagnostics captured when a reinitialization runs inside step().
struct ReinitDiagnostics {
  int iteration = 0;
  std::size_t inside_before = 0;
  std::size_t inside_after = 0;
  double max_eikonal_deviation = 0.0;  ///< max | |grad phi| - 1 | within 3h of zero set
};

/// Evolution state: phi < 0 inside the segmented region.
struct LevelSetState {
  Volume phi;
  int iteration = 0;
  double last_delta = 0.0;  ///< mean |dphi| of the last step
  std::vector<TraceRecord> trace;
  std::optional<ReinitDiagnostics> last_reinit;
};

/// Signed distance (physical units) to the zero set of `field`, carrying the
/// sign of `field`. Sub-voxel zero crossings seed a fast-sweeping eikonal
/// solve. Throws NumericalError if the field is entirely one-signed.
Volume signed_distance(const Volume& field);

/// phi initialized to the signed distance of the probability map's zero set,
/// negative where map > 0 (tumor side).
LevelSetState initialize(const ProbField& prob, const LevelSetParams& params);

/// One explicit step of  dphi/dt = -alpha*F*|grad phi| + beta*kappa*|grad phi|.
/// Reinitializes phi to the signed distance of its own zero set every
/// reinit_interval iterations, recording diagnostics in last_reinit.
LevelSetState step(LevelSetState state, const ProbField& force,
                   const LevelSetParams& params);

/// Reset phi to the signed distance of its own zero set.
void reinitialize(LevelSetState& state);

using EvolveObserver = std::function<void(const LevelSetState&)>;

/// Repeats step() until max_iterations or mean |dphi| < convergence_eps.
LevelSetState evolve(LevelSetState state, const ProbField& force,
                     const LevelSetParams& params,
                     const EvolveObserver& observer = nullptr);

/// bits[i] = (phi[i] <= 0).
BinaryMask extract_mask(const LevelSetState& state);

std::size_t inside_count(const Volume& phi);

/// Max | |grad phi| - 1 | over voxels with min spacing < |phi| <= 3 * min
/// spacing, with the gradient taken by the one-sided upwind stencil of the
/// sweeping solver (the innermost layer is interpolated boundary data).
double eikonal_band_deviation(const Volume& phi);

}  // namespace voxseg

#endif
