#ifndef VOXSEG_FILTERS_HPP
#define VOXSEG_FILTERS_HPP

#include "voxseg/volume.hpp"

namespace voxseg {

enum class ConductanceFn { exponential, rational };

/// Perona-Malik edge-preserving diffusion parameters.
struct DiffusionParams {
  double conductance_k = 1.0;  ///< gradient-magnitude scale K
  double time_step = 0.125;    ///< must satisfy dt <= 1/6 (explicit 3D scheme)
  int iterations = 10;
  ConductanceFn conductance_fn = ConductanceFn::exponential;

  void validate() const;
};

/// K = 10% of the input intensity range, remaining fields at defaults.
DiffusionParams default_diffusion_params(const Volume& v);

/// Min/max curvature flow parameters.
struct MinMaxParams {
  double time_step = 0.0;  ///< 0 selects the stability bound h^2/12
  int iterations = 10;
  int stencil_radius = 1;

  void validate(const Spacing& spacing) const;
  double effective_dt(const Spacing& spacing) const;
};

/// Edge-preserving diffusion: I <- I + dt * div(g(|grad I|) grad I).
/// Output values lie within [min(v), max(v)].
Volume perona_malik(const Volume& v, const DiffusionParams& p);

/// Speckle-removing min/max curvature flow: I <- I + dt * F * |grad I|,
/// F switching between min(kappa,0) and max(kappa,0) on the local average.
/// Output values lie within [min(v), max(v)].
Volume minmax_flow(const Volume& v, const MinMaxParams& p);

}  // namespace voxseg

#endif
