#include "voxseg/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voxseg/kernels.hpp"

namespace voxseg {

namespace {

double min_spacing(const Spacing& s) { return std::min({s[0], s[1], s[2]}); }

void require_finite(const Volume& v, const char* op) {
  if (!v.all_finite()) {
    throw NumericalError(std::string(op) + ": input volume contains non-finite values");
  }
}

void clamp_range(std::vector<double>& data, double lo, double hi) {
#pragma omp parallel for
  for (long long i = 0; i < static_cast<long long>(data.size()); ++i) {
    data[i] = std::clamp(data[i], lo, hi);
  }
}

}  // namespace

void DiffusionParams::validate() const {
  if (!(conductance_k > 0.0)) throw ParamError("perona_malik: conductance K must be > 0");
  if (!(time_step > 0.0) || time_step > 1.0 / 6.0) {
    std::ostringstream os;
    os << "perona_malik: time step " << time_step
       << " outside stable range (0, 1/6] for the explicit 3D scheme";
    throw ParamError(os.str());
  }
  if (iterations < 1) throw ParamError("perona_malik: iterations must be >= 1");
}

DiffusionParams default_diffusion_params(const Volume& v) {
  DiffusionParams p;
  const double range = v.max_value() - v.min_value();
  p.conductance_k = range > 0.0 ? 0.1 * range : 1.0;
  return p;
}

void MinMaxParams::validate(const Spacing& spacing) const {
  const double h = min_spacing(spacing);
  const double bound = 0.25 * h * h / 3.0;
  const double dt = effective_dt(spacing);
  if (!(dt > 0.0) || dt > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "minmax_flow: time step " << dt << " outside stable range (0, " << bound
       << "] for spacing " << h;
    throw ParamError(os.str());
  }
  if (iterations < 1) throw ParamError("minmax_flow: iterations must be >= 1");
  if (stencil_radius < 1) throw ParamError("minmax_flow: stencil radius must be >= 1");
}

double MinMaxParams::effective_dt(const Spacing& spacing) const {
  if (time_step > 0.0) return time_step;
  const double h = min_spacing(spacing);
  return 0.25 * h * h / 3.0;
}

Volume perona_malik(const Volume& v, const DiffusionParams& p) {
  require_finite(v, "perona_malik");
  p.validate();

  const double lo = v.min_value();
  const double hi = v.max_value();
  const kernels::Grid grid{v.dims(), v.spacing()};
  const bool exponential = p.conductance_fn == ConductanceFn::exponential;

  Volume cur = v;
  Volume next(v.dims(), v.spacing());
  for (int it = 0; it < p.iterations; ++it) {
    kernels::pm_step(cur.data().data(), next.data().data(), grid, p.conductance_k,
                     p.time_step, exponential);
    clamp_range(next.data(), lo, hi);
    std::swap(cur, next);
  }
  return cur;
}

Volume minmax_flow(const Volume& v, const MinMaxParams& p) {
  require_finite(v, "minmax_flow");
  p.validate(v.spacing());

  const double lo = v.min_value();
  const double hi = v.max_value();
  const kernels::Grid grid{v.dims(), v.spacing()};
  const double dt = p.effective_dt(v.spacing());
  const std::size_t n = v.size();

  Volume cur = v;
  Volume next(v.dims(), v.spacing());
  std::vector<double> nx(n), ny(n), nz(n), kappa(n);
  for (int it = 0; it < p.iterations; ++it) {
    kernels::normals(cur.data().data(), nx.data(), ny.data(), nz.data(), grid);
    kernels::curvature(nx.data(), ny.data(), nz.data(), kappa.data(), grid);
    kernels::minmax_step(cur.data().data(), kappa.data(), next.data().data(), grid, dt,
                         p.stencil_radius, lo, hi);
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace voxseg
