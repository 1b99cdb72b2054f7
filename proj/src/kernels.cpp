#include "voxseg/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace voxseg::kernels {

namespace {

inline std::size_t idx(const Grid& g, int x, int y, int z) {
  return static_cast<std::size_t>(x) +
         static_cast<std::size_t>(g.dims[0]) *
             (static_cast<std::size_t>(y) + static_cast<std::size_t>(g.dims[1]) * z);
}

inline double sample(const double* f, const Grid& g, int x, int y, int z) {
  return f[idx(g, reflect(x, g.dims[0]), reflect(y, g.dims[1]), reflect(z, g.dims[2]))];
}

inline double pm_point(const double* in, const Grid& g, int x, int y, int z, double K,
                       double dt, bool exponential) {
  const double c = in[idx(g, x, y, z)];
  const int dx[6] = {-1, 1, 0, 0, 0, 0};
  const int dy[6] = {0, 0, -1, 1, 0, 0};
  const int dz[6] = {0, 0, 0, 0, -1, 1};
  const double h[6] = {g.spacing[0], g.spacing[0], g.spacing[1],
                       g.spacing[1], g.spacing[2], g.spacing[2]};
  double flux = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double nb = sample(in, g, x + dx[k], y + dy[k], z + dz[k]);
    const double delta = nb - c;
    const double s = std::abs(delta) / (h[k] * K);
    const double cond = exponential ? std::exp(-s * s) : 1.0 / (1.0 + s * s);
    flux += cond * delta;
  }
  return c + dt * flux;
}

inline void normals_point(const double* in, const Grid& g, int x, int y, int z,
                          double& ox, double& oy, double& oz) {
  const double gx = (sample(in, g, x + 1, y, z) - sample(in, g, x - 1, y, z)) /
                    (2.0 * g.spacing[0]);
  const double gy = (sample(in, g, x, y + 1, z) - sample(in, g, x, y - 1, z)) /
                    (2.0 * g.spacing[1]);
  const double gz = (sample(in, g, x, y, z + 1) - sample(in, g, x, y, z - 1)) /
                    (2.0 * g.spacing[2]);
  const double mag = std::sqrt(gx * gx + gy * gy + gz * gz);
  const double denom = std::max(mag, kGradFloor);
  ox = gx / denom;
  oy = gy / denom;
  oz = gz / denom;
}

inline double curvature_point(const double* nx, const double* ny, const double* nz,
                              const Grid& g, int x, int y, int z) {
  const double dnx = (sample(nx, g, x + 1, y, z) - sample(nx, g, x - 1, y, z)) /
                     (2.0 * g.spacing[0]);
  const double dny = (sample(ny, g, x, y + 1, z) - sample(ny, g, x, y - 1, z)) /
                     (2.0 * g.spacing[1]);
  const double dnz = (sample(nz, g, x, y, z + 1) - sample(nz, g, x, y, z - 1)) /
                     (2.0 * g.spacing[2]);
  return dnx + dny + dnz;
}

inline double gradmag_point(const double* in, const Grid& g, int x, int y, int z) {
  const double gx = (sample(in, g, x + 1, y, z) - sample(in, g, x - 1, y, z)) /
                    (2.0 * g.spacing[0]);
  const double gy = (sample(in, g, x, y + 1, z) - sample(in, g, x, y - 1, z)) /
                    (2.0 * g.spacing[1]);
  const double gz = (sample(in, g, x, y, z + 1) - sample(in, g, x, y, z - 1)) /
                    (2.0 * g.spacing[2]);
  return std::sqrt(gx * gx + gy * gy + gz * gz);
}

inline double upwind_point(const double* f, const Grid& g, int x, int y, int z,
                           double a) {
  double s = 0.0;
  const int dx[3] = {1, 0, 0};
  const int dy[3] = {0, 1, 0};
  const int dz[3] = {0, 0, 1};
  for (int d = 0; d < 3; ++d) {
    const double h = g.spacing[d];
    const double c = f[idx(g, x, y, z)];
    const double m = sample(f, g, x - dx[d], y - dy[d], z - dz[d]);
    const double p = sample(f, g, x + dx[d], y + dy[d], z + dz[d]);
    const double dminus = (c - m) / h;
    const double dplus = (p - c) / h;
    if (a > 0.0) {
      const double t1 = std::min(dminus, 0.0);
      const double t2 = std::max(dplus, 0.0);
      s += t1 * t1 + t2 * t2;
    } else {
      const double t1 = std::max(dminus, 0.0);
      const double t2 = std::min(dplus, 0.0);
      s += t1 * t1 + t2 * t2;
    }
  }
  return std::sqrt(s);
}

inline double minmax_point(const double* in, const double* kappa, const Grid& g,
                           int x, int y, int z, double dt, int radius, double lo,
                           double hi) {
  const double c = in[idx(g, x, y, z)];
  double sum = 0.0;
  int n = 0;
  for (int dz = -radius; dz <= radius; ++dz) {
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        sum += sample(in, g, x + dx, y + dy, z + dz);
        ++n;
      }
    }
  }
  const double avg = sum / n;
  const double k = kappa[idx(g, x, y, z)];
  // Box average below the center value marks a locally bright structure,
  // which may only be carved down; above marks a pit, which may only fill.
  const double F = (avg <= c) ? std::min(k, 0.0) : std::max(k, 0.0);
  const double grad = upwind_point(in, g, x, y, z, F);
  return std::clamp(c + dt * F * grad, lo, hi);
}

inline double levelset_point(const double* phi, const double* force,
                             const double* kappa, const double* gradc, const Grid& g,
                             int x, int y, int z, double alpha, double beta,
                             double dt) {
  const std::size_t i = idx(g, x, y, z);
  const double a = -alpha * force[i];
  const double prop = a * upwind_point(phi, g, x, y, z, a);
  const double curv = beta * kappa[i] * gradc[i];
  return phi[i] + dt * (prop + curv);
}

}  // namespace

void pm_step(const double* in, double* out, const Grid& g, double K, double dt,
             bool exponential) {
#pragma omp parallel for collapse(2)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        out[idx(g, x, y, z)] = pm_point(in, g, x, y, z, K, dt, exponential);
      }
    }
  }
}

void normals(const double* in, double* nx, double* ny, double* nz, const Grid& g) {
#pragma omp parallel for collapse(2)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = idx(g, x, y, z);
        normals_point(in, g, x, y, z, nx[i], ny[i], nz[i]);
      }
    }
  }
}

void curvature(const double* nx, const double* ny, const double* nz, double* kappa,
               const Grid& g) {
#pragma omp parallel for collapse(2)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        kappa[idx(g, x, y, z)] = curvature_point(nx, ny, nz, g, x, y, z);
      }
    }
  }
}

void central_gradmag(const double* in, double* out, const Grid& g) {
#pragma omp parallel for collapse(2)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        out[idx(g, x, y, z)] = gradmag_point(in, g, x, y, z);
      }
    }
  }
}

double upwind_grad(const double* f, int x, int y, int z, const Grid& g, double a) {
  return upwind_point(f, g, x, y, z, a);
}

void minmax_step(const double* in, const double* kappa, double* out, const Grid& g,
                 double dt, int radius, double lo, double hi) {
#pragma omp parallel for collapse(2)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        out[idx(g, x, y, z)] = minmax_point(in, kappa, g, x, y, z, dt, radius, lo, hi);
      }
    }
  }
}

void levelset_step(const double* phi, const double* force, const double* kappa,
                   const double* gradc, double* out, const Grid& g, double alpha,
                   double beta, double dt, double band, double* sum_abs_delta,
                   double* max_abs_delta) {
  double sum = 0.0;
  double mx = 0.0;
#pragma omp parallel for collapse(2) reduction(+ : sum) reduction(max : mx)
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = idx(g, x, y, z);
        if (band > 0.0 && std::abs(phi[i]) > band) {
          out[i] = phi[i];
          continue;
        }
        out[i] = levelset_point(phi, force, kappa, gradc, g, x, y, z, alpha, beta, dt);
        const double d = std::abs(out[i] - phi[i]);
        sum += d;
        mx = std::max(mx, d);
      }
    }
  }
  *sum_abs_delta = sum;
  *max_abs_delta = mx;
}

namespace ref {

void pm_step(const double* in, double* out, const Grid& g, double K, double dt,
             bool exponential) {
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        out[idx(g, x, y, z)] = pm_point(in, g, x, y, z, K, dt, exponential);
}

void normals(const double* in, double* nx, double* ny, double* nz, const Grid& g) {
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = idx(g, x, y, z);
        normals_point(in, g, x, y, z, nx[i], ny[i], nz[i]);
      }
}

void curvature(const double* nx, const double* ny, const double* nz, double* kappa,
               const Grid& g) {
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        kappa[idx(g, x, y, z)] = curvature_point(nx, ny, nz, g, x, y, z);
}

void central_gradmag(const double* in, double* out, const Grid& g) {
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        out[idx(g, x, y, z)] = gradmag_point(in, g, x, y, z);
}

void minmax_step(const double* in, const double* kappa, double* out, const Grid& g,
                 double dt, int radius, double lo, double hi) {
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x)
        out[idx(g, x, y, z)] = minmax_point(in, kappa, g, x, y, z, dt, radius, lo, hi);
}

void levelset_step(const double* phi, const double* force, const double* kappa,
                   const double* gradc, double* out, const Grid& g, double alpha,
                   double beta, double dt, double band, double* sum_abs_delta,
                   double* max_abs_delta) {
  double sum = 0.0;
  double mx = 0.0;
  for (int z = 0; z < g.dims[2]; ++z)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        const std::size_t i = idx(g, x, y, z);
        if (band > 0.0 && std::abs(phi[i]) > band) {
          out[i] = phi[i];
          continue;
        }
        out[i] = levelset_point(phi, force, kappa, gradc, g, x, y, z, alpha, beta, dt);
        const double d = std::abs(out[i] - phi[i]);
        sum += d;
        mx = std::max(mx, d);
      }
  *sum_abs_delta = sum;
  *max_abs_delta = mx;
}

}  // namespace ref

}  // namespace voxseg::kernels
