#include "voxseg/probmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace voxseg {

namespace {

constexpr double kRelCostTol = 1e-10;
constexpr int kMaxFitIterations = 500;

double log_gaussian(double d, double mu, double sigma) {
  const double z = (d - mu) / sigma;
  return -0.5 * z * z - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

double log_poisson_density(double d, double lambda, double bin_width) {
  // Poisson pmf on the nonnegative bin lattice, spread to a density.
  const double k = std::floor(d / bin_width);
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0) - std::log(bin_width);
}

/// Fit parameters in unconstrained coordinates:
/// t = (logit w, mu, ln sigma, ln lambda).
struct FitVars {
  std::array<double, 4> t;

  static FitVars from_model(const MixtureModel& m) {
    return {{std::log(m.w / (1.0 - m.w)), m.mu, std::log(m.sigma), std::log(m.lambda)}};
  }
  MixtureModel to_model(double bin_width) const {
    MixtureModel m;
    m.w = 1.0 / (1.0 + std::exp(-t[0]));
    m.mu = t[1];
    m.sigma = std::exp(t[2]);
    m.lambda = std::exp(t[3]);
    m.bin_width = bin_width;
    return m;
  }
};

void residuals(const FitVars& v, const Histogram& h, std::vector<double>& r) {
  const MixtureModel m = v.to_model(h.bin_width());
  const double norm = h.total * h.bin_width();
  for (int b = 0; b < h.bins(); ++b) {
    const double x = h.center(b);
    r[b] = m.density(x) - h.counts[b] / norm;
  }
}

double cost(const std::vector<double>& r) {
  double c = 0.0;
  for (double e : r) c += e * e;
  return c;
}

/// Solve a 4x4 linear system by Gaussian elimination with partial pivoting.
bool solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> b,
            std::array<double, 4>& x) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int row = col + 1; row < 4; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
    }
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int row = col + 1; row < 4; ++row) {
      const double f = a[row][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[row][k] -= f * a[col][k];
      b[row] -= f * b[col];
    }
  }
  for (int row = 3; row >= 0; --row) {
    double s = b[row];
    for (int k = row + 1; k < 4; ++k) s -= a[row][k] * x[k];
    x[row] = s / a[row][row];
  }
  return true;
}

FitVars initial_guess(const Histogram& h) {
  const double bw = h.bin_width();

  // Second moment of the nonpositive half, reflected around zero.
  double m2 = 0.0, mass = 0.0;
  for (int b = 0; b < h.bins(); ++b) {
    const double c = h.center(b);
    if (c <= 0.0) {
      m2 += h.counts[b] * c * c;
      mass += h.counts[b];
    }
  }
  double sigma0 = mass > 0.0 ? std::sqrt(m2 / mass) : bw;
  sigma0 = std::max(sigma0, 0.5 * bw);

  double w_mass = 0.0;
  for (int b = 0; b < h.bins(); ++b) {
    if (h.center(b) <= 2.0 * sigma0) w_mass += h.counts[b];
  }
  double w0 = std::clamp(w_mass / h.total, 0.05, 0.99);

  // Positive-side mass not explained by the Gaussian, weighted by bin index.
  double num = 0.0, den = 0.0;
  for (int b = 0; b < h.bins(); ++b) {
    const double c = h.center(b);
    if (c <= 0.0) continue;
    const double gauss = w0 * h.total * bw * std::exp(log_gaussian(c, 0.0, sigma0));
    const double resid = std::max(h.counts[b] - gauss, 0.0);
    num += resid * std::floor(c / bw);
    den += resid;
  }
  double lambda0;
  if (den > 0.0) {
    lambda0 = num / den;
  } else {
    num = den = 0.0;
    for (int b = 0; b < h.bins(); ++b) {
      const double c = h.center(b);
      if (c <= 0.0) continue;
      num += h.counts[b] * std::floor(c / bw);
      den += h.counts[b];
    }
    lambda0 = den > 0.0 ? num / den : 1.0;
  }
  lambda0 = std::max(lambda0, 0.5);

  MixtureModel m0;
  m0.w = w0;
  m0.mu = 0.0;
  m0.sigma = sigma0;
  m0.lambda = lambda0;
  m0.bin_width = bw;
  return FitVars::from_model(m0);
}

}  // namespace

double MixtureModel::gaussian_density(double d) const {
  return std::exp(log_gaussian(d, mu, sigma));
}

double MixtureModel::poisson_density(double d) const {
  if (d < 0.0) return 0.0;
  return std::exp(log_poisson_density(d, lambda, bin_width));
}

double MixtureModel::density(double d) const {
  return w * gaussian_density(d) + (1.0 - w) * poisson_density(d);
}

Histogram build_histogram(const Volume& diff, int num_bins) {
  if (num_bins < 8) throw ParamError("build_histogram: num_bins must be >= 8");
  if (!diff.all_finite()) {
    throw NumericalError("build_histogram: difference image contains non-finite values");
  }
  const double lo = diff.min_value();
  const double hi = diff.max_value();
  if (!(hi > lo)) {
    throw ParamError("build_histogram: constant difference image, mixture cannot be fit");
  }

  Histogram h;
  h.bin_edges.resize(num_bins + 1);
  const double width = (hi - lo) / num_bins;
  for (int b = 0; b <= num_bins; ++b) h.bin_edges[b] = lo + b * width;
  h.counts.assign(num_bins, 0.0);

  const long long n = static_cast<long long>(diff.size());
#pragma omp parallel
  {
    std::vector<double> local(num_bins, 0.0);
#pragma omp for nowait
    for (long long i = 0; i < n; ++i) {
      int b = static_cast<int>((diff[i] - lo) / width);
      b = std::clamp(b, 0, num_bins - 1);
      local[b] += 1.0;
    }
#pragma omp critical
    for (int b = 0; b < num_bins; ++b) h.counts[b] += local[b];
  }
  h.total = static_cast<double>(n);
  return h;
}

MixtureModel fit_mixture(const Histogram& h) {
  const int nb = h.bins();
  if (nb < 8) throw ParamError("fit_mixture: histogram needs at least 8 bins");
  bool has_nonpos = false, has_pos = false;
  for (int b = 0; b < nb; ++b) {
    if (h.counts[b] <= 0.0) continue;
    (h.center(b) <= 0.0 ? has_nonpos : has_pos) = true;
  }
  if (!has_nonpos || !has_pos) {
    throw FitError("fit_mixture: histogram lacks counts on one side of zero",
                   MixtureModel{});
  }

  FitVars vars = initial_guess(h);
  std::vector<double> r(nb), r_trial(nb);
  residuals(vars, h, r);
  double c = cost(r);
  if (!std::isfinite(c)) {
    throw FitError("fit_mixture: non-finite cost at the initial guess",
                   vars.to_model(h.bin_width()));
  }

  double damping = 1e-3;
  for (int iter = 0; iter < kMaxFitIterations; ++iter) {
    // Central-difference Jacobian.
    std::array<std::vector<double>, 4> jac;
    for (int p = 0; p < 4; ++p) {
      const double step = 1e-6 * std::max(1.0, std::abs(vars.t[p]));
      FitVars vp = vars, vm = vars;
      vp.t[p] += step;
      vm.t[p] -= step;
      std::vector<double> rp(nb), rm(nb);
      residuals(vp, h, rp);
      residuals(vm, h, rm);
      jac[p].resize(nb);
      for (int b = 0; b < nb; ++b) jac[p][b] = (rp[b] - rm[b]) / (2.0 * step);
    }

    std::array<std::array<double, 4>, 4> jtj{};
    std::array<double, 4> jtr{};
    for (int p = 0; p < 4; ++p) {
      for (int q = p; q < 4; ++q) {
        double s = 0.0;
        for (int b = 0; b < nb; ++b) s += jac[p][b] * jac[q][b];
        jtj[p][q] = jtj[q][p] = s;
      }
      double s = 0.0;
      for (int b = 0; b < nb; ++b) s += jac[p][b] * r[b];
      jtr[p] = s;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 20 && !accepted; ++attempt) {
      auto a = jtj;
      for (int p = 0; p < 4; ++p) a[p][p] += damping * std::max(jtj[p][p], 1e-12);
      std::array<double, 4> delta{};
      std::array<double, 4> rhs{-jtr[0], -jtr[1], -jtr[2], -jtr[3]};
      if (!solve4(a, rhs, delta)) {
        damping *= 10.0;
        continue;
      }
      FitVars trial = vars;
      for (int p = 0; p < 4; ++p) trial.t[p] += delta[p];
      residuals(trial, h, r_trial);
      const double c_trial = cost(r_trial);
      if (std::isfinite(c_trial) && c_trial <= c) {
        const double rel = (c - c_trial) / std::max(c, 1e-300);
        vars = trial;
        std::swap(r, r_trial);
        c = c_trial;
        damping = std::max(damping * 0.1, 1e-12);
        accepted = true;
        if (rel < kRelCostTol) iter = kMaxFitIterations;  // converged
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) break;  // no further progress possible
  }

  MixtureModel m = vars.to_model(h.bin_width());
  m.rms_residual = std::sqrt(c / nb);
  if (m.w >= 1.0 - 1e-3 || m.w <= 1e-3) {
    std::ostringstream os;
    os << "fit_mixture: mixing weight hit boundary (w = " << m.w
       << "); histogram has no resolvable contrast component";
    throw FitError(os.str(), m);
  }
  if (!(m.sigma > 0.0) || !(m.lambda > 0.0) || !std::isfinite(m.sigma) ||
      !std::isfinite(m.lambda) || !std::isfinite(m.mu)) {
    throw FitError("fit_mixture: fit diverged to invalid parameters", m);
  }
  return m;
}

double posterior_tumor(const MixtureModel& m, double d) {
  if (d < 0.0) return 0.0;
  const double lg = std::log(m.w) + log_gaussian(d, m.mu, m.sigma);
  const double lp = std::log(1.0 - m.w) + log_poisson_density(d, m.lambda, m.bin_width);
  return 1.0 / (1.0 + std::exp(lg - lp));
}

double posterior_threshold(const MixtureModel& m, double dmax) {
  const int scan_points = 4096;
  double lo = -1.0, hi = -1.0;
  if (posterior_tumor(m, 0.0) >= 0.5) {
    return 0.0;
  }
  for (int i = 1; i <= scan_points; ++i) {
    const double d = dmax * i / scan_points;
    if (posterior_tumor(m, d) >= 0.5) {
      lo = dmax * (i - 1) / scan_points;
      hi = d;
      break;
    }
  }
  if (hi < 0.0) {
    throw NoThresholdError(
        "posterior never reaches 0.5 on [0, max]; no contrast class present");
  }
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (posterior_tumor(m, mid) >= 0.5 ? hi : lo) = mid;
  }
  return hi;
}

ProbField probability_map(const MixtureModel& m, const Volume& diff) {
  if (!diff.all_finite()) {
    throw NumericalError("probability_map: difference image contains non-finite values");
  }
  const double dstar = posterior_threshold(m, diff.max_value());

  ProbField out;
  out.map = Volume(diff.dims(), diff.spacing());
  const long long n = static_cast<long long>(diff.size());
#pragma omp parallel for
  for (long long i = 0; i < n; ++i) {
    out.map[i] = 2.0 * posterior_tumor(m, diff[i]) - 1.0;
  }
  out.threshold_dstar = dstar;
  return out;
}

void write_model(const MixtureModel& m, double threshold_dstar,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open model file for writing: " + path.string());
  out.precision(17);
  out << "w = " << m.w << "\n";
  out << "mu = " << m.mu << "\n";
  out << "sigma = " << m.sigma << "\n";
  out << "lambda = " << m.lambda << "\n";
  out << "bin_width = " << m.bin_width << "\n";
  out << "threshold_dstar = " << threshold_dstar << "\n";
  out << "rms_residual = " << m.rms_residual << "\n";
}

StoredModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model file: " + path.string());
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string key, eq;
    double value;
    if (is >> key >> eq >> value && eq == "=") kv[key] = value;
  }
  for (const char* key : {"w", "mu", "sigma", "lambda", "bin_width", "threshold_dstar"}) {
    if (!kv.count(key)) throw FormatError("model file missing key: " + std::string(key));
  }
  StoredModel s;
  s.model.w = kv["w"];
  s.model.mu = kv["mu"];
  s.model.sigma = kv["sigma"];
  s.model.lambda = kv["lambda"];
  s.model.bin_width = kv["bin_width"];
  s.model.rms_residual = kv.count("rms_residual") ? kv["rms_residual"] : 0.0;
  s.threshold_dstar = kv["threshold_dstar"];
  return s;
}

void write_histogram_csv(const Histogram& h, const MixtureModel* m,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open histogram CSV for writing: " + path.string());
  out.precision(17);
  out << "bin_center,count,model_density\n";
  for (int b = 0; b < h.bins(); ++b) {
    out << h.center(b) << "," << h.counts[b] << ","
        << (m ? m->density(h.center(b)) : 0.0) << "\n";
  }
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open histogram CSV: " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> centers, counts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string field;
    std::getline(is, field, ',');
    centers.push_back(std::stod(field));
    std::getline(is, field, ',');
    counts.push_back(std::stod(field));
  }
  if (centers.size() < 8) throw FormatError("histogram CSV needs at least 8 bins");
  const double bw = centers[1] - centers[0];
  if (!(bw > 0.0)) throw FormatError("histogram CSV bin centers must be ascending");
  Histogram h;
  h.bin_edges.resize(centers.size() + 1);
  for (std::size_t b = 0; b < centers.size(); ++b) h.bin_edges[b] = centers[b] - 0.5 * bw;
  h.bin_edges.back() = centers.back() + 0.5 * bw;
  h.counts = counts;
  h.total = 0.0;
  for (double c : counts) h.total += c;
  if (!(h.total > 0.0)) throw FormatError("histogram CSV has zero total count");
  return h;
}

}  // namespace voxseg
