#ifndef VOXSEG_PROBMAP_HPP
#define VOXSEG_PROBMAP_HPP

#include <filesystem>
#include <vector>

#include "voxseg/volume.hpp"

namespace voxseg {

/// Uniform-bin histogram of a difference image.
struct Histogram {
  std::vector<double> bin_edges;  ///< ascending, length bins+1
  std::vector<double> counts;     ///< length bins
  double total = 0.0;

  int bins() const { return static_cast<int>(counts.size()); }
  double bin_width() const { return bin_edges[1] - bin_edges[0]; }
  double center(int b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

Histogram build_histogram(const Volume& diff, int num_bins);

/// Gaussian (background) + Poisson (contrast uptake) mixture on the
/// difference-intensity axis. lambda is in units of histogram bins above
/// zero; bin_width converts the Poisson pmf to an intensity density.
struct MixtureModel {
  double w = 0.5;       ///< Gaussian mixing weight, in (0,1)
  double mu = 0.0;      ///< Gaussian mean
  double sigma = 1.0;   ///< Gaussian std, > 0
  double lambda = 1.0;  ///< Poisson rate in bin units, > 0
  double bin_width = 1.0;
  double rms_residual = 0.0;  ///< fit quality, filled by fit_mixture

  double gaussian_density(double d) const;
  /// Poisson component as an intensity density; zero for d < 0.
  double poisson_density(double d) const;
  double density(double d) const;
};

/// Fit diverged or ran into a parameter boundary; carries the last iterate.
struct FitError : Error {
  FitError(const std::string& msg, MixtureModel last)
      : Error(msg), last_iterate(last) {}
  MixtureModel last_iterate;
};

/// Damped least-squares fit of the mixture to normalized bin heights.
MixtureModel fit_mixture(const Histogram& h);

/// P(tumor | difference value d); exactly 0 for d < 0.
double posterior_tumor(const MixtureModel& m, double d);

/// Signed probability map P(tumor) - P(background) in [-1, 1] plus the
/// intensity where the posteriors cross.
struct ProbField {
  Volume map;
  double threshold_dstar = 0.0;
};

struct NoThresholdError : Error {
  using Error::Error;
};

/// Smallest d >= 0 with posterior_tumor(d) >= 0.5, located by coarse scan
/// plus bisection over [0, dmax]. Throws NoThresholdError if none exists.
double posterior_threshold(const MixtureModel& m, double dmax);

ProbField probability_map(const MixtureModel& m, const Volume& diff);

/// Plain-text key-value serialization of a fitted model.
void write_model(const MixtureModel& m, double threshold_dstar,
                 const std::filesystem::path& path);
struct StoredModel {
  MixtureModel model;
  double threshold_dstar = 0.0;
};
StoredModel read_model(const std::filesystem::path& path);

/// CSV export (bin_center, count, model_density); model may be null.
void write_histogram_csv(const Histogram& h, const MixtureModel* m,
                         const std::filesystem::path& path);
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace voxseg

#endif
