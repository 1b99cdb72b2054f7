#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "test_util.hpp"
#include "voxseg/probmap.hpp"

using namespace voxseg;
using voxseg::test::TempDir;

namespace {

/// Histogram with unit bins over [lo, lo + bins) filled from explicit samples.
Histogram unit_histogram(double lo, int bins, const std::vector<double>& samples) {
  Histogram h;
  h.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.bin_edges[b] = lo + b;
  h.counts.assign(bins, 0.0);
  for (double x : samples) {
    int b = static_cast<int>(std::floor(x - lo));
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    h.counts[b] += 1.0;
  }
  h.total = static_cast<double>(samples.size());
  return h;
}

}  // namespace

TEST_CASE("histogram bins a uniform ramp evenly") {
  const int n = 4096;
  Volume v({16, 16, 16}, {1, 1, 1});
  for (int i = 0; i < n; ++i) v[i] = 8.0 * i / (n - 1);
  Histogram h = build_histogram(v, 8);
  CHECK(h.bins() == 8);
  CHECK(h.bin_edges.front() == 0.0);
  CHECK(h.bin_edges.back() == 8.0);
  CHECK(h.total == doctest::Approx(n));
  double sum = 0.0;
  for (int b = 0; b < 8; ++b) {
    CHECK(h.counts[b] == doctest::Approx(512.0));
    sum += h.counts[b];
  }
  CHECK(sum == doctest::Approx(h.total));
}

TEST_CASE("histogram validation") {
  Volume v = voxseg::test::random_volume({8, 8, 8}, {1, 1, 1}, 4);
  CHECK_THROWS_AS(build_histogram(v, 7), ParamError);
  Volume flat({8, 8, 8}, {1, 1, 1}, 2.0);
  CHECK_THROWS_AS(build_histogram(flat, 32), ParamError);
  Volume bad = v;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(build_histogram(bad, 32), NumericalError);
}

TEST_CASE("histogram mean matches the sample mean to within a bin") {
  Volume v = voxseg::test::random_volume({20, 20, 20}, {1, 1, 1}, 12, -3.0, 11.0);
  Histogram h = build_histogram(v, 64);
  double hist_mean = 0.0, direct_mean = 0.0;
  for (int b = 0; b < h.bins(); ++b) hist_mean += h.center(b) * h.counts[b];
  hist_mean /= h.total;
  for (std::size_t i = 0; i < v.size(); ++i) direct_mean += v[i];
  direct_mean /= static_cast<double>(v.size());
  CHECK(std::abs(hist_mean - direct_mean) < h.bin_width());
}

TEST_CASE("fit recovers parameters from a noiseless mixture histogram") {
  MixtureModel truth;
  truth.w = 0.7;
  truth.mu = 0.0;
  truth.sigma = 3.0;
  truth.lambda = 6.0;
  truth.bin_width = 1.0;

  Histogram h;
  const int bins = 45;
  h.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.bin_edges[b] = -15.0 + b;
  h.counts.resize(bins);
  h.total = 0.0;
  for (int b = 0; b < bins; ++b) {
    h.counts[b] = 1e6 * truth.density(h.center(b)) * h.bin_width();
    h.total += h.counts[b];
  }

  MixtureModel m = fit_mixture(h);
  CHECK(m.w == doctest::Approx(truth.w).epsilon(0.02));
  CHECK(std::abs(m.mu - truth.mu) < 0.05);
  CHECK(m.sigma == doctest::Approx(truth.sigma).epsilon(0.02));
  CHECK(m.lambda == doctest::Approx(truth.lambda).epsilon(0.02));
  CHECK(m.rms_residual < 1e-3);
}

TEST_CASE("fit recovers parameters from sampled mixture data") {
  MixtureModel truth;
  truth.w = 0.8;
  truth.mu = 0.0;
  truth.sigma = 2.0;
  truth.lambda = 10.0;
  truth.bin_width = 1.0;

  Rng rng(99);
  std::vector<double> samples;
  samples.reserve(300000);
  for (int i = 0; i < 300000; ++i) {
    if (rng.uniform() < truth.w) {
      samples.push_back(truth.sigma * rng.gaussian());
    } else {
      samples.push_back((static_cast<double>(rng.poisson(truth.lambda)) +
                         rng.uniform()));
    }
  }
  Histogram h = unit_histogram(-10.0, 45, samples);
  MixtureModel m = fit_mixture(h);
  CHECK(m.w == doctest::Approx(truth.w).epsilon(0.05));
  CHECK(std::abs(m.mu) < 0.1);
  CHECK(m.sigma == doctest::Approx(truth.sigma).epsilon(0.05));
  CHECK(m.lambda == doctest::Approx(truth.lambda).epsilon(0.05));
}

TEST_CASE("fit on a pure background histogram reports a boundary hit") {
  Histogram h;
  const int bins = 32;
  h.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.bin_edges[b] = -8.0 + 0.5 * b;
  h.counts.resize(bins);
  h.total = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double c = h.center(b);
    h.counts[b] = 1e6 * std::exp(-0.5 * c * c / 4.0);
    h.total += h.counts[b];
  }
  CHECK_THROWS_AS(fit_mixture(h), FitError);
  try {
    fit_mixture(h);
  } catch (const FitError& e) {
    CHECK(e.last_iterate.w > 0.99);
  }
}

TEST_CASE("fit rejects one-sided histograms") {
  Histogram h = unit_histogram(1.0, 10, {1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5});
  CHECK_THROWS_AS(fit_mixture(h), FitError);
}

TEST_CASE("posterior at zero matches the closed form") {
  MixtureModel m;
  m.w = 0.5;
  m.mu = 0.0;
  m.sigma = 1.0;
  m.lambda = 4.0;
  m.bin_width = 1.0;

  const double pois0 = std::exp(-4.0);
  const double gauss0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(posterior_tumor(m, 0.0) ==
        doctest::Approx(pois0 / (pois0 + gauss0)).epsilon(1e-9));
  CHECK(posterior_tumor(m, -0.001) == 0.0);
  CHECK(posterior_tumor(m, 2.0) > posterior_tumor(m, 0.0));
  CHECK(posterior_tumor(m, 12.0) > 0.999);
}

TEST_CASE("posterior threshold agrees with a fine scan") {
  MixtureModel m;
  m.w = 0.5;
  m.sigma = 1.0;
  m.lambda = 4.0;
  m.bin_width = 1.0;
  const double dstar = posterior_threshold(m, 10.0);
  CHECK(posterior_tumor(m, dstar) >= 0.5);
  CHECK(posterior_tumor(m, dstar - 1e-3) < 0.5);

  double scan = -1.0;
  for (double d = 0.0; d <= 10.0; d += 1e-4) {
    if (posterior_tumor(m, d) >= 0.5) {
      scan = d;
      break;
    }
  }
  CHECK(std::abs(dstar - scan) < 2e-4);

  MixtureModel weak;
  weak.w = 0.99;
  weak.sigma = 10.0;
  weak.lambda = 0.5;
  weak.bin_width = 1.0;
  CHECK_THROWS_AS(posterior_threshold(weak, 3.0), NoThresholdError);
}

TEST_CASE("probability map is the signed posterior difference") {
  MixtureModel m;
  m.w = 0.5;
  m.sigma = 1.0;
  m.lambda = 4.0;
  m.bin_width = 1.0;

  Volume diff = voxseg::test::random_volume({8, 8, 8}, {1, 1, 1}, 6, -3.0, 10.0);
  ProbField pf = probability_map(m, diff);
  CHECK(pf.map.same_grid(diff));
  for (std::size_t i = 0; i < diff.size(); ++i) {
    CHECK(pf.map[i] == doctest::Approx(2.0 * posterior_tumor(m, diff[i]) - 1.0));
    CHECK(pf.map[i] >= -1.0);
    CHECK(pf.map[i] <= 1.0);
  }
  CHECK(pf.threshold_dstar == doctest::Approx(posterior_threshold(m, 10.0)).epsilon(1e-6));
}

TEST_CASE("model file round trip") {
  TempDir tmp("model_rt");
  MixtureModel m;
  m.w = 0.6180339887498949;
  m.mu = -0.125;
  m.sigma = 2.7182818284590451;
  m.lambda = 9.4247779607693793;
  m.bin_width = 0.37;
  m.rms_residual = 1.5e-4;
  write_model(m, 3.25, tmp / "model.txt");
  StoredModel s = read_model(tmp / "model.txt");
  CHECK(s.model.w == m.w);
  CHECK(s.model.mu == m.mu);
  CHECK(s.model.sigma == m.sigma);
  CHECK(s.model.lambda == m.lambda);
  CHECK(s.model.bin_width == m.bin_width);
  CHECK(s.model.rms_residual == m.rms_residual);
  CHECK(s.threshold_dstar == 3.25);

  std::ofstream(tmp / "broken.txt") << "w = 0.5\nmu = 0\n";
  CHECK_THROWS_AS(read_model(tmp / "broken.txt"), FormatError);
}

TEST_CASE("histogram CSV round trip") {
  TempDir tmp("hist_rt");
  Volume v = voxseg::test::random_volume({12, 12, 12}, {1, 1, 1}, 31, -4.0, 12.0);
  Histogram h = build_histogram(v, 40);
  write_histogram_csv(h, nullptr, tmp / "h.csv");
  Histogram r = read_histogram_csv(tmp / "h.csv");
  CHECK(r.bins() == h.bins());
  CHECK(r.counts == h.counts);
  CHECK(r.total == doctest::Approx(h.total));
  CHECK(r.bin_width() == doctest::Approx(h.bin_width()).epsilon(1e-12));
  for (int b = 0; b < h.bins(); ++b) {
    CHECK(r.center(b) == doctest::Approx(h.center(b)).epsilon(1e-9));
  }
}
