// voxseg: probability-map-guided level-set segmentation pipeline.
//
// Subcommands: segment, validate, phantom, filter, fit, probmap, baseline.
// Exit codes: 0 success, 1 usage/parameter error, 2 input format error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "voxseg/filters.hpp"
#include "voxseg/levelset.hpp"
#include "voxseg/metrics.hpp"
#include "voxseg/phantom.hpp"
#include "voxseg/probmap.hpp"
#include "voxseg/volume_io.hpp"

namespace fs = std::filesystem;
using namespace voxseg;

namespace {

/// Removes every file it registered unless the run is marked complete.
class OutputTracker {
 public:
  fs::path track(const fs::path& p) {
    files_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }
  ~OutputTracker() {
    if (committed_) return;
    for (const auto& p : files_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<fs::path> files_;
  bool committed_ = false;
};

struct FilterOptions {
  std::string selection = "both";  // both | pm | minmax | none
  double pm_k = 0.0;               // 0 = 10% of intensity range
  double pm_dt = 0.125;
  int pm_iterations = 10;
  std::string pm_conductance = "exponential";
  double minmax_dt = 0.0;  // 0 = stability bound h^2/12
  int minmax_iterations = 10;
  int minmax_radius = 1;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--filter", selection, "Filter selection: both, pm, minmax, none")
        ->check(CLI::IsMember({"both", "pm", "minmax", "none"}))
        ->capture_default_str();
    cmd->add_option("--pm-k", pm_k,
                    "Perona-Malik conductance K (0 = 10% of intensity range)")
        ->capture_default_str();
    cmd->add_option("--pm-dt", pm_dt, "Perona-Malik time step")->capture_default_str();
    cmd->add_option("--pm-iterations", pm_iterations, "Perona-Malik iterations")
        ->capture_default_str();
    cmd->add_option("--pm-conductance", pm_conductance,
                    "Conductance function: exponential or rational")
        ->check(CLI::IsMember({"exponential", "rational"}))
        ->capture_default_str();
    cmd->add_option("--minmax-dt", minmax_dt,
                    "Min/max flow time step (0 = stability bound)")
        ->capture_default_str();
    cmd->add_option("--minmax-iterations", minmax_iterations, "Min/max flow iterations")
        ->capture_default_str();
    cmd->add_option("--minmax-radius", minmax_radius,
                    "Min/max flow average stencil radius")
        ->capture_default_str();
  }

  Volume apply(const Volume& v) const {
    Volume out = v;
    if (selection == "pm" || selection == "both") {
      DiffusionParams p = default_diffusion_params(out);
      if (pm_k > 0.0) p.conductance_k = pm_k;
      p.time_step = pm_dt;
      p.iterations = pm_iterations;
      p.conductance_fn = pm_conductance == "rational" ? ConductanceFn::rational
                                                      : ConductanceFn::exponential;
      out = perona_malik(out, p);
    }
    if (selection == "minmax" || selection == "both") {
      MinMaxParams p;
      p.time_step = minmax_dt;
      p.iterations = minmax_iterations;
      p.stencil_radius = minmax_radius;
      out = minmax_flow(out, p);
    }
    return out;
  }
};

struct LevelSetOptions {
  double alpha = 1.0;
  double beta = -1.0;  // < 0: 0.2 * min spacing
  double dt = 0.0;     // 0: CFL bound
  int iterations = 300;
  int reinit_interval = 25;
  double eps = -1.0;  // < 0: 1e-4 * min spacing
  double band = 0.0;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "Propagation force weight")->capture_default_str();
    cmd->add_option("--beta", beta, "Curvature weight (-1 = 0.2 * min spacing)")
        ->capture_default_str();
    cmd->add_option("--dt", dt, "Level-set time step (0 = CFL bound)")
        ->capture_default_str();
    cmd->add_option("--iterations", iterations, "Maximum level-set iterations")
        ->capture_default_str();
    cmd->add_option("--reinit-interval", reinit_interval,
                    "Signed-distance reinitialization interval")
        ->capture_default_str();
    cmd->add_option("--eps", eps,
                    "Convergence threshold on mean |dphi| (-1 = 1e-4 * min spacing)")
        ->capture_default_str();
    cmd->add_option("--band", band, "Narrow-band radius in cm (0 = full grid)")
        ->capture_default_str();
  }

  LevelSetParams params() const {
    LevelSetParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.dt = dt;
    p.max_iterations = iterations;
    p.reinit_interval = reinit_interval;
    p.convergence_eps = eps;
    p.band_width = band;
    return p;
  }
};

void write_trace_csv(const LevelSetState& state, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open trace CSV for writing: " + path.string());
  out.precision(17);
  out << "iteration,inside_count,mean_abs_delta\n";
  for (const auto& rec : state.trace) {
    out << rec.iteration << "," << rec.inside_count << "," << rec.mean_abs_delta << "\n";
  }
}

int run_segment(const fs::path& pre_path, const fs::path& post_path,
                const fs::path& out_dir, const FilterOptions& filt,
                const LevelSetOptions& ls, int num_bins,
                const std::vector<int>& crop_lo, const std::vector<int>& crop_hi,
                int snapshot_interval, int threads) {
  fs::create_directories(out_dir);
  OutputTracker outputs;

  Volume pre = read_volume(pre_path);
  Volume post = read_volume(post_path);

  pre = filt.apply(pre);
  post = filt.apply(post);

  Volume diff = difference(post, pre);
  if (!crop_lo.empty()) {
    VoxelRegion r{{crop_lo[0], crop_lo[1], crop_lo[2]},
                  {crop_hi[0], crop_hi[1], crop_hi[2]}};
    diff = crop(diff, r);
  }

  Histogram hist = build_histogram(diff, num_bins);
  MixtureModel model = fit_mixture(hist);
  ProbField prob = probability_map(model, diff);

  write_histogram_csv(hist, &model, outputs.track(out_dir / "histogram.csv"));
  write_model(model, prob.threshold_dstar, outputs.track(out_dir / "model.txt"));

  LevelSetParams params = ls.params();
  LevelSetState state = initialize(prob, params);

  EvolveObserver observer;
  if (snapshot_interval > 0) {
    observer = [&](const LevelSetState& s) {
      if (s.iteration % snapshot_interval == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "phi_%06d.mhd", s.iteration);
        const fs::path p = outputs.track(out_dir / name);
        outputs.track(fs::path(p).replace_extension(".raw"));
        write_volume(s.phi, p, ElementType::float32);
      }
    };
  }
  state = evolve(std::move(state), prob, params, observer);

  write_trace_csv(state, outputs.track(out_dir / "trace.csv"));
  outputs.track(out_dir / "mask.raw");
  write_mask(extract_mask(state), outputs.track(out_dir / "mask.mhd"));

  // Run manifest: every effective parameter value, no silent defaults.
  {
    std::ofstream mf(outputs.track(out_dir / "manifest.txt"));
    mf.precision(17);
    const Spacing& sp = diff.spacing();
    mf << "pre = " << pre_path.string() << "\n";
    mf << "post = " << post_path.string() << "\n";
    mf << "filter = " << filt.selection << "\n";
    mf << "pm_k = " << (filt.pm_k > 0.0 ? filt.pm_k : -1.0)
       << (filt.pm_k > 0.0 ? "" : "  # auto, 10% of intensity range per volume") << "\n";
    mf << "pm_dt = " << filt.pm_dt << "\n";
    mf << "pm_iterations = " << filt.pm_iterations << "\n";
    mf << "pm_conductance = " << filt.pm_conductance << "\n";
    MinMaxParams mm;
    mm.time_step = filt.minmax_dt;
    mf << "minmax_dt = " << mm.effective_dt(sp) << "\n";
    mf << "minmax_iterations = " << filt.minmax_iterations << "\n";
    mf << "minmax_radius = " << filt.minmax_radius << "\n";
    mf << "num_bins = " << num_bins << "\n";
    if (!crop_lo.empty()) {
      mf << "crop_lo = " << crop_lo[0] << " " << crop_lo[1] << " " << crop_lo[2] << "\n";
      mf << "crop_hi = " << crop_hi[0] << " " << crop_hi[1] << " " << crop_hi[2] << "\n";
    }
    mf << "alpha = " << params.alpha << "\n";
    mf << "beta = " << params.effective_beta(sp) << "\n";
    mf << "dt = " << params.effective_dt(sp, 1.0) << "\n";
    mf << "iterations = " << params.max_iterations << "\n";
    mf << "reinit_interval = " << params.reinit_interval << "\n";
    mf << "convergence_eps = " << params.effective_eps(sp) << "\n";
    mf << "band_width = " << params.band_width << "\n";
    mf << "snapshot_interval = " << snapshot_interval << "\n";
    mf << "threads = " << threads << "\n";
    mf << "threshold_dstar = " << prob.threshold_dstar << "\n";
    mf << "final_iteration = " << state.iteration << "\n";
    mf << "final_mean_abs_delta = " << state.last_delta << "\n";
  }

  outputs.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability-map-guided level-set tumor segmentation toolkit"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Bound internal parallelism (0 = all cores)")
      ->capture_default_str();

  // --- segment ---
  auto* seg = app.add_subcommand("segment", "Full pipeline: filter, difference, "
                                            "mixture fit, probability map, level set");
  fs::path seg_pre, seg_post, seg_out;
  FilterOptions seg_filter;
  LevelSetOptions seg_ls;
  int seg_bins = 128;
  std::vector<int> seg_crop_lo, seg_crop_hi;
  int seg_snapshot = 0;
  seg->add_option("--pre", seg_pre, "Pre-contrast volume (.mhd)")->required();
  seg->add_option("--post", seg_post, "Post-contrast volume (.mhd)")->required();
  seg->add_option("--out-dir", seg_out, "Output directory")->required();
  seg_filter.add_flags(seg);
  seg_ls.add_flags(seg);
  seg->add_option("--num-bins", seg_bins, "Histogram bins")->capture_default_str();
  seg->add_option("--crop-lo", seg_crop_lo, "Crop box low corner (inclusive)")
      ->expected(3);
  seg->add_option("--crop-hi", seg_crop_hi, "Crop box high corner (exclusive)")
      ->expected(3);
  seg->add_option("--snapshot-interval", seg_snapshot,
                  "Dump phi every N iterations (0 = off)")
      ->capture_default_str();
  seg->set_config("--config", "", "Key-value config file; flags override");

  // --- validate ---
  auto* val = app.add_subcommand("validate", "Compare two masks, print metrics CSV");
  fs::path val_a, val_b;
  val->add_option("mask_a", val_a, "Reference mask (.mhd)")->required();
  val->add_option("mask_b", val_b, "Candidate mask (.mhd)")->required();

  // --- phantom ---
  auto* pha = app.add_subcommand("phantom", "Generate a synthetic pre/post/truth triple");
  fs::path pha_out;
  PhantomSpec pha_spec;
  std::string pha_shape = "ball";
  std::vector<int> pha_dims{64, 64, 64};
  std::vector<double> pha_spacing{1.0, 1.0, 1.0};
  std::vector<double> pha_center;
  bool pha_paper = false;
  pha->add_option("--out-dir", pha_out, "Output directory")->required();
  pha->add_flag("--paper-geometry", pha_paper,
                "Use the 128x128x23, 0.5 cm slice geometry (~50 cm^3 ball)");
  pha->add_option("--dims", pha_dims, "Grid dimensions")->expected(3);
  pha->add_option("--spacing", pha_spacing, "Voxel spacing in cm")->expected(3);
  pha->add_option("--shape", pha_shape, "ball, blob, or ring")
      ->check(CLI::IsMember({"ball", "blob", "ring"}))
      ->capture_default_str();
  pha->add_option("--center", pha_center, "Center in voxel coordinates")->expected(3);
  pha->add_option("--radius", pha_spec.radius, "Radius in cm")->capture_default_str();
  pha->add_option("--contrast-lambda", pha_spec.contrast_lambda,
                  "Mean Poisson uptake in the enhancing region")
      ->capture_default_str();
  pha->add_option("--noise-sigma", pha_spec.noise_sigma, "Gaussian noise std")
      ->capture_default_str();
  pha->add_option("--base-intensity", pha_spec.base_intensity, "Background intensity")
      ->capture_default_str();
  pha->add_option("--seed", pha_spec.seed, "PRNG seed")->capture_default_str();

  // --- filter ---
  auto* fil = app.add_subcommand("filter", "Denoise a single volume");
  fs::path fil_in, fil_out;
  FilterOptions fil_opts;
  fil->add_option("--in", fil_in, "Input volume (.mhd)")->required();
  fil->add_option("--out", fil_out, "Output volume (.mhd)")->required();
  fil_opts.add_flags(fil);

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "Fit the mixture model to a histogram CSV");
  fs::path fit_in, fit_out;
  fs::path fit_csv_out;
  fit->add_option("--histogram", fit_in, "Histogram CSV (bin_center,count,...)")
      ->required();
  fit->add_option("--out", fit_out, "Model file to write")->required();
  fit->add_option("--csv-out", fit_csv_out,
                  "Optional histogram CSV rewrite including the model density");

  // --- probmap ---
  auto* pm = app.add_subcommand("probmap", "Evaluate a fitted model on a difference image");
  fs::path pm_model, pm_diff, pm_out;
  pm->add_option("--model", pm_model, "Model file from fit/segment")->required();
  pm->add_option("--diff", pm_diff, "Difference volume (.mhd)")->required();
  pm->add_option("--out", pm_out, "Probability map volume to write (.mhd)")->required();

  // --- baseline ---
  auto* base = app.add_subcommand("baseline",
                                  "Threshold + erosion + largest component + dilation");
  fs::path base_in, base_out;
  double base_threshold = 0.0;
  int base_erode = 1, base_dilate = 1;
  base->add_option("--in", base_in, "Input volume (.mhd)")->required();
  base->add_option("--out", base_out, "Output mask (.mhd)")->required();
  base->add_option("--threshold", base_threshold, "Intensity threshold")->required();
  base->add_option("--erode", base_erode, "Erosion ball radius (voxels)")
      ->capture_default_str();
  base->add_option("--dilate", base_dilate, "Dilation ball radius (voxels)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (*seg) {
      if (seg_crop_lo.empty() != seg_crop_hi.empty()) {
        std::cerr << "segment: --crop-lo and --crop-hi must be given together\n";
        return 1;
      }
      return run_segment(seg_pre, seg_post, seg_out, seg_filter, seg_ls, seg_bins,
                         seg_crop_lo, seg_crop_hi, seg_snapshot, threads);
    }
    if (*val) {
      SegMetrics m = compare(read_mask(val_a), read_mask(val_b));
      std::cout << SegMetrics::csv_header() << "\n" << m.csv_row() << "\n";
      return 0;
    }
    if (*pha) {
      PhantomSpec spec = pha_paper ? paper_geometry_spec() : pha_spec;
      if (!pha_paper) {
        spec.dims = {pha_dims[0], pha_dims[1], pha_dims[2]};
        spec.spacing = {pha_spacing[0], pha_spacing[1], pha_spacing[2]};
        spec.shape = parse_shape(pha_shape);
        if (!pha_center.empty()) {
          spec.center = {pha_center[0], pha_center[1], pha_center[2]};
        } else {
          spec.center = {0.5 * (spec.dims[0] - 1), 0.5 * (spec.dims[1] - 1),
                         0.5 * (spec.dims[2] - 1)};
        }
      }
      fs::create_directories(pha_out);
      OutputTracker outputs;
      PhantomTriple t = generate(spec);
      outputs.track(pha_out / "pre.raw");
      write_volume(t.pre, outputs.track(pha_out / "pre.mhd"), ElementType::float32);
      outputs.track(pha_out / "post.raw");
      write_volume(t.post, outputs.track(pha_out / "post.mhd"), ElementType::float32);
      outputs.track(pha_out / "truth.raw");
      write_mask(t.truth, outputs.track(pha_out / "truth.mhd"));
      write_spec_echo(spec, outputs.track(pha_out / "spec.txt"));
      outputs.commit();
      return 0;
    }
    if (*fil) {
      Volume v = fil_opts.apply(read_volume(fil_in));
      write_volume(v, fil_out, ElementType::float32);
      return 0;
    }
    if (*fit) {
      Histogram h = read_histogram_csv(fit_in);
      MixtureModel m = fit_mixture(h);
      const double dstar = posterior_threshold(m, h.bin_edges.back());
      write_model(m, dstar, fit_out);
      if (!fit_csv_out.empty()) write_histogram_csv(h, &m, fit_csv_out);
      return 0;
    }
    if (*pm) {
      StoredModel sm = read_model(pm_model);
      ProbField prob = probability_map(sm.model, read_volume(pm_diff));
      write_volume(prob.map, pm_out, ElementType::float32);
      std::cout << "threshold_dstar = " << prob.threshold_dstar << "\n";
      return 0;
    }
    if (*base) {
      BinaryMask m = baseline_segment(read_volume(base_in), base_threshold, base_erode,
                                      base_dilate);
      write_mask(m, base_out);
      return 0;
    }
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    // FitError, NoThresholdError, NumericalError, EmptyResultError.
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
