#ifndef VOXSEG_METRICS_HPP
#define VOXSEG_METRICS_HPP

#include <string>

#include "voxseg/volume.hpp"

namespace voxseg {

/// Mask-pair agreement metrics. `a` is the reference for sensitivity and
/// specificity.
struct SegMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  double volume_a_cm3 = 0.0;
  double volume_b_cm3 = 0.0;
  double agreement_pct = 0.0;  ///< 100 * min(Va, Vb) / max(Va, Vb)
  double hausdorff_cm = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;

  /// Fixed-order CSV row matching csv_header().
  std::string csv_row() const;
  static std::string csv_header();
};

SegMetrics compare(const BinaryMask& a, const BinaryMask& b);

/// 100 * min/max volume ratio; 100 when both volumes are zero.
double agreement_pct(double vol_a, double vol_b);

/// Exact Euclidean distance (cm) from every voxel center to the nearest
/// mask voxel center; infinity everywhere if the mask is empty.
std::vector<double> distance_transform_cm(const BinaryMask& m);

/// Bidirectional max-min voxel-center distance between the two masks'
/// voxel sets. 0 when both empty, infinity when exactly one is empty.
double hausdorff_cm(const BinaryMask& a, const BinaryMask& b);

/// Threshold at `threshold`, erode by a radius-erode_r ball, keep the
/// largest 26-connected component, dilate by a radius-dilate_r ball.
struct EmptyResultError : Error {
  using Error::Error;
};
BinaryMask baseline_segment(const Volume& v, double threshold, int erode_r,
                            int dilate_r);

BinaryMask erode(const BinaryMask& m, int radius);
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask largest_component_26(const BinaryMask& m);

}  // namespace voxseg

#endif
