#include "voxseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace voxseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Finite "no seed yet" sentinel for the distance transform; infinity would
// turn the parabola-envelope arithmetic into inf - inf.
constexpr double kFar = 1e300;

/// 1D squared-distance transform (lower envelope of parabolas) with sample
/// spacing h. f holds squared distances and is overwritten.
void dt1d(std::vector<double>& f, std::vector<double>& scratch, int n, double h) {
  static thread_local std::vector<int> v;
  static thread_local std::vector<double> z;
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    const double xq = q * h;
    while (true) {
      const double xv = v[k] * h;
      const double s = (f[q] + xq * xq - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = q * h;
    while (z[k + 1] < xq) ++k;
    const double dx = xq - v[k] * h;
    scratch[q] = dx * dx + f[v[k]];
  }
  std::copy(scratch.begin(), scratch.begin() + n, f.begin());
}

std::vector<std::array<int, 3>> ball_offsets(int radius) {
  std::vector<std::array<int, 3>> out;
  for (int z = -radius; z <= radius; ++z) {
    for (int y = -radius; y <= radius; ++y) {
      for (int x = -radius; x <= radius; ++x) {
        if (x * x + y * y + z * z <= radius * radius) out.push_back({x, y, z});
      }
    }
  }
  return out;
}

}  // namespace

double agreement_pct(double vol_a, double vol_b) {
  const double lo = std::min(vol_a, vol_b);
  const double hi = std::max(vol_a, vol_b);
  if (hi == 0.0) return 100.0;
  return 100.0 * (lo / hi);  // lo/hi first so equal volumes give exactly 100
}

std::vector<double> distance_transform_cm(const BinaryMask& m) {
  const Dims& d = m.dims();
  const Spacing& sp = m.spacing();
  const std::size_t n = m.size();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = m.get(i) ? 0.0 : kFar;

  const int nmax = std::max({d[0], d[1], d[2]});
  std::vector<double> line(nmax), scratch(nmax);

  // x pass
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      const std::size_t base = m.index(0, y, z);
      bool any = false;
      for (int x = 0; x < d[0]; ++x) {
        line[x] = sq[base + x];
        any = any || line[x] < kFar;
      }
      if (!any) continue;
      dt1d(line, scratch, d[0], sp[0]);
      for (int x = 0; x < d[0]; ++x) sq[base + x] = line[x];
    }
  }
  // y pass
  for (int z = 0; z < d[2]; ++z) {
    for (int x = 0; x < d[0]; ++x) {
      bool any = false;
      for (int y = 0; y < d[1]; ++y) {
        line[y] = sq[m.index(x, y, z)];
        any = any || line[y] < kFar;
      }
      if (!any) continue;
      dt1d(line, scratch, d[1], sp[1]);
      for (int y = 0; y < d[1]; ++y) sq[m.index(x, y, z)] = line[y];
    }
  }
  // z pass
  for (int y = 0; y < d[1]; ++y) {
    for (int x = 0; x < d[0]; ++x) {
      bool any = false;
      for (int z = 0; z < d[2]; ++z) {
        line[z] = sq[m.index(x, y, z)];
        any = any || line[z] < kFar;
      }
      if (!any) continue;
      dt1d(line, scratch, d[2], sp[2]);
      for (int z = 0; z < d[2]; ++z) sq[m.index(x, y, z)] = line[z];
    }
  }

  for (std::size_t i = 0; i < n; ++i) sq[i] = sq[i] < 0.5 * kFar ? std::sqrt(sq[i]) : kInf;
  return sq;
}

double hausdorff_cm(const BinaryMask& a, const BinaryMask& b) {
  const std::size_t ca = a.count_true();
  const std::size_t cb = b.count_true();
  if (ca == 0 && cb == 0) return 0.0;
  if (ca == 0 || cb == 0) return kInf;

  const std::vector<double> da = distance_transform_cm(a);
  const std::vector<double> db = distance_transform_cm(b);
  double h = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.get(i)) h = std::max(h, db[i]);
    if (b.get(i)) h = std::max(h, da[i]);
  }
  return h;
}

SegMetrics compare(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_grid(b)) {
    throw ShapeError("compare: masks have different dims or spacing");
  }
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  const long long n = static_cast<long long>(a.size());
#pragma omp parallel for reduction(+ : tp, fp, fn, tn)
  for (long long i = 0; i < n; ++i) {
    const bool in_a = a.get(i);
    const bool in_b = b.get(i);
    if (in_a && in_b) ++tp;
    else if (!in_a && in_b) ++fp;
    else if (in_a && !in_b) ++fn;
    else ++tn;
  }

  SegMetrics m;
  const long long denom = 2 * tp + fp + fn;
  m.dice = denom > 0 ? 2.0 * tp / denom : 1.0;
  m.jaccard = (tp + fp + fn) > 0 ? static_cast<double>(tp) / (tp + fp + fn) : 1.0;
  m.volume_a_cm3 = mask_volume_cm3(a);
  m.volume_b_cm3 = mask_volume_cm3(b);
  m.agreement_pct = agreement_pct(m.volume_a_cm3, m.volume_b_cm3);
  m.hausdorff_cm = hausdorff_cm(a, b);
  m.sensitivity = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
  m.specificity = (tn + fp) > 0 ? static_cast<double>(tn) / (tn + fp) : 1.0;
  return m;
}

std::string SegMetrics::csv_header() {
  return "dice,jaccard,vol_a_cm3,vol_b_cm3,agreement_pct,hausdorff_cm,sensitivity,specificity";
}

std::string SegMetrics::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << dice << "," << jaccard << "," << volume_a_cm3 << "," << volume_b_cm3 << ","
     << agreement_pct << "," << hausdorff_cm << "," << sensitivity << ","
     << specificity;
  return os.str();
}

BinaryMask erode(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  const auto offsets = ball_offsets(radius);
  const Dims& d = m.dims();
  BinaryMask out(d, m.spacing());
#pragma omp parallel for collapse(2)
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        bool keep = m.get(x, y, z);
        for (std::size_t k = 0; keep && k < offsets.size(); ++k) {
          const int ox = x + offsets[k][0];
          const int oy = y + offsets[k][1];
          const int oz = z + offsets[k][2];
          if (ox < 0 || oy < 0 || oz < 0 || ox >= d[0] || oy >= d[1] || oz >= d[2] ||
              !m.get(ox, oy, oz)) {
            keep = false;
          }
        }
        out.set(x, y, z, keep);
      }
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  const auto offsets = ball_offsets(radius);
  const Dims& d = m.dims();
  BinaryMask out(d, m.spacing());
#pragma omp parallel for collapse(2)
  for (int z = 0; z < d[2]; ++z) {
    for (int y = 0; y < d[1]; ++y) {
      for (int x = 0; x < d[0]; ++x) {
        bool hit = false;
        for (std::size_t k = 0; !hit && k < offsets.size(); ++k) {
          const int ox = x + offsets[k][0];
          const int oy = y + offsets[k][1];
          const int oz = z + offsets[k][2];
          if (ox >= 0 && oy >= 0 && oz >= 0 && ox < d[0] && oy < d[1] && oz < d[2] &&
              m.get(ox, oy, oz)) {
            hit = true;
          }
        }
        out.set(x, y, z, hit);
      }
    }
  }
  return out;
}

BinaryMask largest_component_26(const BinaryMask& m) {
  const Dims& d = m.dims();
  const std::size_t n = m.size();
  std::vector<int> label(n, 0);
  int next_label = 0;
  std::size_t best_size = 0;
  int best_label = 0;
  std::vector<std::size_t> stack;

  for (std::size_t start = 0; start < n; ++start) {
    if (!m.get(start) || label[start] != 0) continue;
    ++next_label;
    std::size_t comp_size = 0;
    stack.clear();
    stack.push_back(start);
    label[start] = next_label;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++comp_size;
      const int x = static_cast<int>(i % d[0]);
      const int y = static_cast<int>((i / d[0]) % d[1]);
      const int z = static_cast<int>(i / (static_cast<std::size_t>(d[0]) * d[1]));
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const int ox = x + dx, oy = y + dy, oz = z + dz;
            if (ox < 0 || oy < 0 || oz < 0 || ox >= d[0] || oy >= d[1] || oz >= d[2])
              continue;
            const std::size_t j = m.index(ox, oy, oz);
            if (m.get(j) && label[j] == 0) {
              label[j] = next_label;
              stack.push_back(j);
            }
          }
        }
      }
    }
    if (comp_size > best_size) {
      best_size = comp_size;
      best_label = next_label;
    }
  }

  BinaryMask out(d, m.spacing());
  for (std::size_t i = 0; i < n; ++i) {
    out.bits()[i] = (label[i] == best_label && best_label != 0) ? 1 : 0;
  }
  return out;
}

BinaryMask baseline_segment(const Volume& v, double threshold, int erode_r,
                            int dilate_r) {
  if (erode_r < 0 || dilate_r < 0) {
    throw ParamError("baseline_segment: morphology radii must be nonnegative");
  }
  BinaryMask m(v.dims(), v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) m.bits()[i] = v[i] >= threshold ? 1 : 0;
  m = erode(m, erode_r);
  if (m.count_true() == 0) {
    throw EmptyResultError("baseline_segment: mask is empty after erosion");
  }
  m = largest_component_26(m);
  m = dilate(m, dilate_r);
  return m;
}

}  // namespace voxseg
