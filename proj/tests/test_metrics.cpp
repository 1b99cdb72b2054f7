#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "test_util.hpp"
#include "voxseg/metrics.hpp"

using namespace voxseg;

namespace {

BinaryMask random_mask(Dims d, Spacing sp, std::uint64_t seed, double density) {
  BinaryMask m(d, sp);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.bits()[i] = rng.uniform() < density;
  return m;
}

/// Quadratic-time Hausdorff over voxel centers, for small grids only.
double brute_hausdorff(const BinaryMask& a, const BinaryMask& b) {
  const Spacing& sp = a.spacing();
  std::vector<std::array<double, 3>> pa, pb;
  for (int z = 0; z < a.dims()[2]; ++z) {
    for (int y = 0; y < a.dims()[1]; ++y) {
      for (int x = 0; x < a.dims()[0]; ++x) {
        const std::array<double, 3> pt{x * sp[0], y * sp[1], z * sp[2]};
        if (a.get(x, y, z)) pa.push_back(pt);
        if (b.get(x, y, z)) pb.push_back(pt);
      }
    }
  }
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

bool subset(const BinaryMask& inner, const BinaryMask& outer) {
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (inner.get(i) && !outer.get(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("volume agreement ratio") {
  CHECK(agreement_pct(50.6548, 50.9003) == doctest::Approx(99.5177).epsilon(2e-4));
  CHECK(agreement_pct(50.5146, 53.7560) == doctest::Approx(93.9702).epsilon(1e-4));
  CHECK(agreement_pct(2.0, 1.0) == agreement_pct(1.0, 2.0));
  CHECK(agreement_pct(0.0, 0.0) == 100.0);
  CHECK(agreement_pct(0.0, 5.0) == 0.0);
}

TEST_CASE("comparing a mask with itself is perfect") {
  BinaryMask m = voxseg::test::ball_mask({16, 16, 16}, {0.1, 0.1, 0.5}, 8, 8, 8, 4.0);
  SegMetrics r = compare(m, m);
  CHECK(r.dice == 1.0);
  CHECK(r.jaccard == 1.0);
  CHECK(r.hausdorff_cm == 0.0);
  CHECK(r.sensitivity == 1.0);
  CHECK(r.specificity == 1.0);
  CHECK(r.agreement_pct == 100.0);
  CHECK(r.volume_a_cm3 == r.volume_b_cm3);
}

TEST_CASE("confusion-matrix metrics on a hand-built pair") {
  const Dims d{4, 4, 4};
  BinaryMask a(d, {1, 1, 1});
  BinaryMask b(d, {1, 1, 1}, true);
  for (std::size_t i = 0; i < 32; ++i) a.bits()[i] = 1;  // first half
  SegMetrics r = compare(a, b);
  CHECK(r.dice == doctest::Approx(2.0 / 3.0));
  CHECK(r.jaccard == doctest::Approx(0.5));
  CHECK(r.sensitivity == 1.0);
  CHECK(r.specificity == 0.0);
  CHECK(r.agreement_pct == doctest::Approx(50.0));

  SegMetrics rev = compare(b, a);
  CHECK(rev.sensitivity == doctest::Approx(0.5));
  CHECK(rev.specificity == 1.0);
  CHECK(rev.dice == r.dice);
  CHECK(rev.hausdorff_cm == r.hausdorff_cm);
}

TEST_CASE("distance transform is exact for a single seed voxel") {
  BinaryMask m({9, 7, 5}, {0.12, 0.2, 0.33});
  m.set(4, 3, 2, true);
  const std::vector<double> dist = distance_transform_cm(m);
  for (int z = 0; z < 5; ++z) {
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 9; ++x) {
        const double dx = (x - 4) * 0.12, dy = (y - 3) * 0.2, dz = (z - 2) * 0.33;
        CHECK(std::abs(dist[m.index(x, y, z)] -
                       std::sqrt(dx * dx + dy * dy + dz * dz)) < 1e-9);
      }
    }
  }
}

TEST_CASE("hausdorff matches the quadratic-time oracle on small grids") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    BinaryMask a = random_mask({10, 9, 8}, {0.12, 0.2, 0.33}, seed, 0.15);
    BinaryMask b = random_mask({10, 9, 8}, {0.12, 0.2, 0.33}, 100 + seed, 0.15);
    if (a.count_true() == 0 || b.count_true() == 0) continue;
    const double exact = brute_hausdorff(a, b);
    CHECK(std::abs(hausdorff_cm(a, b) - exact) < 1e-9);
    CHECK(hausdorff_cm(a, b) == hausdorff_cm(b, a));
  }

  BinaryMask empty({6, 6, 6}, {1, 1, 1});
  BinaryMask one({6, 6, 6}, {1, 1, 1});
  one.set(2, 2, 2, true);
  CHECK(hausdorff_cm(empty, empty) == 0.0);
  CHECK(std::isinf(hausdorff_cm(empty, one)));
  CHECK(std::isinf(hausdorff_cm(one, empty)));
}

TEST_CASE("morphology ordering: erosion shrinks, dilation grows") {
  BinaryMask m = voxseg::test::ball_mask({20, 20, 20}, {1, 1, 1}, 9.5, 9.5, 9.5, 6.0);
  BinaryMask er = erode(m, 1);
  BinaryMask di = dilate(m, 1);
  CHECK(subset(er, m));
  CHECK(subset(m, di));
  CHECK(er.count_true() < m.count_true());
  CHECK(di.count_true() > m.count_true());

  // Closing contains the original; opening is contained in it.
  CHECK(subset(m, erode(dilate(m, 1), 1)));
  CHECK(subset(dilate(erode(m, 1), 1), m));

  CHECK(erode(m, 0).bits() == m.bits());
  CHECK(dilate(m, 0).bits() == m.bits());
}

TEST_CASE("largest component keeps 26-connected voxels together") {
  BinaryMask m({12, 12, 12}, {1, 1, 1});
  // A pair touching only at a corner, plus a distant single voxel.
  m.set(1, 1, 1, true);
  m.set(2, 2, 2, true);
  m.set(9, 9, 9, true);
  BinaryMask keep = largest_component_26(m);
  CHECK(keep.count_true() == 2);
  CHECK(keep.get(1, 1, 1));
  CHECK(keep.get(2, 2, 2));
  CHECK(!keep.get(9, 9, 9));

  BinaryMask none({4, 4, 4}, {1, 1, 1});
  CHECK(largest_component_26(none).count_true() == 0);
}

TEST_CASE("baseline segmentation recovers a clean bright ball") {
  const Dims d{32, 32, 32};
  Volume v(d, {1, 1, 1});
  BinaryMask truth = voxseg::test::ball_mask(d, {1, 1, 1}, 15.5, 15.5, 15.5, 8.0);
  Rng rng(55);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (truth.get(i) ? 100.0 : 0.0) + rng.gaussian();
  }
  BinaryMask seg = baseline_segment(v, 50.0, 1, 1);
  CHECK(compare(truth, seg).dice >= 0.95);
}

TEST_CASE("baseline segmentation failure modes") {
  Volume flat({10, 10, 10}, {1, 1, 1}, 0.0);
  CHECK_THROWS_AS(baseline_segment(flat, 50.0, 1, 1), EmptyResultError);

  Volume lone({10, 10, 10}, {1, 1, 1}, 0.0);
  lone.at(5, 5, 5) = 100.0;
  CHECK_THROWS_AS(baseline_segment(lone, 50.0, 1, 1), EmptyResultError);
  CHECK_THROWS_AS(baseline_segment(lone, 50.0, -1, 0), ParamError);
  // Without erosion the lone voxel survives.
  CHECK(baseline_segment(lone, 50.0, 0, 0).count_true() == 1);
}

TEST_CASE("metrics CSV row matches the header layout") {
  CHECK(SegMetrics::csv_header() ==
        "dice,jaccard,vol_a_cm3,vol_b_cm3,agreement_pct,hausdorff_cm,"
        "sensitivity,specificity");
  SegMetrics m;
  m.dice = 0.5;
  m.jaccard = 0.25;
  m.volume_a_cm3 = 1.5;
  m.volume_b_cm3 = 3.0;
  m.agreement_pct = 50.0;
  m.hausdorff_cm = 0.75;
  m.sensitivity = 0.9;
  m.specificity = 0.8;
  std::istringstream row(m.csv_row());
  std::vector<double> fields;
  std::string tok;
  while (std::getline(row, tok, ',')) fields.push_back(std::stod(tok));
  REQUIRE(fields.size() == 8);
  CHECK(fields == std::vector<double>{0.5, 0.25, 1.5, 3.0, 50.0, 0.75, 0.9, 0.8});
}
