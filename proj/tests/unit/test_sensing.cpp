#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "omninav/sensing.hpp"
#include "oracles.hpp"

using namespace omninav;
using namespace omninav::sensing;

namespace {

DepthImage flat_image(int width, double depth) {
  DepthImage img;
  img.width = width;
  img.height = 1;
  img.depths.assign(static_cast<std::size_t>(width), depth);
  return img;
}

LaserScan random_scan(std::mt19937_64& rng, double lo, double inc, std::size_t n,
                      ScanFrame frame, double p_valid) {
  LaserScan s = LaserScan::make_empty(lo, inc, n, 0.1, 4.0, frame);
  std::uniform_real_distribution<double> r(0.1, 4.0);
  std::bernoulli_distribution valid(p_valid);
  for (double& v : s.ranges) {
    if (valid(rng)) {
      v = r(rng);
    }
  }
  return s;
}

}  // namespace

TEST(DepthImageToScan, AllInvalidRow) {
  const LaserScan s = depth_image_to_scan(flat_image(320, 0.0), {});
  EXPECT_EQ(s.ranges.size(), 320u);
  EXPECT_EQ(s.valid_count(), 0u);
  EXPECT_EQ(s.frame, ScanFrame::Depth);
  for (double r : s.ranges) {
    EXPECT_EQ(r, kInvalidRange);
  }
}

TEST(DepthImageToScan, FlatWall) {
  const DepthImage img = flat_image(321, 2.0);
  const LaserScan s = depth_image_to_scan(img, {});
  ASSERT_EQ(s.ranges.size(), 321u);
  EXPECT_NEAR(s.ranges[160], 2.0, 1e-12);
  // Edge bins read the edge columns, which sit at +/- fov/2 by construction.
  const double half = img.horizontal_fov / 2;
  EXPECT_NEAR(s.ranges.front(), 2.0 / std::cos(half), 1e-9);
  EXPECT_NEAR(s.ranges.back(), 2.0 / std::cos(half), 1e-9);
  EXPECT_NEAR(s.angle_min, -half, 1e-12);
  EXPECT_NEAR(scan_point_angle(s, 320), half, 1e-12);
  // Every bin: range = depth / cos(bearing of the column it reads), within one column.
  for (std::size_t i = 0; i < s.ranges.size(); ++i) {
    const double a = scan_point_angle(s, i);
    EXPECT_NEAR(s.ranges[i] * std::cos(a), 2.0, 2.0 * 0.004);
  }
}

TEST(DepthImageToScan, SingleCentrePixel) {
  DepthImage img = flat_image(321, 0.0);
  img.depths[160] = 1.5;
  const LaserScan s = depth_image_to_scan(img, {});
  EXPECT_EQ(s.valid_count(), 1u);
  EXPECT_EQ(s.ranges[160], 1.5);
  EXPECT_NEAR(scan_point_angle(s, 160), 0.0, 1e-12);
}

TEST(DepthImageToScan, SliceRowOutOfBounds) {
  DepthScanConfig cfg;
  cfg.slice_row = 1;
  EXPECT_THROW(depth_image_to_scan(flat_image(10, 1.0), cfg), std::out_of_range);
}

TEST(DepthImageToScan, LeftmostColumnIsPositiveBearing) {
  DepthImage img = flat_image(101, 0.0);
  img.depths[0] = 1.0;
  const LaserScan s = depth_image_to_scan(img, {});
  EXPECT_GT(s.ranges.back(), 0.0);
  EXPECT_EQ(s.ranges.front(), kInvalidRange);
}

TEST(TransformScanToBody, Examples) {
  LaserScan s = LaserScan::make_empty(-0.5, 0.1, 11, 0.1, 3.0, ScanFrame::Base);
  s.ranges[5] = 1.0;  // bearing 0
  s.ranges[2] = 2.0;
  const LaserScan id = transform_scan_to_body(s, 0.0, {});
  ASSERT_EQ(id.ranges.size(), s.ranges.size());
  for (std::size_t i = 0; i < s.ranges.size(); ++i) {
    EXPECT_NEAR(id.ranges[i], s.ranges[i], 1e-12);
  }

  const LaserScan left = transform_scan_to_body(s, kPi / 2, {});
  EXPECT_NEAR(scan_point_angle(left, 5), kPi / 2, 1e-12);
  EXPECT_NEAR(left.ranges[5], 1.0, 1e-12);

  const LaserScan off = transform_scan_to_body(s, 0.0, {0.1, 0.0});
  EXPECT_NEAR(off.ranges[5], 1.1, 1e-12);
  EXPECT_NEAR(scan_point_angle(off, 5), 0.0, 1e-12);
}

TEST(BaseLaserConfig, Validation) {
  BaseLaserConfig ok;
  EXPECT_NO_THROW(ok.validate());
  BaseLaserConfig overlap;
  overlap.centers = {0.0, deg2rad(50.0), deg2rad(-90.0)};
  EXPECT_THROW(overlap.validate(), std::invalid_argument);
  BaseLaserConfig sparse;
  sparse.points_per_laser = 1;
  EXPECT_THROW(sparse.validate(), std::invalid_argument);
  EXPECT_NEAR(ok.beam_increment(), deg2rad(60.0) / 14, 1e-15);
}

TEST(MergeScans, Examples) {
  const double inc = deg2rad(58.0) / 319;
  LaserScan base = LaserScan::make_empty(deg2rad(-120), deg2rad(60.0 / 14), 57, 0.1, 3.0,
                                         ScanFrame::Base);
  LaserScan depth = LaserScan::make_empty(deg2rad(-29), inc, 320, 0.3, 4.0, ScanFrame::Depth);
  const LaserScan empty = merge_scans(base, depth);
  EXPECT_EQ(empty.valid_count(), 0u);
  EXPECT_EQ(empty.frame, ScanFrame::Merged);
  EXPECT_EQ(empty.angle_increment, inc);

  // Overlap: a base beam exactly on a depth bin.
  LaserScan b2 = LaserScan::make_empty(deg2rad(-29), inc, 1, 0.1, 3.0, ScanFrame::Base);
  b2.ranges[0] = 2.0;
  LaserScan d2 = depth;
  d2.ranges[0] = 1.5;
  EXPECT_EQ(merge_scans(b2, d2).ranges[0], 1.5);
  d2.ranges[0] = 2.5;
  EXPECT_EQ(merge_scans(b2, d2).ranges[0], 2.0);
}

TEST(MergeScans, GapsBetweenSparseBeamsStayInvalid) {
  const double inc = deg2rad(58.0) / 319;
  LaserScan base = LaserScan::make_empty(deg2rad(60), deg2rad(60.0 / 14), 15, 0.1, 3.0,
                                         ScanFrame::Base);
  std::fill(base.ranges.begin(), base.ranges.end(), 1.0);
  const LaserScan depth =
      LaserScan::make_empty(deg2rad(-29), inc, 320, 0.3, 4.0, ScanFrame::Depth);
  const LaserScan m = merge_scans(base, depth);
  // Valid bins are exactly those with a beam inside their closed +/- inc/2 window. Here the
  // lattices line up so that three beams sit on a bin boundary and feed two bins each.
  std::size_t windows_hit = 0;
  std::size_t on_boundary = 0;
  for (std::size_t k = 0; k < m.ranges.size(); ++k) {
    const double a = scan_point_angle(m, k);
    int beams = 0;
    for (std::size_t i = 0; i < base.ranges.size(); ++i) {
      const double off = std::abs(scan_point_angle(base, i) - a) / inc;
      beams += off <= 0.5 + 1e-9 ? 1 : 0;
      on_boundary += std::abs(off - 0.5) < 1e-9 ? 1 : 0;
    }
    windows_hit += beams > 0 ? 1 : 0;
  }
  EXPECT_EQ(m.valid_count(), windows_hit);
  EXPECT_EQ(on_boundary, 6u);
  EXPECT_EQ(windows_hit, 18u);
  // Bins between two neighbouring base beams, outside the depth span.
  std::size_t invalid_between = 0;
  for (std::size_t i = 0; i < m.ranges.size(); ++i) {
    const double a = scan_point_angle(m, i);
    if (a > deg2rad(61) && a < deg2rad(64) && m.ranges[i] < 0) {
      ++invalid_between;
    }
  }
  EXPECT_GT(invalid_between, 10u);
}

TEST(MergeScans, RejectsWrongFrames) {
  const LaserScan a = LaserScan::make_empty(0, 0.1, 3, 0.1, 3, ScanFrame::Depth);
  const LaserScan b = LaserScan::make_empty(0, 0.1, 3, 0.1, 3, ScanFrame::Base);
  EXPECT_THROW(merge_scans(a, a), std::invalid_argument);
  EXPECT_THROW(merge_scans(a, b), std::invalid_argument);
  EXPECT_NO_THROW(merge_scans(b, a));
}

TEST(MergeScans, MatchesBruteForceOnRandomPairs) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> lo(-2.5, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const double inc = deg2rad(58.0) / 319;
    const LaserScan depth = random_scan(rng, deg2rad(-29), inc, 320, ScanFrame::Depth, 0.7);
    const LaserScan base =
        random_scan(rng, lo(rng), deg2rad(60.0 / 14), 40, ScanFrame::Base, 0.8);
    const LaserScan m = merge_scans(base, depth);
    ASSERT_NO_THROW(m.validate());
    ASSERT_EQ(m.angle_increment, inc);
    ASSERT_EQ(m.ranges.size(), merged_bin_count(base, depth));

    // Span: the union hull, on the depth lattice, no wider than needed.
    const double base_hi = base.angle_min + 39 * base.angle_increment;
    const double depth_hi = depth.angle_min + 319 * inc;
    const double m_hi = scan_point_angle(m, m.ranges.size() - 1);
    ASSERT_LE(m.angle_min, std::min(base.angle_min, depth.angle_min) + inc / 2);
    ASSERT_GT(m.angle_min, std::min(base.angle_min, depth.angle_min) - inc);
    ASSERT_GE(m_hi, std::max(base_hi, depth_hi) - inc / 2);
    ASSERT_LT(m_hi, std::max(base_hi, depth_hi) + inc);

    const std::vector<double> expect = oracle::brute_merge(base, depth, m);
    for (std::size_t k = 0; k < m.ranges.size(); ++k) {
      ASSERT_EQ(m.ranges[k], expect[k]) << "bin " << k;
    }

    // Coverage never shrinks relative to the depth scan.
    ASSERT_GE(m.valid_count(), depth.valid_count());
  }
}

TEST(ScanText, RoundTrip) {
  std::mt19937_64 rng(31);
  const LaserScan s = random_scan(rng, -0.3, 0.01, 61, ScanFrame::Depth, 0.5);
  std::stringstream ss;
  write_scan_text(ss, s);
  const LaserScan r = read_scan_text(ss, ScanFrame::Depth);
  EXPECT_EQ(r.angle_min, s.angle_min);
  EXPECT_EQ(r.angle_increment, s.angle_increment);
  EXPECT_EQ(r.ranges, s.ranges);
}
