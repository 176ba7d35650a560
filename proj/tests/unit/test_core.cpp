#include <gtest/gtest.h>

#include <random>

#include "omninav/core.hpp"

using namespace omninav;

TEST(NormalizeAngle, Examples) {
  EXPECT_EQ(normalize_angle(0.0), 0.0);
  EXPECT_NEAR(normalize_angle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(normalize_angle(-1.5 * kPi), kPi / 2, 1e-12);
  EXPECT_EQ(normalize_angle(-kPi), kPi);
  EXPECT_EQ(normalize_angle(kPi), kPi);
}

TEST(NormalizeAngle, RejectsNonFinite) {
  EXPECT_THROW(normalize_angle(std::nan("")), std::invalid_argument);
  EXPECT_THROW(normalize_angle(HUGE_VAL), std::invalid_argument);
}

TEST(NormalizeAngle, IdempotentAndInRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng);
    const double n = normalize_angle(a);
    ASSERT_GT(n, -kPi);
    ASSERT_LE(n, kPi);
    ASSERT_EQ(normalize_angle(n), n);
    // Same angle modulo 2*pi.
    ASSERT_NEAR(std::remainder(a - n, kTwoPi), 0.0, 1e-9);
  }
}

TEST(AngleDiff, ShortestSignedRotation) {
  EXPECT_NEAR(angle_diff(deg2rad(-179.0), deg2rad(179.0)), deg2rad(2.0), 1e-12);
  EXPECT_NEAR(angle_diff(deg2rad(10.0), deg2rad(30.0)), deg2rad(-20.0), 1e-12);
}

TEST(Pose2D, ComposeAndRelativeAreInverse) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) {
    const Pose2D a(u(rng), u(rng), u(rng));
    const Pose2D d(u(rng), u(rng), u(rng));
    const Pose2D b = a.compose(d);
    const Pose2D back = b.relative_to(a);
    ASSERT_NEAR(back.x, d.x, 1e-9);
    ASSERT_NEAR(back.y, d.y, 1e-9);
    ASSERT_NEAR(angle_diff(back.theta, d.theta), 0.0, 1e-9);
  }
}

TEST(Pose2D, TransformFollowsBodyFrame) {
  const Pose2D p(1.0, 2.0, kPi / 2);
  const Point2 ahead = p.transform({1.0, 0.0});  // X forward
  EXPECT_NEAR(ahead.x, 1.0, 1e-12);
  EXPECT_NEAR(ahead.y, 3.0, 1e-12);
  const Point2 left = p.transform({0.0, 1.0});  // Y left
  EXPECT_NEAR(left.x, 0.0, 1e-12);
  EXPECT_NEAR(left.y, 2.0, 1e-12);
  const Point2 local = p.inverse_transform(left);
  EXPECT_NEAR(local.x, 0.0, 1e-12);
  EXPECT_NEAR(local.y, 1.0, 1e-12);
}

TEST(VelocityLimits, DefaultsAndClamp) {
  const VelocityLimits lim;
  EXPECT_TRUE(within_limits({0.3, 0.4, 1.0}, lim));
  EXPECT_FALSE(within_limits({0.4, 0.4, 0.0}, lim));
  EXPECT_FALSE(within_limits({0.0, 0.0, -1.5}, lim));
  const VelocityCommand c = clamp_to_limits({3.0, 4.0, -2.0}, lim);
  EXPECT_NEAR(c.vx, 0.3, 1e-12);
  EXPECT_NEAR(c.vy, 0.4, 1e-12);
  EXPECT_EQ(c.wz, -1.0);
}

TEST(ScanPointAngle, Examples) {
  LaserScan s = LaserScan::make_empty(-1.0, 0.5, 5, 0.1, 4.0, ScanFrame::Base);
  EXPECT_EQ(scan_point_angle(s, 0), -1.0);
  EXPECT_EQ(scan_point_angle(s, 2), 0.0);
  LaserScan t = LaserScan::make_empty(0.0, 0.1, 11, 0.1, 4.0, ScanFrame::Base);
  EXPECT_NEAR(scan_point_angle(t, 10), 1.0, 1e-12);
  EXPECT_THROW(scan_point_angle(t, 11), std::out_of_range);
}

TEST(LaserScan, CountInvariantAndValidation) {
  LaserScan s = LaserScan::make_empty(-0.5, 0.1, 11, 0.1, 4.0, ScanFrame::Depth);
  EXPECT_EQ(s.expected_count(), 11u);
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.valid_count(), 0u);
  s.ranges[3] = 2.0;
  EXPECT_EQ(s.valid_count(), 1u);
  s.ranges[4] = 5.0;  // beyond range_max and not the sentinel
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.ranges[4] = -1.0;
  s.ranges.pop_back();
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(WorldToCell, Examples) {
  const OccupancyGrid g(10, 10, 0.05, Pose2D{}, CellState::Free);
  EXPECT_EQ(world_to_cell(g, 0.0, 0.0), (CellIndex{0, 0}));
  EXPECT_EQ(world_to_cell(g, 0.26, 0.01), (CellIndex{5, 0}));
  EXPECT_FALSE(world_to_cell(g, -0.1, 0.0).has_value());
  EXPECT_FALSE(world_to_cell(g, 0.5, 0.0).has_value());
}

TEST(WorldToCell, CellCenterRoundTrip) {
  const OccupancyGrid g(37, 23, 0.07, Pose2D(-1.3, 2.2, 0.0), CellState::Free);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const Point2 p = cell_center(g, {c, r});
      ASSERT_EQ(world_to_cell(g, p.x, p.y), (CellIndex{c, r}));
    }
  }
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-1.3, -1.3 + 37 * 0.07);
  std::uniform_real_distribution<double> uy(2.2, 2.2 + 23 * 0.07);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const auto cell = world_to_cell(g, x, y);
    ASSERT_TRUE(cell.has_value());
    const Point2 c = cell_center(g, *cell);
    ASSERT_LE(std::abs(c.x - x), g.resolution / 2 + 1e-12);
    ASSERT_LE(std::abs(c.y - y), g.resolution / 2 + 1e-12);
  }
}

TEST(OccupancyGrid, Invariants) {
  OccupancyGrid g(4, 3, 0.1, Pose2D{}, CellState::Unknown);
  EXPECT_EQ(g.size(), 12u);
  EXPECT_EQ(g.count(CellState::Unknown), 12u);
  EXPECT_NO_THROW(g.validate());
  g.cells.pop_back();
  EXPECT_THROW(g.validate(), std::invalid_argument);
  OccupancyGrid bad(2, 2, 0.1, Pose2D{}, CellState::Free);
  bad.resolution = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
