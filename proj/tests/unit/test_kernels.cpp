#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "omninav/kernels.hpp"
#include "omninav/scenes.hpp"

using namespace omninav;
using namespace omninav::kernels;

namespace {

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(RasterizePoints, SerialParallelIdentical) {
  const PointCloud c = scenes::floor_plan_cloud(scenes::lab_floor_plan(), 50000, 5);
  const RasterFrame f{0.0, 0.0, 0.05, 400, 300};
  std::vector<std::uint8_t> a(400 * 300, 0);
  std::vector<std::uint8_t> b(400 * 300, 0);
  rasterize_points(c.points, f, a, Execution::Serial);
  rasterize_points(c.points, f, b, Execution::Parallel);
  EXPECT_EQ(a, b);
  // Every point's cell is set and nothing else.
  std::vector<std::uint8_t> direct(400 * 300, 0);
  for (const auto& p : c.points) {
    direct[f.cell_of(p.x, p.y)] = 1;
  }
  EXPECT_EQ(a, direct);
}

TEST(SquaredDistanceTransform, MatchesBruteForce) {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<int> side(1, 50);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = side(rng);
    const int h = side(rng);
    std::bernoulli_distribution occ(trial % 3 == 0 ? 0.01 : 0.1);
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(w * h));
    for (auto& g : grid) {
      g = occ(rng) ? 1 : 0;
    }
    std::vector<double> serial(grid.size());
    std::vector<double> parallel(grid.size());
    squared_distance_transform(grid, w, h, serial, Execution::Serial);
    squared_distance_transform(grid, w, h, parallel, Execution::Parallel);
    ASSERT_TRUE(bitwise_equal(serial, parallel));
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double best = -1;
        for (int rr = 0; rr < h; ++rr) {
          for (int cc = 0; cc < w; ++cc) {
            if (grid[rr * w + cc]) {
              const double d = double(rr - r) * (rr - r) + double(cc - c) * (cc - c);
              best = best < 0 ? d : std::min(best, d);
            }
          }
        }
        const double got = serial[r * w + c];
        if (best < 0) {
          ASSERT_GE(got, kFarSquared);
        } else {
          ASSERT_EQ(got, best) << "cell " << c << "," << r;
        }
      }
    }
  }
}

TEST(ScorePoses, MatchesDirectFormulaAndIsBitIdentical) {
  std::mt19937_64 rng(61);
  const int w = 60, h = 40;
  std::vector<double> dist(w * h);
  std::uniform_real_distribution<double> ud(0.0, 2.0);
  for (auto& d : dist) {
    d = ud(rng);
  }
  const FieldView field{dist, w, h, 0.05, -0.5, -0.5, 2.0};
  std::vector<BodyBeam> beams;
  std::uniform_real_distribution<double> ua(-kPi, kPi);
  std::uniform_real_distribution<double> ur(0.1, 3.0);
  for (int i = 0; i < 60; ++i) {
    const double a = ua(rng);
    beams.push_back({std::cos(a), std::sin(a), ur(rng)});
  }
  std::vector<Pose2D> poses;
  std::uniform_real_distribution<double> up(-0.5, 3.0);
  for (int i = 0; i < 2000; ++i) {
    poses.emplace_back(up(rng), up(rng), ua(rng));
  }
  const BeamModel model{0.9, 0.1, 0.15, 4.0};
  std::vector<double> s(poses.size());
  std::vector<double> p(poses.size());
  score_poses(poses, beams, field, model, s, Execution::Serial);
  score_poses(poses, beams, field, model, p, Execution::Parallel);
  ASSERT_TRUE(bitwise_equal(s, p));
  for (std::size_t i = 0; i < 50; ++i) {
    double expect = 0.0;
    for (const auto& b : beams) {
      const double ex = poses[i].x + b.range * std::cos(poses[i].theta + std::atan2(b.sin_bearing, b.cos_bearing));
      const double ey = poses[i].y + b.range * std::sin(poses[i].theta + std::atan2(b.sin_bearing, b.cos_bearing));
      const double d = field.lookup(ex, ey);
      const double gauss = std::exp(-0.5 * d * d / (0.15 * 0.15)) / (0.15 * std::sqrt(2 * kPi));
      expect += std::log(0.9 * gauss + 0.1 / 4.0);
    }
    ASSERT_NEAR(s[i], expect, 1e-6);
  }
}

TEST(FieldView, OutsideIsMaxDistance) {
  std::vector<double> d{0.1, 0.2, 0.3, 0.4};
  const FieldView f{d, 2, 2, 1.0, 0.0, 0.0, 9.0};
  EXPECT_EQ(f.lookup(1.5, 0.5), 0.2);
  EXPECT_EQ(f.lookup(0.5, 1.5), 0.3);
  EXPECT_EQ(f.lookup(-0.1, 0.5), 9.0);
  EXPECT_EQ(f.lookup(2.0, 0.5), 9.0);
}
