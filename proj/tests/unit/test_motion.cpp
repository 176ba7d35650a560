#include <gtest/gtest.h>

#include <random>

#include "omninav/motion.hpp"

using namespace omninav;
using namespace omninav::motion;

namespace {

// Small-step Euler integration of the body twist; the cross-check for the exact arc.
Pose2D euler(Pose2D p, const VelocityCommand& c, double duration, double h) {
  double x = p.x;
  double y = p.y;
  double th = p.theta;
  const auto n = static_cast<long>(std::llround(duration / h));
  for (long i = 0; i < n; ++i) {
    x += (c.vx * std::cos(th) - c.vy * std::sin(th)) * h;
    y += (c.vx * std::sin(th) + c.vy * std::cos(th)) * h;
    th += c.wz * h;
  }
  return {x, y, th};
}

}  // namespace

TEST(InverseKinematics, Examples) {
  const WheelSpeeds z = inverse_kinematics({0, 0, 0});
  EXPECT_EQ(z.front_left, 0.0);
  EXPECT_EQ(z.front_right, 0.0);
  EXPECT_EQ(z.back, 0.0);

  const WheelSpeeds spin = inverse_kinematics({0, 0, 1});
  EXPECT_NEAR(spin.front_left, 1.0, 1e-15);
  EXPECT_NEAR(spin.front_right, 1.0, 1e-15);
  EXPECT_NEAR(spin.back, 1.0, 1e-15);

  const WheelSpeeds v = inverse_kinematics({std::cos(deg2rad(30)), std::sin(deg2rad(30)), 0});
  EXPECT_NEAR(v.front_right, 1.0, 1e-12);
  EXPECT_NEAR(v.front_left, -0.5, 1e-12);
  EXPECT_NEAR(v.back, -0.5, 1e-12);
}

TEST(InverseKinematics, MatchesPolarForm) {
  // W_i = theta + V cos(phi_i - omega) with V, omega the polar form of (vx, vy).
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double phi[3] = {deg2rad(150), deg2rad(30), deg2rad(270)};
  for (int i = 0; i < 1000; ++i) {
    const VelocityCommand c{u(rng), u(rng), u(rng)};
    const double V = std::hypot(c.vx, c.vy);
    const double w = std::atan2(c.vy, c.vx);
    const WheelSpeeds ws = inverse_kinematics(c);
    ASSERT_NEAR(ws.front_left, c.wz + V * std::cos(phi[0] - w), 1e-12);
    ASSERT_NEAR(ws.front_right, c.wz + V * std::cos(phi[1] - w), 1e-12);
    ASSERT_NEAR(ws.back, c.wz + V * std::cos(phi[2] - w), 1e-12);
  }
}

TEST(InverseKinematics, RejectsNonFinite) {
  EXPECT_THROW(inverse_kinematics({std::nan(""), 0, 0}), std::invalid_argument);
}

TEST(InverseKinematics, Linearity) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    const VelocityCommand c1{u(rng), u(rng), u(rng)};
    const VelocityCommand c2{u(rng), u(rng), u(rng)};
    const double a = u(rng);
    const double b = u(rng);
    const WheelSpeeds l = inverse_kinematics(
        {a * c1.vx + b * c2.vx, a * c1.vy + b * c2.vy, a * c1.wz + b * c2.wz});
    const WheelSpeeds w1 = inverse_kinematics(c1);
    const WheelSpeeds w2 = inverse_kinematics(c2);
    ASSERT_NEAR(l.front_left, a * w1.front_left + b * w2.front_left, 1e-12);
    ASSERT_NEAR(l.front_right, a * w1.front_right + b * w2.front_right, 1e-12);
    ASSERT_NEAR(l.back, a * w1.back + b * w2.back, 1e-12);
  }
}

TEST(ForwardKinematics, Examples) {
  const VelocityCommand z = forward_kinematics({0, 0, 0});
  EXPECT_NEAR(z.vx, 0, 1e-15);
  EXPECT_NEAR(z.vy, 0, 1e-15);
  EXPECT_NEAR(z.wz, 0, 1e-15);
  const VelocityCommand spin = forward_kinematics({1, 1, 1});
  EXPECT_NEAR(spin.vx, 0, 1e-12);
  EXPECT_NEAR(spin.vy, 0, 1e-12);
  EXPECT_NEAR(spin.wz, 1, 1e-12);
  const VelocityCommand v = forward_kinematics({-0.5, 1.0, -0.5});
  EXPECT_NEAR(v.vx, std::cos(deg2rad(30)), 1e-12);
  EXPECT_NEAR(v.vy, std::sin(deg2rad(30)), 1e-12);
  EXPECT_NEAR(v.wz, 0, 1e-12);
}

TEST(ForwardKinematics, RoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    const VelocityCommand c{u(rng), u(rng), u(rng)};
    const VelocityCommand r = forward_kinematics(inverse_kinematics(c));
    ASSERT_NEAR(r.vx, c.vx, 1e-9);
    ASSERT_NEAR(r.vy, c.vy, 1e-9);
    ASSERT_NEAR(r.wz, c.wz, 1e-9);
  }
}

TEST(ForwardKinematics, SingularGeometryThrows) {
  // Three parallel drive directions cannot resolve lateral motion.
  const WheelGeometry g = WheelGeometry::from_degrees(0, 0, 180);
  EXPECT_THROW(forward_kinematics({1, 1, 1}, g), std::invalid_argument);
}

TEST(IntegrateOdometry, Examples) {
  const Pose2D a = integrate_odometry({}, {1, 0, 0}, 1.0);
  EXPECT_NEAR(a.x, 1, 1e-15);
  EXPECT_NEAR(a.y, 0, 1e-15);
  const Pose2D b = integrate_odometry({}, {0, 0, kPi / 2}, 1.0);
  EXPECT_NEAR(b.x, 0, 1e-15);
  EXPECT_NEAR(b.theta, kPi / 2, 1e-15);
  const Pose2D c = integrate_odometry({}, {kPi / 2, 0, kPi / 2}, 1.0);
  EXPECT_NEAR(c.x, 1, 1e-12);
  EXPECT_NEAR(c.y, 1, 1e-12);
  EXPECT_NEAR(c.theta, kPi / 2, 1e-12);
  EXPECT_THROW(integrate_odometry({}, {1, 0, 0}, 0.0), std::invalid_argument);
  EXPECT_THROW(integrate_odometry({}, {1, 0, 0}, -1.0), std::invalid_argument);
}

TEST(IntegrateOdometry, AgreesWithEuler) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const Pose2D start(u(rng), u(rng), 3 * u(rng));
    const VelocityCommand c{u(rng), u(rng), 2 * u(rng)};
    const Pose2D exact = integrate_odometry(start, c, 1.0);
    const Pose2D approx = euler(start, c, 1.0, 1e-5);
    ASSERT_NEAR(exact.x, approx.x, 1e-4);
    ASSERT_NEAR(exact.y, approx.y, 1e-4);
    ASSERT_NEAR(angle_diff(exact.theta, approx.theta), 0.0, 1e-9);
  }
}

TEST(ExecutedTwist, CorrectedControllerIsTransparent) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const VelocityCommand c{u(rng), u(rng), u(rng)};
    const VelocityCommand e = executed_twist(c);
    ASSERT_NEAR(e.vx, c.vx, 1e-12);
    ASSERT_NEAR(e.vy, c.vy, 1e-12);
    ASSERT_NEAR(e.wz, c.wz, 1e-12);
  }
}

TEST(CircleDrive, ClosesAndStaysTangent) {
  const auto s = circle_drive_headings(1.0, kPi / 2, 4.0, 1e-3);
  EXPECT_LT(distance(s.front().pose, s.back().pose), 1e-3);
  EXPECT_LT(max_tangency_error(s), 1e-6);
  EXPECT_DOUBLE_EQ(s.back().t, 4.0);
}

TEST(CircleDrive, HalfCircle) {
  const auto s = circle_drive_headings(1.0, kPi / 2, 2.0, 1e-3);
  const Pose2D& p = s.back().pose;
  EXPECT_NEAR(p.x, 0.0, 1e-9);
  EXPECT_NEAR(p.y, 2.0, 1e-9);
  EXPECT_NEAR(std::abs(p.theta), kPi, 1e-9);
}

TEST(CircleDrive, TangencyAgainstChordOracle) {
  // Independent check: for uniform samples of a circle, the chord between neighbours
  // k-1 and k+1 is parallel to the tangent at k.
  const auto s = circle_drive_headings(0.7, 0.9, 6.0, 0.01);
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double dx = s[k + 1].pose.x - s[k - 1].pose.x;
    const double dy = s[k + 1].pose.y - s[k - 1].pose.y;
    ASSERT_LT(std::abs(angle_diff(s[k].pose.theta, std::atan2(dy, dx))), 1e-6);
  }
}

TEST(CircleDrive, DurationZeroIsStartOnly) {
  const auto s = circle_drive_headings(1.0, 1.0, 0.0, 0.1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].t, 0.0);
  EXPECT_THROW(circle_drive_headings(0.0, 1.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(circle_drive_headings(1.0, -1.0, 1.0, 0.1), std::invalid_argument);
}
