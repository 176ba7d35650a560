#include "omninav/motion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace omninav::motion {

namespace {

Eigen::Matrix3d kinematic_matrix(const WheelGeometry& geom) {
  Eigen::Matrix3d m;
  const double phis[3] = {geom.phi_front_left, geom.phi_front_right, geom.phi_back};
  for (int i = 0; i < 3; ++i) {
    m(i, 0) = std::cos(phis[i]);
    m(i, 1) = std::sin(phis[i]);
    m(i, 2) = 1.0;
  }
  return m * geom.rate_scale;
}

// sin(h)/h and (1 - cos(h))/h, well-behaved as h -> 0.
double sinc(double h) { return std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h; }
double cosc(double h) {
  if (std::abs(h) < 1e-8) {
    return h / 2.0;
  }
  const double s = std::sin(h / 2.0);
  return 2.0 * s * s / h;
}

}  // namespace

bool WheelSpeeds::finite() const {
  return std::isfinite(front_left) && std::isfinite(front_right) && std::isfinite(back);
}

WheelGeometry WheelGeometry::from_degrees(double front_left, double front_right, double back) {
  WheelGeometry g;
  g.phi_front_left = deg2rad(front_left);
  g.phi_front_right = deg2rad(front_right);
  g.phi_back = deg2rad(back);
  return g;
}

WheelSpeeds inverse_kinematics(const VelocityCommand& cmd, const WheelGeometry& geom) {
  if (!cmd.finite()) {
    throw std::invalid_argument("inverse_kinematics: non-finite command");
  }
  auto wheel = [&](double phi) {
    return geom.rate_scale * (cmd.wz + cmd.vx * std::cos(phi) + cmd.vy * std::sin(phi));
  };
  return {wheel(geom.phi_front_left), wheel(geom.phi_front_right), wheel(geom.phi_back)};
}

VelocityCommand forward_kinematics(const WheelSpeeds& ws, const WheelGeometry& geom) {
  if (!ws.finite()) {
    throw std::invalid_argument("forward_kinematics: non-finite wheel speeds");
  }
  const Eigen::Matrix3d m = kinematic_matrix(geom);
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (std::abs(m.determinant()) < 1e-9 || !lu.isInvertible()) {
    throw std::invalid_argument("forward_kinematics: wheel directions do not span the plane");
  }
  const Eigen::Vector3d twist = lu.solve(Eigen::Vector3d(ws.front_left, ws.front_right, ws.back));
  return {twist(0), twist(1), twist(2)};
}

VelocityCommand executed_twist(const VelocityCommand& cmd, const WheelGeometry& geom) {
  return forward_kinematics(inverse_kinematics(cmd, geom), geom);
}

Pose2D integrate_odometry(const Pose2D& pose, const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("integrate_odometry: dt must be positive");
  }
  if (!cmd.finite()) {
    throw std::invalid_argument("integrate_odometry: non-finite command");
  }
  // Closed form of  integral_0^dt R(theta0 + wz*t) [vx, vy]^T dt.
  const double h = cmd.wz * dt;
  const double c0 = std::cos(pose.theta);
  const double s0 = std::sin(pose.theta);
  const double int_cos = dt * (c0 * sinc(h) - s0 * cosc(h));
  const double int_sin = dt * (s0 * sinc(h) + c0 * cosc(h));
  const double dx = cmd.vx * int_cos - cmd.vy * int_sin;
  const double dy = cmd.vx * int_sin + cmd.vy * int_cos;
  return {pose.x + dx, pose.y + dy, pose.theta + h};
}

std::vector<TimedPose> circle_drive_headings(double radius, double speed, double duration,
                                             double dt, const Pose2D& start,
                                             const WheelGeometry& geom) {
  if (!(radius > 0.0) || !(speed > 0.0)) {
    throw std::invalid_argument("circle_drive_headings: radius and speed must be positive");
  }
  if (!(duration >= 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("circle_drive_headings: need duration >= 0 and dt > 0");
  }
  const VelocityCommand cmd{speed, 0.0, speed / radius};
  const VelocityCommand twist = executed_twist(cmd, geom);

  const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
  std::vector<TimedPose> out;
  out.reserve(steps + 1);
  out.push_back({0.0, start});
  if (steps == 0) {
    return out;
  }
  const double step = duration / static_cast<double>(steps);
  Pose2D pose = start;
  for (std::size_t k = 1; k <= steps; ++k) {
    pose = integrate_odometry(pose, twist, step);
    out.push_back({static_cast<double>(k) * step, pose});
  }
  return out;
}

double max_tangency_error(const std::vector<TimedPose>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) {
    return 0.0;
  }
  auto chord = [&](std::size_t a, std::size_t b) {
    return std::atan2(samples[b].pose.y - samples[a].pose.y,
                      samples[b].pose.x - samples[a].pose.x);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double tangent = 0.0;
    if (k == 0) {
      const double turned = angle_diff(samples[1].pose.theta, samples[0].pose.theta);
      tangent = chord(0, 1) - turned / 2.0;
    } else if (k + 1 == n) {
      const double turned = angle_diff(samples[k].pose.theta, samples[k - 1].pose.theta);
      tangent = chord(k - 1, k) + turned / 2.0;
    } else {
      tangent = chord(k - 1, k + 1);
    }
    worst = std::max(worst, std::abs(angle_diff(samples[k].pose.theta, tangent)));
  }
  return worst;
}

}  // namespace omninav::motion
