#pragma once

#include <vector>

#include "omninav/core.hpp"

namespace omninav::motion {

/// Drive rates of the three omni wheels. Unitless; scale with WheelGeometry::rate_scale.
struct WheelSpeeds {
  double front_left = 0.0;
  double front_right = 0.0;
  double back = 0.0;

  bool finite() const;
};

/// Drive directions of the three wheels, body frame, radians.
struct WheelGeometry {
  double phi_front_left = deg2rad(150.0);
  double phi_front_right = deg2rad(30.0);
  double phi_back = deg2rad(270.0);
  double rate_scale = 1.0;

  static WheelGeometry from_degrees(double front_left, double front_right, double back);
};

/// Body twist -> wheel rates. Each wheel gets the rotation term plus the projection
/// of the translational velocity onto its drive direction:
///   W_i = wz + vx*cos(phi_i) + vy*sin(phi_i)  ==  wz + V*cos(phi_i - heading(v)).
WheelSpeeds inverse_kinematics(const VelocityCommand& cmd, const WheelGeometry& geom = {});

/// Exact inverse of inverse_kinematics. Throws std::invalid_argument if the wheel
/// directions do not span the plane.
VelocityCommand forward_kinematics(const WheelSpeeds& ws, const WheelGeometry& geom = {});

/// Integrates a constant body twist for dt seconds (exact arc). Throws on dt <= 0.
Pose2D integrate_odometry(const Pose2D& pose, const VelocityCommand& cmd, double dt);

/// The twist the base actually executes when `cmd` is routed through the wheel controller.
VelocityCommand executed_twist(const VelocityCommand& cmd, const WheelGeometry& geom = {});

struct TimedPose {
  double t = 0.0;
  Pose2D pose;
};

/// Drives a circle of `radius` at `speed` through the wheel controller, sampling the
/// pose at uniform steps no longer than dt (the last sample lands exactly on `duration`).
std::vector<TimedPose> circle_drive_headings(double radius, double speed, double duration,
                                             double dt, const Pose2D& start = {},
                                             const WheelGeometry& geom = {});

/// Largest |heading - path tangent| over the samples. Interior samples use the symmetric
/// chord (exact for uniform arcs); endpoints use the one-sided chord corrected by half the
/// turned angle. Zero for fewer than two samples.
double max_tangency_error(const std::vector<TimedPose>& samples);

}  // namespace omninav::motion
