#include "omninav/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace omninav {

double normalize_angle(double a) {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("normalize_angle: non-finite angle");
  }
  double r = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

double angle_diff(double to, double from) { return normalize_angle(to - from); }

Point2 Pose2D::transform(Point2 local) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
}

Point2 Pose2D::inverse_transform(Point2 world) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double dx = world.x - x;
  const double dy = world.y - y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2D Pose2D::compose(const Pose2D& delta) const {
  const Point2 p = transform({delta.x, delta.y});
  return {p.x, p.y, theta + delta.theta};
}

Pose2D Pose2D::relative_to(const Pose2D& from) const {
  const Point2 p = from.inverse_transform({x, y});
  return {p.x, p.y, angle_diff(theta, from.theta)};
}

double distance(const Pose2D& a, const Pose2D& b) { return std::hypot(a.x - b.x, a.y - b.y); }
double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool within_limits(const VelocityCommand& cmd, const VelocityLimits& limits) {
  return std::hypot(cmd.vx, cmd.vy) <= limits.max_linear + 1e-12 &&
         std::abs(cmd.wz) <= limits.max_angular + 1e-12;
}

VelocityCommand clamp_to_limits(const VelocityCommand& cmd, const VelocityLimits& limits) {
  VelocityCommand out = cmd;
  const double v = std::hypot(cmd.vx, cmd.vy);
  if (v > limits.max_linear && v > 0.0) {
    const double k = limits.max_linear / v;
    out.vx *= k;
    out.vy *= k;
  }
  out.wz = std::clamp(cmd.wz, -limits.max_angular, limits.max_angular);
  return out;
}

std::string_view to_string(ScanFrame frame) {
  switch (frame) {
    case ScanFrame::Base:
      return "base";
    case ScanFrame::Depth:
      return "depth";
    case ScanFrame::Merged:
      return "merged";
  }
  return "unknown";
}

std::size_t LaserScan::expected_count() const {
  if (!(angle_increment > 0.0) || angle_max < angle_min) {
    return 0;
  }
  const double steps = (angle_max - angle_min) / angle_increment;
  return static_cast<std::size_t>(std::floor(steps + 1e-6)) + 1;
}

void LaserScan::validate() const {
  if (!(angle_increment > 0.0) || !std::isfinite(angle_increment)) {
    throw std::invalid_argument("scan: angle_increment must be positive");
  }
  if (!std::isfinite(angle_min) || !std::isfinite(angle_max) || angle_max < angle_min) {
    throw std::invalid_argument("scan: bad angular span");
  }
  if (!(range_min >= 0.0) || !(range_max > range_min)) {
    throw std::invalid_argument("scan: bad range limits");
  }
  if (ranges.size() != expected_count()) {
    throw std::invalid_argument("scan: expected " + std::to_string(expected_count()) +
                                " ranges, got " + std::to_string(ranges.size()));
  }
  for (double r : ranges) {
    if (r < 0.0) {
      continue;
    }
    if (!std::isfinite(r) || r < range_min || r > range_max) {
      throw std::invalid_argument("scan: range " + std::to_string(r) + " outside limits");
    }
  }
}

std::size_t LaserScan::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(ranges.begin(), ranges.end(), [](double r) { return r >= 0.0; }));
}

LaserScan LaserScan::make_empty(double angle_min, double increment, std::size_t count,
                                double range_min, double range_max, ScanFrame frame) {
  LaserScan scan;
  scan.angle_min = angle_min;
  scan.angle_increment = increment;
  scan.angle_max = angle_min + static_cast<double>(count == 0 ? 0 : count - 1) * increment;
  scan.range_min = range_min;
  scan.range_max = range_max;
  scan.ranges.assign(count, kInvalidRange);
  scan.frame = frame;
  return scan;
}

double scan_point_angle(const LaserScan& scan, std::size_t index) {
  if (index >= scan.ranges.size()) {
    throw std::out_of_range("scan_point_angle: index " + std::to_string(index) +
                            " out of range for " + std::to_string(scan.ranges.size()) +
                            " beams");
  }
  return scan.angle_min + static_cast<double>(index) * scan.angle_increment;
}

OccupancyGrid::OccupancyGrid(int width_, int height_, double resolution_, Pose2D origin_,
                             CellState fill)
    : width(width_), height(height_), resolution(resolution_), origin(origin_) {
  if (width_ <= 0 || height_ <= 0) {
    throw std::invalid_argument("grid: dimensions must be positive");
  }
  if (!(resolution_ > 0.0)) {
    throw std::invalid_argument("grid: resolution must be positive");
  }
  cells.assign(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), fill);
}

std::size_t OccupancyGrid::count(CellState state) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), state));
}

void OccupancyGrid::validate() const {
  if (width <= 0 || height <= 0 || !(resolution > 0.0)) {
    throw std::invalid_argument("grid: bad dimensions or resolution");
  }
  if (cells.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw std::invalid_argument("grid: cell count does not match width*height");
  }
}

std::optional<CellIndex> world_to_cell(const OccupancyGrid& grid, double x, double y) {
  const Point2 local = grid.origin.inverse_transform({x, y});
  const double fc = std::floor(local.x / grid.resolution);
  const double fr = std::floor(local.y / grid.resolution);
  if (!std::isfinite(fc) || !std::isfinite(fr) || fc < 0.0 || fr < 0.0 ||
      fc >= static_cast<double>(grid.width) || fr >= static_cast<double>(grid.height)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(fc), static_cast<int>(fr)};
}

Point2 cell_center(const OccupancyGrid& grid, CellIndex cell) {
  return grid.origin.transform({(cell.col + 0.5) * grid.resolution,
                                (cell.row + 0.5) * grid.resolution});
}

}  // namespace omninav
