#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

namespace omninav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sentinel stored in LaserScan::ranges for beams with no usable return.
inline constexpr double kInvalidRange = -1.0;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi]. Throws std::invalid_argument on NaN/inf.
double normalize_angle(double a);

/// Signed shortest rotation from `from` to `to`, in (-pi, pi].
double angle_diff(double to, double from);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Planar pose. Body frame: X forward, Y left, theta counter-clockwise.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  /// Maps a point from this pose's frame into the parent frame.
  Point2 transform(Point2 local) const;
  /// Maps a point from the parent frame into this pose's frame.
  Point2 inverse_transform(Point2 world) const;

  /// this (+) delta, with delta expressed in this pose's frame.
  Pose2D compose(const Pose2D& delta) const;
  /// The delta d such that from.compose(d) == *this.
  Pose2D relative_to(const Pose2D& from) const;

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

double distance(const Pose2D& a, const Pose2D& b);
double distance(Point2 a, Point2 b);

/// Body-frame twist.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;

  bool finite() const { return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(wz); }
  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

struct VelocityLimits {
  double max_linear = 0.5;   // m/s, applied to hypot(vx, vy)
  double max_angular = 1.0;  // rad/s
};

bool within_limits(const VelocityCommand& cmd, const VelocityLimits& limits);
/// Scales the translational part down to max_linear and clamps wz.
VelocityCommand clamp_to_limits(const VelocityCommand& cmd, const VelocityLimits& limits);

enum class ScanFrame : std::uint8_t { Base, Depth, Merged };

std::string_view to_string(ScanFrame frame);

struct LaserScan {
  double angle_min = 0.0;
  double angle_max = 0.0;
  double angle_increment = 0.0;
  double range_min = 0.0;
  double range_max = 0.0;
  std::vector<double> ranges;
  ScanFrame frame = ScanFrame::Base;

  /// floor((angle_max - angle_min) / angle_increment) + 1, tolerant of rounding.
  std::size_t expected_count() const;
  /// Throws std::invalid_argument if the metadata or ranges break the scan invariants.
  void validate() const;

  bool is_valid(std::size_t i) const { return ranges[i] >= 0.0; }
  std::size_t valid_count() const;

  /// Builds an all-invalid scan spanning [angle_min, angle_min + (count-1)*increment].
  static LaserScan make_empty(double angle_min, double increment, std::size_t count,
                              double range_min, double range_max, ScanFrame frame);
};

/// angle_min + index * angle_increment. Throws std::out_of_range.
double scan_point_angle(const LaserScan& scan, std::size_t index);

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

struct CellIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Row 0 is the row nearest origin.y; column 0 nearest origin.x.
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  Pose2D origin;
  std::vector<CellState> cells;

  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, Pose2D origin,
                CellState fill = CellState::Free);

  std::size_t size() const { return cells.size(); }
  bool in_bounds(int col, int row) const {
    return col >= 0 && row >= 0 && col < width && row < height;
  }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  CellState at(int col, int row) const { return cells[index(col, row)]; }
  CellState& at(int col, int row) { return cells[index(col, row)]; }

  std::size_t count(CellState state) const;
  void validate() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

/// Cell containing (x, y), or nullopt when the point lies outside the grid.
std::optional<CellIndex> world_to_cell(const OccupancyGrid& grid, double x, double y);
Point2 cell_center(const OccupancyGrid& grid, CellIndex cell);

struct PointCloud {
  std::vector<Point3> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

}  // namespace omninav
