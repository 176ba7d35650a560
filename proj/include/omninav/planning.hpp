#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omninav/core.hpp"

namespace omninav::planning {

// ---------------------------------------------------------------------------
// Costmap

struct CostmapConfig {
  double size = 6.0;  // metres per side of the rolling window
  double resolution = 0.05;
  double inflation_radius = 0.3;
};

enum class CostState : std::uint8_t { Clear, Obstacle };

/// Robot-centred rolling window aligned to the world lattice of `resolution`, so cells keep
/// their identity as the window moves. Each obstacle remembers the body-frame bearing it was
/// inserted at.
class Costmap {
 public:
  explicit Costmap(CostmapConfig cfg = {}, Point2 center = {});

  /// Slides the window so `center` is in its middle cell. Cells leaving the window are lost.
  void recenter(Point2 center);

  int width() const { return size_; }
  int height() const { return size_; }
  double resolution() const { return cfg_.resolution; }
  const CostmapConfig& config() const { return cfg_; }

  std::optional<CellIndex> cell_of(double x, double y) const;
  Point2 center_of(CellIndex cell) const;

  CostState state(CellIndex cell) const { return state_[index(cell)]; }
  /// Insertion bearing of an obstacle cell; nullopt for clear cells.
  std::optional<double> bearing(CellIndex cell) const;

  void mark(CellIndex cell, double body_bearing);
  void clear(CellIndex cell);

  std::size_t obstacle_count() const;
  std::vector<CellIndex> obstacles() const;

  /// True if an obstacle cell within `radius` of the segment a->b lies ahead of `a` along
  /// the segment direction.
  bool segment_blocked(Point2 a, Point2 b, double radius) const;

 private:
  std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(size_) +
           static_cast<std::size_t>(c.col);
  }

  CostmapConfig cfg_;
  int size_ = 0;
  long long origin_gx_ = 0;  // world lattice index of cell (0, 0)
  long long origin_gy_ = 0;
  std::vector<CostState> state_;
  std::vector<double> bearing_;
};

struct ClearedCell {
  Point2 center;
  double bearing_at_clear = 0.0;  // body-frame bearing when it was cleared
};

struct CostmapUpdateReport {
  std::size_t inserted = 0;
  std::vector<ClearedCell> cleared;
};

/// Inserts every valid merged-scan endpoint, then clears obstacle cells that currently lie
/// within +/- facing_half_angle of the robot heading and received no return this scan.
/// Cells outside the facing cone are never cleared. Throws unless scan.frame == Merged.
CostmapUpdateReport costmap_update(Costmap& cm, const LaserScan& merged, const Pose2D& robot,
                                   double facing_half_angle);

// ---------------------------------------------------------------------------
// Global planner

/// Octile path length as (straight steps, diagonal steps); exact comparison, no rounding.
struct OctileCost {
  long long straight = 0;
  long long diagonal = 0;

  double value() const;
  friend bool operator==(const OctileCost&, const OctileCost&) = default;
};

/// Cells the planner may enter: free and farther than the inflation radius from anything
/// occupied. Unknown space is never traversable.
class Traversability {
 public:
  Traversability(const OccupancyGrid& map, double inflation_radius);

  int width() const { return width_; }
  int height() const { return height_; }
  bool passable(int col, int row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_ &&
           passable_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  bool occupied_or_unknown(int col, int row) const;
  /// Opens inflated (but not occupied/unknown) cells within `radius` cells of `cell`.
  void open_around(CellIndex cell, int radius);
  /// Closes a cell (used to fold costmap obstacles into a replan).
  void close(CellIndex cell);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> passable_;
  std::vector<std::uint8_t> hard_;
};

enum class PlanStatus { Found, NoPath };

struct GlobalPlan {
  PlanStatus status = PlanStatus::NoPath;
  std::vector<CellIndex> cells;
  OctileCost cost;
};

/// 8-connected A* with the octile heuristic. Diagonal moves may not cut a blocked corner.
/// Throws std::invalid_argument if start or goal is out of bounds or not passable.
GlobalPlan plan_cells(const Traversability& trav, CellIndex start, CellIndex goal);

struct PlannerConfig {
  double inflation_radius = 0.3;
};

struct WorldPlan {
  PlanStatus status = PlanStatus::NoPath;
  std::vector<Pose2D> waypoints;  // cell centres; the last one carries the goal heading
  OctileCost cost;                // in cells
};

WorldPlan plan_global(const OccupancyGrid& map, const Pose2D& start, const Pose2D& goal,
                      const PlannerConfig& cfg = {});
WorldPlan plan_global(const OccupancyGrid& map, const Traversability& trav, const Pose2D& start,
                      const Pose2D& goal);

// ---------------------------------------------------------------------------
// Local planner

struct LocalPlannerConfig {
  VelocityLimits limits;
  double lookahead = 0.25;
  double align_threshold = deg2rad(15.0);
  double goal_tolerance = 0.05;
  double heading_tolerance = deg2rad(2.0);
  double heading_gain = 1.5;
  double rotation_gain = 1.5;
  double min_rotation_speed = 0.15;
  double approach_gain = 1.0;
  double collision_radius = 0.24;
};

enum class LocalStatus { Drive, Rotate, AlignGoal, AtGoal, Blocked };

std::string_view to_string(LocalStatus status);

struct LocalCommand {
  VelocityCommand cmd;
  LocalStatus status = LocalStatus::Drive;
  Pose2D carrot;
};

/// Rotate-then-drive follower. The emitted command never has a lateral component (vy == 0).
/// Throws std::invalid_argument on an empty path.
LocalCommand plan_local(std::span<const Pose2D> path, const Pose2D& pose, const Costmap& cm,
                        const LocalPlannerConfig& cfg = {});

// ---------------------------------------------------------------------------
// Markers and the navigation loop

struct MarkerSpec {
  std::string id;
  Pose2D goal;
  std::string label;
};

/// One marker per line: "id x y theta label..." (theta in radians); '#' comments allowed.
std::vector<MarkerSpec> read_markers(std::istream& is);
std::vector<MarkerSpec> read_markers(const std::filesystem::path& path);
void write_markers(std::ostream& os, std::span<const MarkerSpec> markers);

/// What the navigation loop needs from a robot (simulated or otherwise).
class RobotInterface {
 public:
  virtual ~RobotInterface() = default;
  virtual double time() const = 0;
  /// Pose the controller acts on (ground truth or a localisation estimate).
  virtual Pose2D pose() const = 0;
  virtual LaserScan merged_scan() = 0;
  virtual void apply(const VelocityCommand& cmd, double dt) = 0;
};

struct NavigatorConfig {
  PlannerConfig planner;
  LocalPlannerConfig local;
  CostmapConfig costmap;
  double facing_half_angle = deg2rad(29.0);
  double dt = 0.1;
  double timeout = 600.0;
  int blocked_ticks_before_replan = 5;
  int max_replans = 20;
  double position_tolerance = 0.1;
  double heading_tolerance = deg2rad(5.0);
};

enum class NavOutcome { Reached, Blocked, NoPath };

std::string_view to_string(NavOutcome outcome);

struct NavResult {
  NavOutcome outcome = NavOutcome::NoPath;
  Pose2D final_pose;
  double elapsed = 0.0;
  int replans = 0;
};

struct NavLogEntry {
  double t = 0.0;
  Pose2D pose;
  std::string event;
};

class Navigator {
 public:
  Navigator(RobotInterface& robot, OccupancyGrid map, std::vector<MarkerSpec> markers,
            NavigatorConfig cfg = {});

  /// Throws std::invalid_argument for an unknown marker id.
  NavResult navigate_to_marker(std::string_view id);
  NavResult navigate_to(const Pose2D& goal);

  const MarkerSpec& marker(std::string_view id) const;
  const std::vector<MarkerSpec>& markers() const { return markers_; }
  const Costmap& costmap() const { return costmap_; }
  const std::vector<NavLogEntry>& log() const { return log_; }
  /// "t,x,y,theta,event" per line.
  void write_log_csv(std::ostream& os) const;

 private:
  bool goal_reached(const Pose2D& pose, const Pose2D& goal) const;
  WorldPlan replan(const Pose2D& start, const Pose2D& goal, bool with_costmap);
  void record(const Pose2D& pose, std::string event);

  RobotInterface& robot_;
  OccupancyGrid map_;
  Traversability static_trav_;
  std::vector<MarkerSpec> markers_;
  NavigatorConfig cfg_;
  Costmap costmap_;
  std::vector<NavLogEntry> log_;
};

}  // namespace omninav::planning
