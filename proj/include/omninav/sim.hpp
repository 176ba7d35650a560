#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "omninav/core.hpp"
#include "omninav/motion.hpp"
#include "omninav/planning.hpp"
#include "omninav/sensing.hpp"

namespace omninav::sim {

struct Disk {
  Point2 center;
  double radius = 0.0;
};

/// Simple polygon, vertices in order (either winding).
struct Polygon {
  std::vector<Point2> vertices;
};

Polygon box(double min_x, double min_y, double max_x, double max_y);

/// A height-attributed object. Sensors see it only when z_min <= mount height <= z_max;
/// the robot body collides with it whenever it is active.
struct Obstacle {
  std::string id;
  std::variant<Disk, Polygon> shape;
  double z_min = 0.0;
  double z_max = 2.0;
  bool active = true;
};

/// Distance from p to the obstacle boundary, 0 inside.
double distance_to(const Obstacle& o, Point2 p);

struct World {
  OccupancyGrid map;  // static structure; OCCUPIED cells span every height
  std::vector<Obstacle> obstacles;
  Pose2D robot;
  double time = 0.0;

  /// Throws std::invalid_argument for an unknown id.
  Obstacle& obstacle(std::string_view id);
};

/// World file: one object per line, '#' comments.
///   disk <id> <cx> <cy> <r> <z_min> <z_max> [off]
///   box <id> <min_x> <min_y> <max_x> <max_y> <z_min> <z_max> [off]
///   poly <id> <z_min> <z_max> <x1> <y1> <x2> <y2> <x3> <y3> ... [off]
std::vector<Obstacle> read_obstacles(std::istream& is);
std::vector<Obstacle> read_obstacles(const std::filesystem::path& path);
void write_obstacles(std::ostream& os, const std::vector<Obstacle>& obstacles);

struct NoiseModel {
  double odom_translation_std = 0.0;  // per metre travelled
  double odom_rotation_std = 0.0;     // per radian turned
  double odom_scale_error = 0.0;      // systematic fractional translation error (slip)
  double range_std = 0.0;             // metres
  std::uint64_t rng_seed = 1;

  void validate() const;
};

struct SimConfig {
  sensing::BaseLaserConfig base;
  sensing::DepthScanConfig depth;
  motion::WheelGeometry wheels;
  NoiseModel noise;
  double robot_radius = 0.24;
};

struct RayHit {
  double range = HUGE_VAL;  // HUGE_VAL when nothing is hit within max_range
  int object = -1;          // index into World::obstacles, -1 for the static map
};

/// Nearest hit of a ray from `origin` along `angle` within max_range. Static OCCUPIED cells
/// are traversed with DDA; active obstacles whose height band contains `height` are
/// intersected analytically.
RayHit cast_ray(const World& world, Point2 origin, double angle, double max_range, double height);

/// True when a disk of `radius` at p overlaps an OCCUPIED cell or an active obstacle.
bool collides(const World& world, Point2 p, double radius);

struct StepResult {
  Pose2D true_pose;
  Pose2D odom_delta;  // body-frame increment as reported by wheel odometry
  bool collided = false;
};

class Simulator {
 public:
  Simulator(World world, SimConfig cfg = {});

  /// Advances the robot by the executed twist of `cmd`; collisions truncate the motion at
  /// contact. Throws std::invalid_argument unless dt in (0, 0.1].
  StepResult step(const VelocityCommand& cmd, double dt);

  /// The three base lasers, each in its own sensor frame (frame Base).
  std::array<LaserScan, 3> sense_base_raw();
  /// The base lasers assembled in the body frame.
  LaserScan sense_base();
  /// Depth camera: renders one image row and converts it to a scan.
  sensing::DepthImage render_depth();
  LaserScan sense_depth();
  LaserScan sense_merged();

  const World& world() const { return world_; }
  World& world() { return world_; }
  const SimConfig& config() const { return cfg_; }
  const Pose2D& pose() const { return world_.robot; }
  /// Dead-reckoned pose from the reported odometry.
  const Pose2D& odom_pose() const { return odom_pose_; }
  double time() const { return world_.time; }
  void set_obstacle(std::string_view id, bool active);

 private:
  double noisy_range(double r, double range_min, double range_max);

  World world_;
  SimConfig cfg_;
  std::mt19937_64 rng_;
  Pose2D odom_pose_;
};

/// Navigation adapter: the controller sees the simulator's ground-truth pose unless a pose
/// source is supplied.
class SimRobot : public planning::RobotInterface {
 public:
  using PoseSource = std::function<Pose2D()>;
  using StepHook = std::function<void(const StepResult&)>;

  explicit SimRobot(Simulator& sim, PoseSource pose_source = {}, StepHook hook = {});

  double time() const override { return sim_.time(); }
  Pose2D pose() const override;
  LaserScan merged_scan() override { return sim_.sense_merged(); }
  void apply(const VelocityCommand& cmd, double dt) override;

 private:
  Simulator& sim_;
  PoseSource pose_source_;
  StepHook hook_;
};

// ---------------------------------------------------------------------------
// Scenarios

enum class EventKind { Cmd, Obstacle, Button, Goto };

struct ScenarioEvent {
  double t = 0.0;
  EventKind kind = EventKind::Cmd;
  VelocityCommand cmd;      // Cmd
  std::string name;         // obstacle id, button name or marker id
  bool active = false;      // Obstacle
  std::size_t line = 0;
};

/// Lines "t <command>" with commands "cmd vx vy wz", "obstacle <id> on|off",
/// "button <name>", "goto <marker>". Times must not decrease. Errors carry the line number.
std::vector<ScenarioEvent> parse_scenario(std::istream& is);
std::vector<ScenarioEvent> parse_scenario(const std::filesystem::path& path);

enum class ScanLogging { None, Merged, All };

struct ScenarioOptions {
  double dt = 0.1;
  ScanLogging scans = ScanLogging::Merged;
  /// Needed for "goto" events.
  std::optional<OccupancyGrid> nav_map;
  std::vector<planning::MarkerSpec> markers;
  planning::NavigatorConfig nav;
};

struct LogRecord {
  double t = 0.0;
  std::string type;
  std::string payload;
};

struct ScenarioResult {
  std::vector<LogRecord> log;
  std::vector<planning::NavResult> navigations;
  std::vector<std::string> buttons;
};

/// Replays the script against the simulator. The log starts with the initial state and
/// records, per step, "state" rows (true pose and reported odometry increment) and the
/// requested scans; events are logged as they fire. Runs until the last event time.
ScenarioResult run_scenario(const std::vector<ScenarioEvent>& script, Simulator& sim,
                            const ScenarioOptions& opts = {});

/// Log CSV: "t,type,payload" with payload fields separated by spaces.
void write_log_csv(std::ostream& os, const std::vector<LogRecord>& log);
std::vector<LogRecord> read_log_csv(std::istream& is);

/// Payload encodings shared by the writer and the replay reader.
std::string encode_state(const Pose2D& truth, const Pose2D& odom_delta);
void decode_state(std::string_view payload, Pose2D& truth, Pose2D& odom_delta);
std::string encode_scan(const LaserScan& scan);
LaserScan decode_scan(std::string_view payload, ScanFrame frame);

}  // namespace omninav::sim
