#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omninav/core.hpp"
#include "omninav/planning.hpp"
#include "omninav/sim.hpp"

// Reference worlds used by the tests, the benchmarks and the `fixtures` subcommand.
namespace omninav::scenes {

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

/// Grid covering [0, width) x [0, height) with the given rectangles OCCUPIED.
OccupancyGrid grid_from_rects(double width, double height, double resolution,
                              const std::vector<Rect>& occupied);

/// Marks cells whose centre lies inside an obstacle seen in [z_min, z_max] as OCCUPIED.
/// This is what a height-banded map of the obstacles would contain.
void stamp_obstacles(OccupancyGrid& grid, const std::vector<sim::Obstacle>& obstacles,
                     double z_min, double z_max);

struct Scene {
  std::string name;
  sim::World world;
  OccupancyGrid nav_map;  // what the robot believes (static map + mapped furniture)
  std::vector<planning::MarkerSpec> markers;
  std::string script;  // scenario text
  sim::SimConfig sim_config;
};

/// A couch raised off the floor straight ahead plus a backpack and a box on the floor.
Scene couch_scene();

/// Four-marker lab: entrance, two demo stations and a meeting room behind a door.
Scene tour_scene();

/// Long corridor whose only longitudinal landmarks are wall cabinets above base-laser
/// height; wheel odometry over-reads by a few percent. Script drives 10 m.
Scene corridor_scene();

/// Open room with one removable box ahead of the robot.
Scene clearing_scene();

/// Multi-room floor plan for point-cloud extraction.
struct FloorPlan {
  double width = 20.0;
  double height = 15.0;
  double resolution = 0.05;
  std::vector<Rect> walls;
  std::vector<Rect> furniture;
  std::vector<Rect> exterior;  // regions outside the building
};

FloorPlan lab_floor_plan();

/// Samples a cloud of `total_points` from the floor plan: every wall and furniture cell
/// carries at least one point inside the default height band, the rest are spread over
/// floor, ceiling and isolated in-band speckle. One anchor point pins the grid origin.
PointCloud floor_plan_cloud(const FloorPlan& plan, std::size_t total_points, std::uint64_t seed);

}  // namespace omninav::scenes
