#include "omninav/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace omninav::scenes {

namespace {

std::vector<Rect> outer_walls(double w, double h, double t) {
  return {{0, 0, w, t}, {0, h - t, w, h}, {0, 0, t, h}, {w - t, 0, w, h}};
}

bool contains(const Rect& r, double x, double y) {
  return x >= r.min_x && x < r.max_x && y >= r.min_y && y < r.max_y;
}

}  // namespace

OccupancyGrid grid_from_rects(double width, double height, double resolution,
                              const std::vector<Rect>& occupied) {
  const int w = static_cast<int>(std::lround(width / resolution));
  const int h = static_cast<int>(std::lround(height / resolution));
  OccupancyGrid grid(w, h, resolution, Pose2D{});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double x = (c + 0.5) * resolution;
      const double y = (r + 0.5) * resolution;
      for (const Rect& rect : occupied) {
        if (contains(rect, x, y)) {
          grid.at(c, r) = CellState::Occupied;
          break;
        }
      }
    }
  }
  return grid;
}

void stamp_obstacles(OccupancyGrid& grid, const std::vector<sim::Obstacle>& obstacles,
                     double z_min, double z_max) {
  for (const sim::Obstacle& o : obstacles) {
    if (o.z_max < z_min || o.z_min > z_max) {
      continue;
    }
    for (int r = 0; r < grid.height; ++r) {
      for (int c = 0; c < grid.width; ++c) {
        if (sim::distance_to(o, cell_center(grid, {c, r})) == 0.0) {
          grid.at(c, r) = CellState::Occupied;
        }
      }
    }
  }
}

Scene couch_scene() {
  Scene s;
  s.name = "couch";
  s.world.map = grid_from_rects(8.0, 8.0, 0.05, outer_walls(8.0, 8.0, 0.1));
  s.world.obstacles = {
      {"couch", sim::box(3.5, 3.2, 4.3, 4.8), 0.3, 1.2, true},
      {"backpack", sim::Disk{{3.0, 4.5}, 0.15}, 0.0, 0.4, true},
      {"box", sim::box(3.1, 3.35, 3.4, 3.65), 0.0, 0.35, true},
  };
  s.world.robot = Pose2D(2.0, 4.0, 0.0);
  s.nav_map = s.world.map;
  stamp_obstacles(s.nav_map, s.world.obstacles, 0.05, 1.2);
  s.script = "0 cmd 0 0 0\n0.1 cmd 0 0 0\n";
  return s;
}

Scene tour_scene() {
  Scene s;
  s.name = "tour";
  std::vector<Rect> rects = outer_walls(14.0, 8.0, 0.1);
  rects.push_back({10.5, 0.0, 10.6, 3.4});     // meeting room wall, door at y 3.4..4.6
  rects.push_back({10.5, 4.6, 10.6, 8.0});
  rects.push_back({4.0, 6.8, 6.0, 7.9});       // demo bench
  rects.push_back({8.0, 0.1, 10.0, 1.2});      // picking shelf
  rects.push_back({6.5, 3.2, 7.5, 4.2});       // table in the middle of the lab
  rects.push_back({12.8, 6.0, 13.6, 7.2});     // meeting room table
  s.world.map = grid_from_rects(14.0, 8.0, 0.05, rects);
  s.world.robot = Pose2D(1.2, 2.5, 0.0);
  s.nav_map = s.world.map;
  s.markers = {
      {"m1", Pose2D(1.2, 4.0, 0.0), "entrance"},
      {"m2", Pose2D(5.0, 5.9, kPi / 2), "harvey station"},
      {"m3", Pose2D(9.0, 2.1, -kPi / 2), "cartman station"},
      {"m4", Pose2D(12.5, 4.0, kPi), "meeting room"},
  };
  s.script =
      "0 goto m1\n"
      "0 button start\n"
      "0 goto m2\n"
      "0 goto m3\n"
      "0 goto m4\n";
  return s;
}

Scene corridor_scene() {
  Scene s;
  s.name = "corridor";
  s.world.map = grid_from_rects(16.2, 2.6, 0.05, outer_walls(16.2, 2.6, 0.1));
  const double lo = 0.1;
  const double hi = 2.5;
  const double depth = 0.4;
  const std::vector<std::pair<double, double>> upper{{2.5, 3.5}, {6.0, 7.2}, {9.8, 10.6},
                                                     {13.0, 14.0}};
  const std::vector<std::pair<double, double>> lower{{4.2, 5.0}, {7.9, 9.1}, {11.5, 12.3},
                                                     {14.8, 15.6}};
  int n = 0;
  for (const auto& [x0, x1] : upper) {
    s.world.obstacles.push_back(
        {"cabinet" + std::to_string(n++), sim::box(x0, hi - depth, x1, hi), 0.8, 1.8, true});
  }
  for (const auto& [x0, x1] : lower) {
    s.world.obstacles.push_back(
        {"cabinet" + std::to_string(n++), sim::box(x0, lo, x1, lo + depth), 0.8, 1.8, true});
  }
  s.world.robot = Pose2D(1.0, 1.3, 0.0);
  s.nav_map = s.world.map;
  stamp_obstacles(s.nav_map, s.world.obstacles, 0.05, 1.2);
  s.sim_config.noise.odom_translation_std = 0.02;
  s.sim_config.noise.odom_rotation_std = 0.02;
  s.sim_config.noise.odom_scale_error = 0.05;
  s.sim_config.noise.range_std = 0.01;
  s.sim_config.noise.rng_seed = 7;
  s.script = "0 cmd 0.25 0 0\n40 cmd 0 0 0\n";
  return s;
}

Scene clearing_scene() {
  Scene s;
  s.name = "clearing";
  s.world.map = grid_from_rects(8.0, 8.0, 0.05, outer_walls(8.0, 8.0, 0.1));
  s.world.obstacles = {{"crate", sim::box(3.5, 3.75, 3.9, 4.25), 0.0, 1.5, true}};
  s.world.robot = Pose2D(2.0, 4.0, 0.0);
  s.nav_map = s.world.map;
  s.script =
      "0 cmd 0 0 0.5\n"
      "6.2831853 cmd 0 0 0\n";
  return s;
}

FloorPlan lab_floor_plan() {
  FloorPlan p;
  const double t = 0.15;
  p.walls = {
      {0.0, 0.0, 20.0, t},             // south
      {0.0, 0.0, t, 15.0},             // west
      {0.0, 15.0 - t, 13.0, 15.0},     // north, west part
      {20.0 - t, 0.0, 20.0, 10.0},     // east, lower part
      {13.0, 10.0 - t, 20.0, 10.0},    // step
      {13.0 - t, 10.0 - t, 13.0, 15.0},
      // interior
      {7.0, t, 7.0 + t, 4.0},
      {7.0, 5.2, 7.0 + t, 10.0},
      {7.0, 11.2, 7.0 + t, 15.0 - t},
      {t, 7.0, 3.0, 7.0 + t},
      {4.2, 7.0, 7.0, 7.0 + t},
      {7.0 + t, 5.0, 12.0, 5.0 + t},
      {13.2, 5.0, 20.0 - t, 5.0 + t},
  };
  p.furniture = {
      {2.0, 2.0, 3.5, 2.8},
      {9.0, 1.5, 10.5, 3.0},
      {15.0, 7.0, 16.5, 8.0},
      {3.0, 10.0, 4.0, 11.5},
      {10.0, 11.0, 11.0, 13.5},
  };
  p.exterior = {{13.0, 10.0, 20.0, 15.0}};
  return p;
}

PointCloud floor_plan_cloud(const FloorPlan& plan, std::size_t total_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Keeps structure points clear of cell edges so rounding cannot move them across.
  std::uniform_real_distribution<double> inset(0.05, 0.95);
  const double res = plan.resolution;
  PointCloud cloud;
  cloud.points.reserve(total_points);
  // Pins the raster origin at the building corner.
  cloud.points.push_back({0.0, 0.0, 0.5});

  auto is_exterior = [&](double x, double y) {
    return std::any_of(plan.exterior.begin(), plan.exterior.end(),
                       [&](const Rect& r) { return contains(r, x, y); });
  };
  auto near_structure = [&](double x, double y, double margin) {
    auto hit = [&](const Rect& r) {
      return x >= r.min_x - margin && x < r.max_x + margin && y >= r.min_y - margin &&
             y < r.max_y + margin;
    };
    return std::any_of(plan.walls.begin(), plan.walls.end(), hit) ||
           std::any_of(plan.furniture.begin(), plan.furniture.end(), hit);
  };

  // Structure: one in-band point per cell, then extra points at any height.
  std::vector<Point2> structure_cells;
  auto add_rects = [&](const std::vector<Rect>& rects) {
    for (const Rect& r : rects) {
      const long c0 = std::lround(r.min_x / res);
      const long c1 = std::lround(r.max_x / res);
      const long r0 = std::lround(r.min_y / res);
      const long r1 = std::lround(r.max_y / res);
      for (long row = r0; row < r1; ++row) {
        for (long col = c0; col < c1; ++col) {
          cloud.points.push_back({(col + inset(rng)) * res, (row + inset(rng)) * res,
                                  0.1 + 1.0 * unit(rng)});
          structure_cells.push_back({static_cast<double>(col), static_cast<double>(row)});
        }
      }
    }
  };
  add_rects(plan.walls);
  add_rects(plan.furniture);
  for (int k = 0; k < 2 && cloud.points.size() < total_points; ++k) {
    for (const Point2& cell : structure_cells) {
      if (cloud.points.size() >= total_points) {
        break;
      }
      cloud.points.push_back(
          {(cell.x + inset(rng)) * res, (cell.y + inset(rng)) * res, 2.5 * unit(rng)});
    }
  }

  // Isolated in-band speckle well away from structure.
  const std::size_t speckles = 40;
  for (std::size_t n = 0; n < speckles && cloud.points.size() < total_points;) {
    const double x = plan.width * unit(rng);
    const double y = plan.height * unit(rng);
    if (is_exterior(x, y) || near_structure(x, y, 0.2)) {
      continue;
    }
    cloud.points.push_back({x, y, 0.3 + 0.6 * unit(rng)});
    ++n;
  }

  // Floor below the band and ceiling/lamps above it.
  while (cloud.points.size() < total_points) {
    const double x = plan.width * unit(rng);
    const double y = plan.height * unit(rng);
    if (is_exterior(x, y)) {
      continue;
    }
    const double pick = unit(rng);
    const double z = pick < 0.6 ? -0.03 + 0.06 * unit(rng) : 1.3 + 1.3 * unit(rng);
    cloud.points.push_back({x, y, z});
  }
  return cloud;
}

}  // namespace omninav::scenes
