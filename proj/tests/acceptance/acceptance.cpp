// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "omninav/kernels.hpp"
#include "omninav/localization.hpp"
#include "omninav/mapgen.hpp"
#include "omninav/motion.hpp"
#include "omninav/planning.hpp"
#include "omninav/replay.hpp"
#include "omninav/scenes.hpp"
#include "omninav/sensing.hpp"
#include "omninav/sim.hpp"
#include "omninav/tour_runner.hpp"
#include "oracles.hpp"

using namespace omninav;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string digest;  // everything a seeded run produces, for the determinism check

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) {
        detail = what;
      }
      pass = false;
    }
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string fmt_pose(const Pose2D& p) { return fmt(p.x) + ' ' + fmt(p.y) + ' ' + fmt(p.theta); }

// ---------------------------------------------------------------------------

Outcome controller_correctness() {
  Outcome o;
  const double radius = 1.0;
  const double speed = kPi / 2;
  const auto samples = motion::circle_drive_headings(radius, speed, 2 * kPi * radius / speed, 0.01);
  // Driving forward and turning left from the origin circles (0, radius).
  double worst_tangent = 0.0;
  double worst_radius = 0.0;
  for (const auto& s : samples) {
    const double dx = s.pose.x;
    const double dy = s.pose.y - radius;
    const double tangent = std::atan2(dx, -dy);
    worst_tangent = std::max(worst_tangent, std::abs(angle_diff(s.pose.theta, tangent)));
    worst_radius = std::max(worst_radius, std::abs(std::hypot(dx, dy) - radius));
    o.digest += fmt_pose(s.pose) + '\n';
  }
  const double closure = std::hypot(samples.back().pose.x - samples.front().pose.x,
                                    samples.back().pose.y - samples.front().pose.y);
  o.require(samples.size() > 100, "too few samples");
  o.require(worst_tangent < 1e-6, "heading off tangent by " + fmt_short(worst_tangent));
  o.require(worst_radius < 1e-6, "left the circle by " + fmt_short(worst_radius));
  o.require(closure < 1e-3, "closure error " + fmt_short(closure));
  if (o.pass) {
    o.detail = "tangency " + fmt_short(worst_tangent) + " rad, closure " + fmt_short(closure) +
               " m over " + std::to_string(samples.size()) + " samples";
  }
  return o;
}

Outcome kinematics_round_trip() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const VelocityCommand c{u(rng), u(rng), u(rng)};
    const VelocityCommand back = motion::forward_kinematics(motion::inverse_kinematics(c));
    worst = std::max({worst, std::abs(back.vx - c.vx), std::abs(back.vy - c.vy),
                      std::abs(back.wz - c.wz)});
  }
  o.require(worst <= 1e-9, "FK(IK(c)) error " + fmt_short(worst));
  bool equal = true;
  for (int i = 0; i < 10000; ++i) {
    const double wz = u(rng);
    const motion::WheelSpeeds w = motion::inverse_kinematics({0.0, 0.0, wz});
    equal = equal && w.front_left == wz && w.front_right == wz && w.back == wz;
  }
  o.require(equal, "pure rotation gives unequal wheel rates");
  if (o.pass) {
    o.detail = "max round-trip error " + fmt_short(worst) + ", pure rotation exact";
  }
  return o;
}

// Does any valid return of `scan` (body frame) end on the obstacle's surface?
bool sees(const LaserScan& scan, const Pose2D& robot, const sim::Obstacle& ob) {
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (r < 0.0) {
      continue;
    }
    const double a = scan.angle_min + static_cast<double>(i) * scan.angle_increment;
    const Point2 p = robot.transform({r * std::cos(a), r * std::sin(a)});
    if (sim::distance_to(ob, p) <= 0.03) {
      return true;
    }
  }
  return false;
}

Outcome scan_merge() {
  Outcome o;
  const scenes::Scene s = scenes::couch_scene();
  sim::Simulator sim(s.world, s.sim_config);
  const LaserScan base = sim.sense_base();
  const LaserScan depth = sim.sense_depth();
  const LaserScan merged = sensing::merge_scans(base, depth);
  const Pose2D robot = sim.pose();
  const auto& couch = sim.world().obstacles.at(0);
  const auto& backpack = sim.world().obstacles.at(1);
  const auto& box = sim.world().obstacles.at(2);

  o.require(sees(depth, robot, couch), "depth misses the couch");
  o.require(!sees(depth, robot, backpack) && !sees(depth, robot, box),
            "depth sees a low object");
  o.require(!sees(base, robot, couch), "base sees the couch");
  o.require(sees(base, robot, backpack) && sees(base, robot, box), "base misses a low object");
  o.require(sees(merged, robot, couch) && sees(merged, robot, backpack) &&
                sees(merged, robot, box),
            "merged misses an object");

  const double inc = depth.angle_increment;
  const double lo = std::min(base.angle_min, depth.angle_min);
  const double hi = std::max(scan_point_angle(base, base.ranges.size() - 1),
                             scan_point_angle(depth, depth.ranges.size() - 1));
  // Depth-resolution bins over the union hull: on the depth lattice, covering [lo, hi],
  // and no wider than that.
  const double first = merged.angle_min;
  const double last = scan_point_angle(merged, merged.ranges.size() - 1);
  const double offset = (depth.angle_min - first) / inc;
  const double eps = 1e-9;
  o.require(merged.angle_increment == inc, "merged increment differs from depth");
  o.require(std::abs(offset - std::round(offset)) < 1e-6, "merged bins off the depth lattice");
  o.require(first <= lo + eps && first > lo - inc + eps, "merged start does not fit the hull");
  o.require(last >= hi - eps && last < hi + inc - eps, "merged end does not fit the hull");
  const auto expect = oracle::brute_merge(base, depth, merged);
  std::size_t mismatches = 0;
  for (std::size_t k = 0; k < merged.ranges.size(); ++k) {
    mismatches += merged.ranges[k] == expect[k] ? 0 : 1;
    o.digest += fmt(merged.ranges[k]) + '\n';
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " bins break the min rule");
  if (o.pass) {
    o.detail = std::to_string(merged.ranges.size()) + " bins, depth sees couch only, base sees " +
               "backpack and box only, merged sees all three";
  }
  return o;
}

Outcome map_extraction() {
  Outcome o;
  const scenes::FloorPlan plan = scenes::lab_floor_plan();
  const PointCloud cloud = scenes::floor_plan_cloud(plan, 50000, 11);
  const OccupancyGrid map = mapgen::extract_map(cloud, mapgen::MapGenConfig{});
  const OccupancyGrid truth = oracle::floor_plan_truth(plan, map.width, map.height);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    agree += map.cells[i] == truth.cells[i] ? 1 : 0;
    o.digest += static_cast<char>('0' + static_cast<int>(map.cells[i]));
  }
  const double fraction = static_cast<double>(agree) / static_cast<double>(map.size());
  o.require(cloud.points.size() == 50000, "cloud size");
  o.require(fraction >= 0.99, "agreement " + fmt_short(100 * fraction) + "%");

  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> side(1, 50);
  int denoise_bad = 0;
  int fill_bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    OccupancyGrid g(side(rng), side(rng), 0.05, Pose2D{}, CellState::Free);
    std::bernoulli_distribution occ(0.1 + 0.4 * (trial % 5) / 4.0);
    for (auto& c : g.cells) {
      c = occ(rng) ? CellState::Occupied : CellState::Free;
    }
    const int k = 1 + trial % 6;
    denoise_bad += mapgen::denoise(g, k) == oracle::brute_denoise(g, k) ? 0 : 1;
    const int margin = 1 + trial % 2;
    fill_bad += mapgen::fill_unknown(g, margin) == oracle::brute_fill_unknown(g, margin) ? 0 : 1;
  }
  o.require(denoise_bad == 0, std::to_string(denoise_bad) + " denoise mismatches");
  o.require(fill_bad == 0, std::to_string(fill_bad) + " fill_unknown mismatches");
  if (o.pass) {
    o.detail = std::to_string(map.width) + "x" + std::to_string(map.height) + " grid, " +
               fmt_short(100 * fraction) + "% of cells match, oracles agree on 50 grids";
  }
  return o;
}

Outcome localization_accuracy() {
  Outcome o;
  const scenes::Scene s = scenes::corridor_scene();
  sim::Simulator sim(s.world, s.sim_config);
  std::istringstream script(s.script);
  sim::ScenarioOptions opts;
  opts.scans = sim::ScanLogging::All;
  const sim::ScenarioResult run = sim::run_scenario(sim::parse_scenario(script), sim, opts);
  const double travelled = sim.pose().x - s.world.robot.x;

  sim::ReplayOptions replay;
  replay.mcl.particle_count = 500;
  const sim::ReplayResult merged = sim::replay_localization(run.log, s.nav_map, replay);
  replay.source = sim::ScanSource::BaseOnly;
  const sim::ReplayResult base = sim::replay_localization(run.log, s.nav_map, replay);

  const auto& m = merged.final_sample();
  const auto& b = base.final_sample();
  for (const auto& t : merged.timeline) {
    o.digest += fmt_pose(t.estimate) + '\n';
  }
  for (const auto& t : base.timeline) {
    o.digest += fmt_pose(t.estimate) + '\n';
  }
  const bool base_within = b.position_error < 0.15 && b.heading_error < deg2rad(5.0);
  o.require(std::abs(travelled - 10.0) < 0.05, "run covered " + fmt_short(travelled) + " m");
  o.require(m.position_error < 0.15, "merged position error " + fmt_short(m.position_error));
  o.require(m.heading_error < deg2rad(5.0),
            "merged heading error " + fmt_short(rad2deg(m.heading_error)) + " deg");
  o.require(!base_within, "base-only run stays within the bound");
  if (o.pass) {
    o.detail = "merged " + fmt_short(m.position_error) + " m / " +
               fmt_short(rad2deg(m.heading_error)) + " deg, base-only " +
               fmt_short(b.position_error) + " m / " + fmt_short(rad2deg(b.heading_error)) +
               " deg";
  }
  return o;
}

Outcome costmap_clearing() {
  Outcome o;
  const scenes::Scene s = scenes::clearing_scene();
  sim::Simulator sim(s.world, s.sim_config);
  planning::Costmap cm;
  const double half = planning::NavigatorConfig{}.facing_half_angle;
  int ticks = 0;
  auto tick = [&](double wz, double dt) {
    sim.step({0.0, 0.0, wz}, dt);
    planning::costmap_update(cm, sim.sense_merged(), sim.pose(), half);
    ++ticks;
  };
  planning::costmap_update(cm, sim.sense_merged(), sim.pose(), half);

  // Turn to face away: half a turn in 63 equal steps.
  const int turn_steps = 63;
  const double turn_dt = kPi / 0.5 / turn_steps;
  for (int i = 0; i < turn_steps; ++i) {
    tick(0.5, turn_dt);
  }
  o.require(std::abs(angle_diff(sim.pose().theta, s.world.robot.theta + kPi)) < 1e-9,
            "did not end facing away");

  const sim::Obstacle crate = sim.world().obstacle("crate");
  std::vector<CellIndex> crate_cells;
  for (const CellIndex c : cm.obstacles()) {
    if (sim::distance_to(crate, cm.center_of(c)) <= 0.06) {
      crate_cells.push_back(c);
    }
  }
  o.require(crate_cells.size() >= 5, "crate left only " + std::to_string(crate_cells.size()) +
                                         " obstacle cells");
  sim.set_obstacle("crate", false);

  int persisted = 0;
  for (int i = 0; i < 120; ++i) {
    tick(0.0, 0.1);
    bool all = true;
    for (const CellIndex c : crate_cells) {
      all = all && cm.state(c) == planning::CostState::Obstacle;
    }
    if (!all) {
      break;
    }
    ++persisted;
  }
  o.require(persisted >= 100, "cells persisted only " + std::to_string(persisted) + " ticks");

  // Turn back to face the crate's former place.
  std::vector<int> entered(crate_cells.size(), -1);
  std::vector<int> cleared(crate_cells.size(), -1);
  for (int i = 0; i < turn_steps + 5; ++i) {
    tick(i < turn_steps ? 0.5 : 0.0, turn_dt);
    const Pose2D p = sim.pose();
    for (std::size_t k = 0; k < crate_cells.size(); ++k) {
      const Point2 c = cm.center_of(crate_cells[k]);
      const double bearing = angle_diff(std::atan2(c.y - p.y, c.x - p.x), p.theta);
      if (entered[k] < 0 && std::abs(bearing) <= half) {
        entered[k] = i;
      }
      if (cleared[k] < 0 && cm.state(crate_cells[k]) == planning::CostState::Clear) {
        cleared[k] = i;
      }
    }
  }
  int worst_delay = 0;
  for (std::size_t k = 0; k < crate_cells.size(); ++k) {
    o.require(entered[k] >= 0, "a crate cell never entered the facing cone");
    o.require(cleared[k] >= 0, "a crate cell was never cleared");
    o.require(cleared[k] >= entered[k], "a crate cell cleared outside the facing cone");
    worst_delay = std::max(worst_delay, cleared[k] - entered[k]);
    o.digest += std::to_string(entered[k]) + ' ' + std::to_string(cleared[k]) + '\n';
  }
  o.require(worst_delay <= 2, "clearing took " + std::to_string(worst_delay) + " ticks");
  if (o.pass) {
    o.detail = std::to_string(crate_cells.size()) + " cells persisted " +
               std::to_string(persisted) + " ticks facing away, cleared within " +
               std::to_string(worst_delay) + " ticks of facing";
  }
  return o;
}

Outcome lateral_prohibition() {
  Outcome o;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> ua(-kPi, kPi);
  std::set<planning::LocalStatus> seen;
  int nonzero = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    planning::Costmap cm;
    const int n_obs = trial % 8;
    for (int i = 0; i < n_obs; ++i) {
      if (const auto c = cm.cell_of(u(rng) / 2, u(rng) / 2)) {
        cm.mark(*c, 0.0);
      }
    }
    std::vector<Pose2D> path;
    Pose2D p(u(rng), u(rng), ua(rng));
    const int len = 1 + trial % 30;
    for (int i = 0; i < len; ++i) {
      path.push_back(p);
      p = Pose2D(p.x + 0.05 * std::cos(p.theta), p.y + 0.05 * std::sin(p.theta),
                 p.theta + 0.2 * ua(rng) / kPi);
    }
    Pose2D pose(u(rng), u(rng), ua(rng));
    if (trial % 4 == 0) {
      pose = Pose2D(path.back().x, path.back().y, ua(rng));  // at the goal, any heading
    }
    const planning::LocalCommand c = planning::plan_local(path, pose, cm);
    seen.insert(c.status);
    nonzero += c.cmd.vy == 0.0 ? 0 : 1;
  }
  o.require(nonzero == 0, std::to_string(nonzero) + " commands with vy != 0");
  o.require(seen.size() >= 4, "sweep reached only " + std::to_string(seen.size()) + " statuses");
  if (o.pass) {
    o.detail = "10000 states over " + std::to_string(seen.size()) + " planner modes, vy always 0";
  }
  return o;
}

Outcome global_planner() {
  Outcome o;
  std::mt19937_64 rng(19);
  int found = 0;
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    OccupancyGrid g(100, 100, 0.05, Pose2D{}, CellState::Free);
    std::bernoulli_distribution occ(0.15 + 0.2 * (trial % 3) / 2.0);
    for (auto& c : g.cells) {
      c = occ(rng) ? CellState::Occupied : CellState::Free;
    }
    const planning::Traversability t(g, 0.0);
    std::vector<std::vector<bool>> passable(100, std::vector<bool>(100));
    std::vector<CellIndex> free;
    for (int r = 0; r < 100; ++r) {
      for (int c = 0; c < 100; ++c) {
        passable[r][c] = t.passable(c, r);
        if (passable[r][c]) {
          free.push_back({c, r});
        }
      }
    }
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const CellIndex a = free[pick(rng)];
    const CellIndex b = free[pick(rng)];
    const auto expect = oracle::dijkstra(passable, a, b);
    const planning::GlobalPlan got = planning::plan_cells(t, a, b);
    const bool same = expect ? (got.status == planning::PlanStatus::Found && got.cost == *expect)
                             : got.status == planning::PlanStatus::NoPath;
    mismatches += same ? 0 : 1;
    found += expect ? 1 : 0;
    o.digest += std::to_string(got.cost.straight) + ' ' + std::to_string(got.cost.diagonal) + '\n';
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " grids disagree with Dijkstra");
  o.require(found >= 50, "only " + std::to_string(found) + " grids had a path");
  if (o.pass) {
    o.detail = "100 grids, " + std::to_string(found) + " with a path, all costs exact";
  }
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_tour() {
  Outcome o;
  const scenes::Scene s = scenes::tour_scene();
  tour::SimNavigation nav(s.world, s.nav_map, s.markers, s.sim_config);
  tour::EventQueue queue;
  tour::EventServer events(queue);
  tour::MockFleet fleet = tour::start_mock_fleet(tour::Bindings{}, events.url());
  tour::TourConfig cfg;
  cfg.devices = fleet.endpoints();
  tour::TourRunner runner(cfg, nav, queue);
  const tour::TourReport report = runner.run();
  fleet.stop();
  events.stop();

  std::ostringstream transitions;
  tour::write_transition_log(transitions, report.transitions);
  const std::string golden = read_file(std::string(OMNINAV_GOLDEN_DIR) + "/tour_transitions.txt");
  o.require(report.outcome == tour::TourOutcome::Done,
            "outcome " + std::string(tour::to_string(report.outcome)));
  o.require(!golden.empty() && transitions.str() == golden, "transition log differs from golden");

  const std::vector<std::string> expect_commands{
      "harvey health",
      "cartman health",
      "tv_harvey health",
      "tv_cartman health",
      "tv_harvey play harvey_field_video",
      "harvey start_demo harvey_demo",
      "tv_cartman play cartman_picking_video",
      "cartman pick item_3",
      "cartman pick item_7"};
  const auto commands = fleet.recorder->lines();
  o.require(commands == expect_commands, "mock command log differs");

  std::set<std::string> reached;
  double worst_pos = 0.0;
  double worst_heading = 0.0;
  for (const auto& [marker, result] : report.navigations) {
    const auto it = std::find_if(s.markers.begin(), s.markers.end(),
                                 [&](const auto& m) { return m.id == marker; });
    if (it == s.markers.end() || result.outcome != planning::NavOutcome::Reached) {
      continue;
    }
    const double pos = distance(result.final_pose, it->goal);
    const double heading = std::abs(angle_diff(result.final_pose.theta, it->goal.theta));
    worst_pos = std::max(worst_pos, pos);
    worst_heading = std::max(worst_heading, heading);
    if (pos <= 0.1 && heading <= deg2rad(5.0)) {
      reached.insert(marker);
    }
    o.digest += marker + ' ' + fmt_pose(result.final_pose) + '\n';
  }
  o.require(reached.size() == s.markers.size(),
            std::to_string(reached.size()) + " of " + std::to_string(s.markers.size()) +
                " markers reached within tolerance");
  o.digest += transitions.str();
  for (const auto& c : commands) {
    o.digest += c + '\n';
  }
  if (o.pass) {
    o.detail = "4 markers reached (worst " + fmt_short(worst_pos) + " m, " +
               fmt_short(rad2deg(worst_heading)) + " deg), " +
               std::to_string(report.transitions.size()) + " transitions match golden, " +
               std::to_string(commands.size()) + " device commands";
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // <= 0: no bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "controller correctness", 1.0, controller_correctness},
      {2, "kinematics round trip", 0.0, kinematics_round_trip},
      {3, "scan merge", 1.0, scan_merge},
      {4, "map extraction", 10.0, map_extraction},
      {5, "localization", 60.0, localization_accuracy},
      {6, "costmap clearing", 0.0, costmap_clearing},
      {7, "no lateral motion", 0.0, lateral_prohibition},
      {8, "global planner", 0.0, global_planner},
      {9, "end-to-end tour", 120.0, end_to_end_tour},
  };

  bool all = true;
  std::vector<std::string> digests;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail = "took " + fmt_short(secs) + " s, limit " + fmt_short(c.time_limit_s) + " s; " +
                 o.detail;
    }
    all = all && o.pass;
    digests.push_back(o.digest);
    std::printf("criterion %2d %-24s %s  %s (%.2f s)\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }

  // Criterion 10: rerun every seeded scenario and compare its full output.
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> differing;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome again;
    try {
      again = criteria[i].run();
    } catch (const std::exception&) {
      again.digest = "<exception>";
    }
    if (again.digest != digests[i]) {
      differing.push_back(criteria[i].id);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string detail = "all " + std::to_string(criteria.size()) + " runs byte-identical";
  if (!differing.empty()) {
    detail = "runs differ for criteria";
    for (int id : differing) {
      detail += ' ' + std::to_string(id);
    }
  }
  all = all && differing.empty();
  std::printf("criterion %2d %-24s %s  %s (%.2f s)\n", 10, "determinism",
              differing.empty() ? "PASS" : "FAIL", detail.c_str(), secs);
  return all ? 0 : 1;
}
