#include "omninav/planning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "omninav/kernels.hpp"
#include "omninav/text.hpp"

namespace omninav::planning {

// ---------------------------------------------------------------------------
// Costmap

Costmap::Costmap(CostmapConfig cfg, Point2 center) : cfg_(cfg) {
  if (!(cfg_.resolution > 0.0) || !(cfg_.size > cfg_.resolution)) {
    throw std::invalid_argument("costmap: bad size or resolution");
  }
  size_ = static_cast<int>(std::lround(cfg_.size / cfg_.resolution));
  state_.assign(static_cast<std::size_t>(size_) * size_, CostState::Clear);
  bearing_.assign(state_.size(), 0.0);
  origin_gx_ = static_cast<long long>(std::floor(center.x / cfg_.resolution)) - size_ / 2;
  origin_gy_ = static_cast<long long>(std::floor(center.y / cfg_.resolution)) - size_ / 2;
}

void Costmap::recenter(Point2 center) {
  const long long gx = static_cast<long long>(std::floor(center.x / cfg_.resolution)) - size_ / 2;
  const long long gy = static_cast<long long>(std::floor(center.y / cfg_.resolution)) - size_ / 2;
  if (gx == origin_gx_ && gy == origin_gy_) {
    return;
  }
  std::vector<CostState> state(state_.size(), CostState::Clear);
  std::vector<double> bearing(state_.size(), 0.0);
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) {
      const long long oc = gx + c - origin_gx_;
      const long long orow = gy + r - origin_gy_;
      if (oc < 0 || orow < 0 || oc >= size_ || orow >= size_) {
        continue;
      }
      const std::size_t from = index({static_cast<int>(oc), static_cast<int>(orow)});
      const std::size_t to = index({c, r});
      state[to] = state_[from];
      bearing[to] = bearing_[from];
    }
  }
  state_ = std::move(state);
  bearing_ = std::move(bearing);
  origin_gx_ = gx;
  origin_gy_ = gy;
}

std::optional<CellIndex> Costmap::cell_of(double x, double y) const {
  const double fx = std::floor(x / cfg_.resolution);
  const double fy = std::floor(y / cfg_.resolution);
  if (!std::isfinite(fx) || !std::isfinite(fy)) {
    return std::nullopt;
  }
  const long long c = static_cast<long long>(fx) - origin_gx_;
  const long long r = static_cast<long long>(fy) - origin_gy_;
  if (c < 0 || r < 0 || c >= size_ || r >= size_) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(c), static_cast<int>(r)};
}

Point2 Costmap::center_of(CellIndex cell) const {
  return {(static_cast<double>(origin_gx_ + cell.col) + 0.5) * cfg_.resolution,
          (static_cast<double>(origin_gy_ + cell.row) + 0.5) * cfg_.resolution};
}

std::optional<double> Costmap::bearing(CellIndex cell) const {
  if (state(cell) != CostState::Obstacle) {
    return std::nullopt;
  }
  return bearing_[index(cell)];
}

void Costmap::mark(CellIndex cell, double body_bearing) {
  state_[index(cell)] = CostState::Obstacle;
  bearing_[index(cell)] = body_bearing;
}

void Costmap::clear(CellIndex cell) {
  state_[index(cell)] = CostState::Clear;
  bearing_[index(cell)] = 0.0;
}

std::size_t Costmap::obstacle_count() const {
  return static_cast<std::size_t>(std::count(state_.begin(), state_.end(), CostState::Obstacle));
}

std::vector<CellIndex> Costmap::obstacles() const {
  std::vector<CellIndex> out;
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) {
      if (state_[index({c, r})] == CostState::Obstacle) {
        out.push_back({c, r});
      }
    }
  }
  return out;
}

bool Costmap::segment_blocked(Point2 a, Point2 b, double radius) const {
  const double len = distance(a, b);
  if (len <= 0.0) {
    return false;
  }
  const double dx = (b.x - a.x) / len;
  const double dy = (b.y - a.y) / len;
  const double res = cfg_.resolution;
  const long long gx0 = static_cast<long long>(std::floor((std::min(a.x, b.x) - radius) / res));
  const long long gx1 = static_cast<long long>(std::floor((std::max(a.x, b.x) + radius) / res));
  const long long gy0 = static_cast<long long>(std::floor((std::min(a.y, b.y) - radius) / res));
  const long long gy1 = static_cast<long long>(std::floor((std::max(a.y, b.y) + radius) / res));
  for (long long gy = gy0; gy <= gy1; ++gy) {
    for (long long gx = gx0; gx <= gx1; ++gx) {
      const long long c = gx - origin_gx_;
      const long long r = gy - origin_gy_;
      if (c < 0 || r < 0 || c >= size_ || r >= size_) {
        continue;
      }
      const CellIndex cell{static_cast<int>(c), static_cast<int>(r)};
      if (state_[index(cell)] != CostState::Obstacle) {
        continue;
      }
      const Point2 p = center_of(cell);
      const double along = (p.x - a.x) * dx + (p.y - a.y) * dy;
      if (along <= 0.0) {
        continue;
      }
      const double t = std::min(along, len);
      if (distance(p, {a.x + t * dx, a.y + t * dy}) <= radius) {
        return true;
      }
    }
  }
  return false;
}

CostmapUpdateReport costmap_update(Costmap& cm, const LaserScan& merged, const Pose2D& robot,
                                   double facing_half_angle) {
  if (merged.frame != ScanFrame::Merged) {
    throw std::invalid_argument("costmap_update: expects the merged scan");
  }
  CostmapUpdateReport report;
  cm.recenter({robot.x, robot.y});

  const std::size_t cells = static_cast<std::size_t>(cm.width()) * cm.height();
  std::vector<std::uint8_t> hit(cells, 0);
  std::vector<double> hit_bearing(cells, 0.0);
  auto flat = [&](CellIndex c) {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cm.width()) +
           static_cast<std::size_t>(c.col);
  };
  for (std::size_t i = 0; i < merged.ranges.size(); ++i) {
    const double r = merged.ranges[i];
    if (r < 0.0) {
      continue;
    }
    const double a = merged.angle_min + static_cast<double>(i) * merged.angle_increment;
    // A hair past the surface so hits on a cell boundary land in the obstacle's cell.
    const double reach = r + 1e-6;
    const Point2 end = robot.transform({reach * std::cos(a), reach * std::sin(a)});
    if (const auto cell = cm.cell_of(end.x, end.y)) {
      hit[flat(*cell)] = 1;
      hit_bearing[flat(*cell)] = normalize_angle(a);
    }
  }

  for (const CellIndex cell : cm.obstacles()) {
    if (hit[flat(cell)]) {
      continue;
    }
    const Point2 p = cm.center_of(cell);
    const double bearing = angle_diff(std::atan2(p.y - robot.y, p.x - robot.x), robot.theta);
    if (std::abs(bearing) <= facing_half_angle) {
      cm.clear(cell);
      report.cleared.push_back({p, bearing});
    }
  }

  for (int r = 0; r < cm.height(); ++r) {
    for (int c = 0; c < cm.width(); ++c) {
      const CellIndex cell{c, r};
      if (hit[flat(cell)]) {
        cm.mark(cell, hit_bearing[flat(cell)]);
        ++report.inserted;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Global planner

double OctileCost::value() const {
  return static_cast<double>(straight) + std::sqrt(2.0) * static_cast<double>(diagonal);
}

Traversability::Traversability(const OccupancyGrid& map, double inflation_radius)
    : width_(map.width), height_(map.height) {
  map.validate();
  const std::size_t n = map.size();
  std::vector<std::uint8_t> occupied(n);
  std::transform(map.cells.begin(), map.cells.end(), occupied.begin(),
                 [](CellState s) { return s == CellState::Occupied ? 1 : 0; });
  std::vector<double> sq(n);
  kernels::squared_distance_transform(occupied, width_, height_, sq, Execution::Parallel);
  passable_.assign(n, 0);
  hard_.assign(n, 0);
  const double r_cells = inflation_radius / map.resolution;
  const double r_sq = r_cells * r_cells;
  for (std::size_t i = 0; i < n; ++i) {
    hard_[i] = map.cells[i] != CellState::Free ? 1 : 0;
    passable_[i] = (!hard_[i] && sq[i] > r_sq + 1e-9) ? 1 : 0;
  }
}

bool Traversability::occupied_or_unknown(int col, int row) const {
  if (col < 0 || row < 0 || col >= width_ || row >= height_) {
    return true;
  }
  return hard_[static_cast<std::size_t>(row) * width_ + col] != 0;
}

void Traversability::open_around(CellIndex cell, int radius) {
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      if (dc * dc + dr * dr > radius * radius) {
        continue;
      }
      const int c = cell.col + dc;
      const int r = cell.row + dr;
      if (!occupied_or_unknown(c, r)) {
        passable_[static_cast<std::size_t>(r) * width_ + c] = 1;
      }
    }
  }
}

void Traversability::close(CellIndex cell) {
  if (cell.col >= 0 && cell.row >= 0 && cell.col < width_ && cell.row < height_) {
    passable_[static_cast<std::size_t>(cell.row) * width_ + cell.col] = 0;
  }
}

GlobalPlan plan_cells(const Traversability& trav, CellIndex start, CellIndex goal) {
  if (!trav.passable(start.col, start.row)) {
    throw std::invalid_argument("plan: start cell is blocked or out of bounds");
  }
  if (!trav.passable(goal.col, goal.row)) {
    throw std::invalid_argument("plan: goal cell is blocked or out of bounds");
  }
  GlobalPlan plan;
  const int w = trav.width();
  const std::size_t n = static_cast<std::size_t>(w) * trav.height();
  auto flat = [w](int c, int r) { return static_cast<std::size_t>(r) * w + c; };
  auto heuristic = [&](int c, int r) {
    const double dx = std::abs(c - goal.col);
    const double dy = std::abs(r - goal.row);
    return std::max(dx, dy) - std::min(dx, dy) + std::sqrt(2.0) * std::min(dx, dy);
  };

  std::vector<OctileCost> g(n);
  std::vector<double> g_value(n, HUGE_VAL);
  std::vector<std::int64_t> parent(n, -1);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const std::size_t s = flat(start.col, start.row);
  const std::size_t t = flat(goal.col, goal.row);
  g_value[s] = 0.0;
  open.push({heuristic(start.col, start.row), s});

  constexpr int kDc[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int kDr[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  std::vector<std::uint8_t> closed(n, 0);
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) {
      continue;
    }
    closed[cur] = 1;
    if (cur == t) {
      break;
    }
    const int c = static_cast<int>(cur % static_cast<std::size_t>(w));
    const int r = static_cast<int>(cur / static_cast<std::size_t>(w));
    for (int k = 0; k < 8; ++k) {
      const int nc = c + kDc[k];
      const int nr = r + kDr[k];
      if (!trav.passable(nc, nr)) {
        continue;
      }
      const bool diagonal = k >= 4;
      if (diagonal && (!trav.passable(nc, r) || !trav.passable(c, nr))) {
        continue;
      }
      const std::size_t nb = flat(nc, nr);
      OctileCost cand = g[cur];
      (diagonal ? cand.diagonal : cand.straight) += 1;
      const double cand_value = cand.value();
      if (cand_value < g_value[nb]) {
        g[nb] = cand;
        g_value[nb] = cand_value;
        parent[nb] = static_cast<std::int64_t>(cur);
        closed[nb] = 0;
        open.push({cand_value + heuristic(nc, nr), nb});
      }
    }
  }
  if (!std::isfinite(g_value[t])) {
    return plan;
  }
  plan.status = PlanStatus::Found;
  plan.cost = g[t];
  for (std::int64_t cur = static_cast<std::int64_t>(t); cur >= 0;
       cur = parent[static_cast<std::size_t>(cur)]) {
    plan.cells.push_back({static_cast<int>(cur % w), static_cast<int>(cur / w)});
  }
  std::reverse(plan.cells.begin(), plan.cells.end());
  return plan;
}

WorldPlan plan_global(const OccupancyGrid& map, const Traversability& trav, const Pose2D& start,
                      const Pose2D& goal) {
  const auto sc = world_to_cell(map, start.x, start.y);
  const auto gc = world_to_cell(map, goal.x, goal.y);
  if (!sc || !gc) {
    throw std::invalid_argument("plan_global: start or goal outside the map");
  }
  const GlobalPlan cells = plan_cells(trav, *sc, *gc);
  WorldPlan plan;
  plan.status = cells.status;
  plan.cost = cells.cost;
  if (cells.status != PlanStatus::Found) {
    return plan;
  }
  for (std::size_t i = 0; i < cells.cells.size(); ++i) {
    const Point2 p = cell_center(map, cells.cells[i]);
    double heading = goal.theta;
    if (i + 1 < cells.cells.size()) {
      const Point2 next = cell_center(map, cells.cells[i + 1]);
      heading = std::atan2(next.y - p.y, next.x - p.x);
    }
    plan.waypoints.emplace_back(p.x, p.y, heading);
  }
  plan.waypoints.back() = goal;
  return plan;
}

WorldPlan plan_global(const OccupancyGrid& map, const Pose2D& start, const Pose2D& goal,
                      const PlannerConfig& cfg) {
  return plan_global(map, Traversability(map, cfg.inflation_radius), start, goal);
}

// ---------------------------------------------------------------------------
// Local planner

std::string_view to_string(LocalStatus status) {
  switch (status) {
    case LocalStatus::Drive:
      return "drive";
    case LocalStatus::Rotate:
      return "rotate";
    case LocalStatus::AlignGoal:
      return "align";
    case LocalStatus::AtGoal:
      return "at_goal";
    case LocalStatus::Blocked:
      return "blocked";
  }
  return "unknown";
}

namespace {

double rotation_rate(double error, const LocalPlannerConfig& cfg) {
  const double mag = std::clamp(cfg.rotation_gain * std::abs(error), cfg.min_rotation_speed,
                                cfg.limits.max_angular);
  return std::copysign(mag, error);
}

}  // namespace

LocalCommand plan_local(std::span<const Pose2D> path, const Pose2D& pose, const Costmap& cm,
                        const LocalPlannerConfig& cfg) {
  if (path.empty()) {
    throw std::invalid_argument("plan_local: empty path");
  }
  LocalCommand out;
  const Pose2D& goal = path.back();
  out.carrot = goal;
  const double to_goal = distance(pose, goal);

  if (to_goal <= cfg.goal_tolerance) {
    const double err = angle_diff(goal.theta, pose.theta);
    if (std::abs(err) <= cfg.heading_tolerance) {
      out.status = LocalStatus::AtGoal;
      return out;
    }
    out.status = LocalStatus::AlignGoal;
    out.cmd.wz = rotation_rate(err, cfg);
    return out;
  }

  std::size_t closest = 0;
  double best = HUGE_VAL;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double d = distance(pose, path[i]);
    if (d < best) {
      best = d;
      closest = i;
    }
  }
  std::size_t carrot = path.size() - 1;
  for (std::size_t i = closest; i < path.size(); ++i) {
    if (distance(pose, path[i]) >= cfg.lookahead) {
      carrot = i;
      break;
    }
  }
  out.carrot = path[carrot];

  const double bearing =
      angle_diff(std::atan2(out.carrot.y - pose.y, out.carrot.x - pose.x), pose.theta);
  if (std::abs(bearing) > cfg.align_threshold) {
    out.status = LocalStatus::Rotate;
    out.cmd.wz = rotation_rate(bearing, cfg);
    return out;
  }
  // Check the stretch of path the robot is about to drive: from the robot onto the path,
  // then along the path to the carrot. The path itself keeps the inflation margin from
  // mapped structure, so only new obstacles trip this.
  const std::size_t entry = std::min(closest + 1, carrot);
  bool blocked =
      cm.segment_blocked({pose.x, pose.y}, {path[entry].x, path[entry].y}, cfg.collision_radius);
  for (std::size_t i = entry; !blocked && i < carrot; ++i) {
    blocked = cm.segment_blocked({path[i].x, path[i].y}, {path[i + 1].x, path[i + 1].y},
                                 cfg.collision_radius);
  }
  if (blocked) {
    out.status = LocalStatus::Blocked;
    return out;
  }
  out.status = LocalStatus::Drive;
  out.cmd.vx = std::min(cfg.limits.max_linear, cfg.approach_gain * to_goal);
  out.cmd.wz = std::clamp(cfg.heading_gain * bearing, -cfg.limits.max_angular,
                          cfg.limits.max_angular);
  out.cmd.vy = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Markers

std::vector<MarkerSpec> read_markers(std::istream& is) {
  std::vector<MarkerSpec> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    const auto f = text::split_ws(body);
    if (f.size() < 4) {
      throw std::invalid_argument("markers line " + std::to_string(lineno) +
                                  ": expected 'id x y theta label'");
    }
    MarkerSpec m;
    m.id = std::string(f[0]);
    try {
      m.goal = Pose2D(text::parse_double(f[1]), text::parse_double(f[2]),
                      text::parse_double(f[3]));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("markers line " + std::to_string(lineno) + ": " + e.what());
    }
    if (f.size() > 4) {
      const auto start = static_cast<std::size_t>(f[4].data() - body.data());
      m.label = std::string(body.substr(start));
    }
    for (const MarkerSpec& other : out) {
      if (other.id == m.id) {
        throw std::invalid_argument("markers line " + std::to_string(lineno) +
                                    ": duplicate id '" + m.id + "'");
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MarkerSpec> read_markers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open markers file " + path.string());
  }
  return read_markers(in);
}

void write_markers(std::ostream& os, std::span<const MarkerSpec> markers) {
  for (const MarkerSpec& m : markers) {
    os << m.id << ' ' << text::format_double(m.goal.x) << ' ' << text::format_double(m.goal.y)
       << ' ' << text::format_double(m.goal.theta);
    if (!m.label.empty()) {
      os << ' ' << m.label;
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Navigator

std::string_view to_string(NavOutcome outcome) {
  switch (outcome) {
    case NavOutcome::Reached:
      return "reached";
    case NavOutcome::Blocked:
      return "blocked";
    case NavOutcome::NoPath:
      return "no-path";
  }
  return "unknown";
}

Navigator::Navigator(RobotInterface& robot, OccupancyGrid map, std::vector<MarkerSpec> markers,
                     NavigatorConfig cfg)
    : robot_(robot),
      map_(std::move(map)),
      static_trav_(map_, cfg.planner.inflation_radius),
      markers_(std::move(markers)),
      cfg_(cfg),
      costmap_(cfg.costmap, {robot.pose().x, robot.pose().y}) {}

const MarkerSpec& Navigator::marker(std::string_view id) const {
  for (const MarkerSpec& m : markers_) {
    if (m.id == id) {
      return m;
    }
  }
  throw std::invalid_argument("unknown marker '" + std::string(id) + "'");
}

NavResult Navigator::navigate_to_marker(std::string_view id) {
  const MarkerSpec& m = marker(id);
  record(robot_.pose(), "goto " + m.id);
  return navigate_to(m.goal);
}

bool Navigator::goal_reached(const Pose2D& pose, const Pose2D& goal) const {
  return distance(pose, goal) <= cfg_.position_tolerance &&
         std::abs(angle_diff(goal.theta, pose.theta)) <= cfg_.heading_tolerance;
}

void Navigator::record(const Pose2D& pose, std::string event) {
  log_.push_back({robot_.time(), pose, std::move(event)});
}

WorldPlan Navigator::replan(const Pose2D& start, const Pose2D& goal, bool with_costmap) {
  Traversability trav = static_trav_;
  const int inflate_cells =
      static_cast<int>(std::ceil(cfg_.planner.inflation_radius / map_.resolution));
  if (with_costmap) {
    for (const CellIndex c : costmap_.obstacles()) {
      const Point2 p = costmap_.center_of(c);
      const auto mc = world_to_cell(map_, p.x, p.y);
      if (!mc) {
        continue;
      }
      for (int dr = -inflate_cells; dr <= inflate_cells; ++dr) {
        for (int dc = -inflate_cells; dc <= inflate_cells; ++dc) {
          if (std::hypot(dc, dr) * map_.resolution <= cfg_.planner.inflation_radius) {
            trav.close({mc->col + dc, mc->row + dr});
          }
        }
      }
    }
  }
  const auto sc = world_to_cell(map_, start.x, start.y);
  if (sc && !trav.passable(sc->col, sc->row)) {
    trav.open_around(*sc, inflate_cells);
  }
  try {
    return plan_global(map_, trav, start, goal);
  } catch (const std::invalid_argument&) {
    return {};
  }
}

NavResult Navigator::navigate_to(const Pose2D& goal) {
  NavResult result;
  const double t0 = robot_.time();
  Pose2D pose = robot_.pose();
  if (goal_reached(pose, goal)) {
    record(pose, "reached");
    result.outcome = NavOutcome::Reached;
    result.final_pose = pose;
    return result;
  }
  // The goal itself must be a valid static target.
  const auto gc = world_to_cell(map_, goal.x, goal.y);
  if (!gc || !static_trav_.passable(gc->col, gc->row)) {
    throw std::invalid_argument("navigate: goal is not a free cell of the map");
  }
  WorldPlan plan = replan(pose, goal, false);
  if (plan.status != PlanStatus::Found) {
    record(pose, "no-path");
    result.outcome = NavOutcome::NoPath;
    result.final_pose = pose;
    return result;
  }
  record(pose, "plan");

  int blocked_ticks = 0;
  while (robot_.time() - t0 < cfg_.timeout) {
    pose = robot_.pose();
    costmap_update(costmap_, robot_.merged_scan(), pose, cfg_.facing_half_angle);
    const LocalCommand lc = plan_local(plan.waypoints, pose, costmap_, cfg_.local);
    if (lc.status == LocalStatus::AtGoal) {
      if (goal_reached(pose, goal)) {
        record(pose, "reached");
        result.outcome = NavOutcome::Reached;
        result.final_pose = pose;
        result.elapsed = robot_.time() - t0;
        return result;
      }
    }
    if (lc.status == LocalStatus::Blocked) {
      if (++blocked_ticks >= cfg_.blocked_ticks_before_replan) {
        blocked_ticks = 0;
        if (++result.replans > cfg_.max_replans) {
          break;
        }
        plan = replan(pose, goal, true);
        record(pose, "replan");
        if (plan.status != PlanStatus::Found) {
          break;
        }
      }
    } else {
      blocked_ticks = 0;
    }
    robot_.apply(lc.cmd, cfg_.dt);
    record(robot_.pose(), std::string(to_string(lc.status)));
  }
  pose = robot_.pose();
  record(pose, "blocked");
  result.outcome = NavOutcome::Blocked;
  result.final_pose = pose;
  result.elapsed = robot_.time() - t0;
  return result;
}

void Navigator::write_log_csv(std::ostream& os) const {
  using text::format_double;
  os << "t,x,y,theta,event\n";
  for (const NavLogEntry& e : log_) {
    os << format_double(e.t) << ',' << format_double(e.pose.x) << ',' << format_double(e.pose.y)
       << ',' << format_double(e.pose.theta) << ',' << e.event << '\n';
  }
}

}  // namespace omninav::planning
