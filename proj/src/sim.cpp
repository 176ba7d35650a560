#include "omninav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "omninav/text.hpp"

namespace omninav::sim {

namespace {

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

bool inside(const Polygon& poly, Point2 p) {
  bool in = false;
  const auto& v = poly.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y) &&
        p.x < (v[j].x - v[i].x) * (p.y - v[i].y) / (v[j].y - v[i].y) + v[i].x) {
      in = !in;
    }
  }
  return in;
}

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab{b.x - a.x, b.y - a.y};
  const double len_sq = ab.x * ab.x + ab.y * ab.y;
  double t = len_sq > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, {a.x + t * ab.x, a.y + t * ab.y});
}

double ray_disk(Point2 o, Point2 d, const Disk& disk) {
  const Point2 f{o.x - disk.center.x, o.y - disk.center.y};
  const double c = f.x * f.x + f.y * f.y - disk.radius * disk.radius;
  if (c <= 0.0) {
    return 0.0;
  }
  const double b = f.x * d.x + f.y * d.y;
  const double disc = b * b - c;
  if (disc < 0.0) {
    return HUGE_VAL;
  }
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : HUGE_VAL;
}

double ray_polygon(Point2 o, Point2 d, const Polygon& poly) {
  if (inside(poly, o)) {
    return 0.0;
  }
  double best = HUGE_VAL;
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2 a = v[i];
    const Point2 e{v[(i + 1) % v.size()].x - a.x, v[(i + 1) % v.size()].y - a.y};
    const double denom = cross(d, e);
    if (denom == 0.0) {
      continue;
    }
    const Point2 ao{a.x - o.x, a.y - o.y};
    const double t = cross(ao, e) / denom;
    const double s = cross(ao, d) / denom;
    if (t >= 0.0 && s >= 0.0 && s <= 1.0) {
      best = std::min(best, t);
    }
  }
  return best;
}

double ray_grid(const OccupancyGrid& map, Point2 origin, double angle, double max_range) {
  const Point2 p = map.origin.inverse_transform(origin);
  const double a = angle - map.origin.theta;
  const double dx = std::cos(a);
  const double dy = std::sin(a);
  const double res = map.resolution;
  long cx = static_cast<long>(std::floor(p.x / res));
  long cy = static_cast<long>(std::floor(p.y / res));
  auto occupied = [&](long c, long r) {
    return c >= 0 && r >= 0 && c < map.width && r < map.height &&
           map.at(static_cast<int>(c), static_cast<int>(r)) == CellState::Occupied;
  };
  if (occupied(cx, cy)) {
    return 0.0;
  }
  const int step_x = dx > 0.0 ? 1 : -1;
  const int step_y = dy > 0.0 ? 1 : -1;
  double t_max_x = dx != 0.0 ? ((cx + (dx > 0.0 ? 1 : 0)) * res - p.x) / dx : HUGE_VAL;
  double t_max_y = dy != 0.0 ? ((cy + (dy > 0.0 ? 1 : 0)) * res - p.y) / dy : HUGE_VAL;
  const double t_delta_x = dx != 0.0 ? res / std::abs(dx) : HUGE_VAL;
  const double t_delta_y = dy != 0.0 ? res / std::abs(dy) : HUGE_VAL;
  while (true) {
    double t = 0.0;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      cx += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      cy += step_y;
    }
    if (t > max_range) {
      return HUGE_VAL;
    }
    if (occupied(cx, cy)) {
      return t;
    }
  }
}

bool sees(const Obstacle& o, double height) {
  return o.active && o.z_min <= height && height <= o.z_max;
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

Polygon box(double min_x, double min_y, double max_x, double max_y) {
  return Polygon{{{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}}};
}

double distance_to(const Obstacle& o, Point2 p) {
  if (const auto* d = std::get_if<Disk>(&o.shape)) {
    return std::max(0.0, distance(p, d->center) - d->radius);
  }
  const auto& poly = std::get<Polygon>(o.shape);
  if (inside(poly, p)) {
    return 0.0;
  }
  double best = HUGE_VAL;
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, segment_distance(p, v[i], v[(i + 1) % v.size()]));
  }
  return best;
}

Obstacle& World::obstacle(std::string_view id) {
  for (Obstacle& o : obstacles) {
    if (o.id == id) {
      return o;
    }
  }
  throw std::invalid_argument("unknown obstacle '" + std::string(id) + "'");
}

std::vector<Obstacle> read_obstacles(std::istream& is) {
  std::vector<Obstacle> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    auto f = text::split_ws(body);
    Obstacle o;
    try {
      if (f.size() >= 2 && f.back() == "off") {
        o.active = false;
        f.pop_back();
      }
      if (f.size() < 2) {
        throw std::invalid_argument("expected '<shape> <id> ...'");
      }
      o.id = std::string(f[1]);
      std::vector<double> v;
      for (std::size_t i = 2; i < f.size(); ++i) {
        v.push_back(text::parse_double(f[i]));
      }
      if (f[0] == "disk") {
        if (v.size() != 5) {
          throw std::invalid_argument("disk needs cx cy r z_min z_max");
        }
        if (!(v[2] > 0.0)) {
          throw std::invalid_argument("disk radius must be positive");
        }
        o.shape = Disk{{v[0], v[1]}, v[2]};
        o.z_min = v[3];
        o.z_max = v[4];
      } else if (f[0] == "box") {
        if (v.size() != 6) {
          throw std::invalid_argument("box needs min_x min_y max_x max_y z_min z_max");
        }
        if (!(v[2] > v[0]) || !(v[3] > v[1])) {
          throw std::invalid_argument("box extents must be positive");
        }
        o.shape = box(v[0], v[1], v[2], v[3]);
        o.z_min = v[4];
        o.z_max = v[5];
      } else if (f[0] == "poly") {
        if (v.size() < 8 || v.size() % 2 != 0) {
          throw std::invalid_argument("poly needs z_min z_max and at least 3 vertices");
        }
        o.z_min = v[0];
        o.z_max = v[1];
        Polygon poly;
        for (std::size_t i = 2; i < v.size(); i += 2) {
          poly.vertices.push_back({v[i], v[i + 1]});
        }
        o.shape = std::move(poly);
      } else {
        throw std::invalid_argument("unknown shape '" + std::string(f[0]) + "'");
      }
      if (o.z_max < o.z_min) {
        throw std::invalid_argument("z_max below z_min");
      }
      for (const Obstacle& other : out) {
        if (other.id == o.id) {
          throw std::invalid_argument("duplicate id '" + o.id + "'");
        }
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("world " + line_error(lineno, e.what()));
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Obstacle> read_obstacles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open world file " + path.string());
  }
  return read_obstacles(in);
}

void write_obstacles(std::ostream& os, const std::vector<Obstacle>& obstacles) {
  using text::format_double;
  for (const Obstacle& o : obstacles) {
    if (const auto* d = std::get_if<Disk>(&o.shape)) {
      os << "disk " << o.id << ' ' << format_double(d->center.x) << ' '
         << format_double(d->center.y) << ' ' << format_double(d->radius) << ' '
         << format_double(o.z_min) << ' ' << format_double(o.z_max);
    } else {
      os << "poly " << o.id << ' ' << format_double(o.z_min) << ' ' << format_double(o.z_max);
      for (const Point2& p : std::get<Polygon>(o.shape).vertices) {
        os << ' ' << format_double(p.x) << ' ' << format_double(p.y);
      }
    }
    if (!o.active) {
      os << " off";
    }
    os << '\n';
  }
}

void NoiseModel::validate() const {
  if (odom_translation_std < 0.0 || odom_rotation_std < 0.0 || range_std < 0.0) {
    throw std::invalid_argument("noise model: standard deviations must be >= 0");
  }
  if (!std::isfinite(odom_scale_error) || odom_scale_error <= -1.0) {
    throw std::invalid_argument("noise model: odom_scale_error must be > -1");
  }
}

RayHit cast_ray(const World& world, Point2 origin, double angle, double max_range,
                double height) {
  RayHit hit;
  if (world.map.size() > 0) {
    hit.range = ray_grid(world.map, origin, angle, max_range);
  }
  const Point2 d{std::cos(angle), std::sin(angle)};
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    const Obstacle& o = world.obstacles[i];
    if (!sees(o, height)) {
      continue;
    }
    const double t = std::holds_alternative<Disk>(o.shape)
                         ? ray_disk(origin, d, std::get<Disk>(o.shape))
                         : ray_polygon(origin, d, std::get<Polygon>(o.shape));
    if (t < hit.range) {
      hit.range = t;
      hit.object = static_cast<int>(i);
    }
  }
  if (hit.range > max_range) {
    hit = RayHit{};
  }
  return hit;
}

bool collides(const World& world, Point2 p, double radius) {
  for (const Obstacle& o : world.obstacles) {
    if (o.active && distance_to(o, p) < radius) {
      return true;
    }
  }
  const OccupancyGrid& map = world.map;
  if (map.size() == 0) {
    return false;
  }
  const Point2 q = map.origin.inverse_transform(p);
  const double res = map.resolution;
  const int c0 = std::max(0, static_cast<int>(std::floor((q.x - radius) / res)));
  const int c1 = std::min(map.width - 1, static_cast<int>(std::floor((q.x + radius) / res)));
  const int r0 = std::max(0, static_cast<int>(std::floor((q.y - radius) / res)));
  const int r1 = std::min(map.height - 1, static_cast<int>(std::floor((q.y + radius) / res)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (map.at(c, r) != CellState::Occupied) {
        continue;
      }
      const double nx = std::clamp(q.x, c * res, (c + 1) * res);
      const double ny = std::clamp(q.y, r * res, (r + 1) * res);
      if (std::hypot(q.x - nx, q.y - ny) < radius) {
        return true;
      }
    }
  }
  return false;
}

Simulator::Simulator(World world, SimConfig cfg)
    : world_(std::move(world)), cfg_(cfg), rng_(cfg.noise.rng_seed), odom_pose_(world_.robot) {
  cfg_.noise.validate();
  cfg_.base.validate();
  cfg_.depth.validate();
  if (!(cfg_.robot_radius > 0.0)) {
    throw std::invalid_argument("sim: robot_radius must be positive");
  }
}

StepResult Simulator::step(const VelocityCommand& cmd, double dt) {
  if (!(dt > 0.0) || dt > 0.1 + 1e-12) {
    throw std::invalid_argument("sim step: dt must be in (0, 0.1]");
  }
  if (!cmd.finite()) {
    throw std::invalid_argument("sim step: non-finite command");
  }
  StepResult out;
  const VelocityCommand twist = motion::executed_twist(cmd, cfg_.wheels);
  const Pose2D start = world_.robot;
  Pose2D target = motion::integrate_odometry(start, twist, dt);
  const double r = cfg_.robot_radius;
  if (collides(world_, {target.x, target.y}, r) && !collides(world_, {start.x, start.y}, r)) {
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      const Pose2D p = motion::integrate_odometry(start, twist, mid * dt);
      (collides(world_, {p.x, p.y}, r) ? hi : lo) = mid;
    }
    target = lo > 0.0 ? motion::integrate_odometry(start, twist, lo * dt) : start;
    out.collided = true;
  }
  world_.robot = target;
  world_.time += dt;

  const Pose2D truth = target.relative_to(start);
  const NoiseModel& nm = cfg_.noise;
  const double trans = std::hypot(truth.x, truth.y);
  const double rot = std::abs(truth.theta);
  const double scale = 1.0 + nm.odom_scale_error;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Pose2D delta = truth;
  if (nm.odom_translation_std > 0.0 || nm.odom_rotation_std > 0.0 || nm.odom_scale_error != 0.0) {
    const double sx = nm.odom_translation_std * trans;
    const double sr = nm.odom_rotation_std * rot;
    const double ex = sx > 0.0 ? sx * gauss(rng_) : 0.0;
    const double ey = sx > 0.0 ? sx * gauss(rng_) : 0.0;
    const double eth = sr > 0.0 ? sr * gauss(rng_) : 0.0;
    delta = Pose2D(truth.x * scale + ex, truth.y * scale + ey, truth.theta + eth);
  }
  odom_pose_ = odom_pose_.compose(delta);
  out.true_pose = target;
  out.odom_delta = delta;
  return out;
}

double Simulator::noisy_range(double r, double range_min, double range_max) {
  if (!std::isfinite(r)) {
    return kInvalidRange;
  }
  if (cfg_.noise.range_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, cfg_.noise.range_std);
    r += gauss(rng_);
  }
  return (r >= range_min && r <= range_max) ? r : kInvalidRange;
}

std::array<LaserScan, 3> Simulator::sense_base_raw() {
  const sensing::BaseLaserConfig& b = cfg_.base;
  const double inc = b.beam_increment();
  const double half = b.fov_per_laser / 2.0;
  std::array<LaserScan, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    LaserScan s = LaserScan::make_empty(-half, inc, static_cast<std::size_t>(b.points_per_laser),
                                        b.range_min, b.range_max, ScanFrame::Base);
    s.angle_max = half;
    for (int i = 0; i < b.points_per_laser; ++i) {
      const double a = world_.robot.theta + b.centers[k] - half + i * inc;
      const RayHit hit =
          cast_ray(world_, {world_.robot.x, world_.robot.y}, a, b.range_max, b.mount_height);
      s.ranges[static_cast<std::size_t>(i)] = noisy_range(hit.range, b.range_min, b.range_max);
    }
    out[k] = std::move(s);
  }
  return out;
}

LaserScan Simulator::sense_base() {
  const auto raw = sense_base_raw();
  std::array<LaserScan, 3> body;
  for (std::size_t k = 0; k < 3; ++k) {
    body[k] = sensing::transform_scan_to_body(raw[k], cfg_.base.centers[k]);
  }
  return sensing::assemble_base_scan(body);
}

sensing::DepthImage Simulator::render_depth() {
  const sensing::DepthScanConfig& d = cfg_.depth;
  sensing::DepthImage img;
  img.width = d.points;
  img.height = std::max(1, d.slice_row + 1);
  img.horizontal_fov = d.fov;
  img.depths.assign(static_cast<std::size_t>(img.width) * img.height, 0.0);
  const sensing::PinholeColumns cam(img.width, d.fov);
  for (int col = 0; col < img.width; ++col) {
    const double b = cam.bearing(col);
    const RayHit hit = cast_ray(world_, {world_.robot.x, world_.robot.y}, world_.robot.theta + b,
                                d.range_max / std::cos(b), d.mount_height);
    double range = hit.range;
    if (std::isfinite(range) && cfg_.noise.range_std > 0.0) {
      std::normal_distribution<double> gauss(0.0, cfg_.noise.range_std);
      range += gauss(rng_);
    }
    const double depth = std::isfinite(range) && range > 0.0 ? range * std::cos(b) : 0.0;
    for (int row = 0; row < img.height; ++row) {
      img.depths[static_cast<std::size_t>(row) * img.width + col] = depth;
    }
  }
  return img;
}

LaserScan Simulator::sense_depth() { return sensing::depth_image_to_scan(render_depth(), cfg_.depth); }

LaserScan Simulator::sense_merged() { return sensing::merge_scans(sense_base(), sense_depth()); }

void Simulator::set_obstacle(std::string_view id, bool active) {
  world_.obstacle(id).active = active;
}

SimRobot::SimRobot(Simulator& sim, PoseSource pose_source, StepHook hook)
    : sim_(sim), pose_source_(std::move(pose_source)), hook_(std::move(hook)) {}

Pose2D SimRobot::pose() const { return pose_source_ ? pose_source_() : sim_.pose(); }

void SimRobot::apply(const VelocityCommand& cmd, double dt) {
  const StepResult r = sim_.step(cmd, dt);
  if (hook_) {
    hook_(r);
  }
}

// ---------------------------------------------------------------------------
// Scenarios

std::vector<ScenarioEvent> parse_scenario(std::istream& is) {
  std::vector<ScenarioEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    const auto f = text::split_ws(body);
    ScenarioEvent ev;
    ev.line = lineno;
    try {
      if (f.size() < 2) {
        throw std::invalid_argument("expected 't <command>'");
      }
      ev.t = text::parse_double(f[0]);
      if (ev.t < 0.0) {
        throw std::invalid_argument("negative time");
      }
      if (!out.empty() && ev.t < out.back().t) {
        throw std::invalid_argument("time goes backwards");
      }
      const std::string_view cmd = f[1];
      if (cmd == "cmd") {
        if (f.size() != 5) {
          throw std::invalid_argument("cmd needs vx vy wz");
        }
        ev.kind = EventKind::Cmd;
        ev.cmd = {text::parse_double(f[2]), text::parse_double(f[3]), text::parse_double(f[4])};
      } else if (cmd == "obstacle") {
        if (f.size() != 4 || (f[3] != "on" && f[3] != "off")) {
          throw std::invalid_argument("obstacle needs '<id> on|off'");
        }
        ev.kind = EventKind::Obstacle;
        ev.name = std::string(f[2]);
        ev.active = f[3] == "on";
      } else if (cmd == "button" || cmd == "goto") {
        if (f.size() != 3) {
          throw std::invalid_argument(std::string(cmd) + " needs exactly one name");
        }
        ev.kind = cmd == "button" ? EventKind::Button : EventKind::Goto;
        ev.name = std::string(f[2]);
      } else {
        throw std::invalid_argument("unknown command '" + std::string(cmd) + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("scenario " + line_error(lineno, e.what()));
    }
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<ScenarioEvent> parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario " + path.string());
  }
  return parse_scenario(in);
}

std::string encode_state(const Pose2D& truth, const Pose2D& odom_delta) {
  using text::format_double;
  return format_double(truth.x) + ' ' + format_double(truth.y) + ' ' +
         format_double(truth.theta) + ' ' + format_double(odom_delta.x) + ' ' +
         format_double(odom_delta.y) + ' ' + format_double(odom_delta.theta);
}

void decode_state(std::string_view payload, Pose2D& truth, Pose2D& odom_delta) {
  const auto f = text::split_ws(payload);
  if (f.size() != 6) {
    throw std::invalid_argument("state payload needs 6 fields");
  }
  truth = Pose2D(text::parse_double(f[0]), text::parse_double(f[1]), text::parse_double(f[2]));
  odom_delta = Pose2D(text::parse_double(f[3]), text::parse_double(f[4]),
                      text::parse_double(f[5]));
}

std::string encode_scan(const LaserScan& scan) {
  std::ostringstream os;
  sensing::write_scan_text(os, scan);
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') {
    s.pop_back();
  }
  return s;
}

LaserScan decode_scan(std::string_view payload, ScanFrame frame) {
  const auto f = text::split_ws(payload);
  if (f.size() < 5) {
    throw std::invalid_argument("scan payload needs a 5-field header");
  }
  std::string joined;
  for (std::size_t i = 0; i < f.size(); ++i) {
    joined += f[i];
    joined += (i == 4) ? '\n' : ' ';
  }
  std::istringstream is(joined);
  return sensing::read_scan_text(is, frame);
}

namespace {

class ScenarioRun {
 public:
  ScenarioRun(Simulator& sim, const ScenarioOptions& opts) : sim_(sim), opts_(opts) {}

  void log(std::string type, std::string payload) {
    result.log.push_back({sim_.time(), std::move(type), std::move(payload)});
  }

  void log_step(const StepResult& r) {
    log("state", encode_state(r.true_pose, r.odom_delta));
    log_scans();
  }

  void log_scans() {
    if (opts_.scans == ScanLogging::None) {
      return;
    }
    const LaserScan base = sim_.sense_base();
    const LaserScan depth = sim_.sense_depth();
    if (opts_.scans == ScanLogging::All) {
      log("scan_base", encode_scan(base));
      log("scan_depth", encode_scan(depth));
    }
    log("scan_merged", encode_scan(sensing::merge_scans(base, depth)));
  }

  void fire(const ScenarioEvent& ev, VelocityCommand& current) {
    using text::format_double;
    switch (ev.kind) {
      case EventKind::Cmd:
        current = ev.cmd;
        log("event", "cmd " + format_double(ev.cmd.vx) + ' ' + format_double(ev.cmd.vy) + ' ' +
                         format_double(ev.cmd.wz));
        break;
      case EventKind::Obstacle:
        try {
          sim_.set_obstacle(ev.name, ev.active);
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument("scenario " + line_error(ev.line, e.what()));
        }
        log("event", "obstacle " + ev.name + (ev.active ? " on" : " off"));
        break;
      case EventKind::Button:
        result.buttons.push_back(ev.name);
        log("event", "button " + ev.name);
        break;
      case EventKind::Goto:
        navigate(ev);
        break;
    }
  }

  void navigate(const ScenarioEvent& ev) {
    if (!opts_.nav_map || opts_.markers.empty()) {
      throw std::invalid_argument("scenario " +
                                  line_error(ev.line, "goto needs a map and a marker file"));
    }
    if (!navigator_) {
      robot_ = std::make_unique<SimRobot>(sim_, SimRobot::PoseSource{},
                                          [this](const StepResult& r) { log_step(r); });
      navigator_ = std::make_unique<planning::Navigator>(*robot_, *opts_.nav_map, opts_.markers,
                                                         opts_.nav);
    }
    log("event", "goto " + ev.name);
    planning::NavResult nav;
    try {
      nav = navigator_->navigate_to_marker(ev.name);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("scenario " + line_error(ev.line, e.what()));
    }
    result.navigations.push_back(nav);
    log("event", "nav " + ev.name + ' ' + std::string(planning::to_string(nav.outcome)));
  }

  ScenarioResult result;

 private:
  Simulator& sim_;
  const ScenarioOptions& opts_;
  std::unique_ptr<SimRobot> robot_;
  std::unique_ptr<planning::Navigator> navigator_;
};

}  // namespace

ScenarioResult run_scenario(const std::vector<ScenarioEvent>& script, Simulator& sim,
                            const ScenarioOptions& opts) {
  if (!(opts.dt > 0.0) || opts.dt > 0.1) {
    throw std::invalid_argument("scenario: dt must be in (0, 0.1]");
  }
  constexpr double kTimeEps = 1e-9;
  ScenarioRun run(sim, opts);
  run.log("state", encode_state(sim.pose(), Pose2D{}));
  run.log_scans();

  VelocityCommand current;
  std::size_t next = 0;
  const double end = script.empty() ? sim.time() : script.back().t;
  while (true) {
    while (next < script.size() && script[next].t <= sim.time() + kTimeEps) {
      run.fire(script[next++], current);
    }
    if (next >= script.size() && sim.time() >= end - kTimeEps) {
      break;
    }
    const double target = next < script.size() ? script[next].t : end;
    const double h = std::min(opts.dt, target - sim.time());
    run.log_step(sim.step(current, h));
  }
  return std::move(run.result);
}

void write_log_csv(std::ostream& os, const std::vector<LogRecord>& log) {
  os << "t,type,payload\n";
  for (const LogRecord& r : log) {
    os << text::format_double(r.t) << ',' << r.type << ',' << r.payload << '\n';
  }
}

std::vector<LogRecord> read_log_csv(std::istream& is) {
  std::vector<LogRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "t,type,payload") {
        throw std::invalid_argument("log: missing 't,type,payload' header");
      }
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::invalid_argument("log " + line_error(lineno, "expected t,type,payload"));
    }
    LogRecord r;
    try {
      r.t = text::parse_double(std::string_view(line).substr(0, c1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("log " + line_error(lineno, e.what()));
    }
    r.type = line.substr(c1 + 1, c2 - c1 - 1);
    r.payload = line.substr(c2 + 1);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace omninav::sim
