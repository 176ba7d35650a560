#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "omninav/map_io.hpp"
#include "omninav/mapgen.hpp"
#include "omninav/motion.hpp"
#include "omninav/replay.hpp"
#include "omninav/scenes.hpp"
#include "omninav/sim.hpp"
#include "omninav/text.hpp"
#include "omninav/tour_runner.hpp"

namespace omninav::cli {

namespace fs = std::filesystem;
using map_io::read_map;
using map_io::write_map;
using text::format_double;

namespace {

/// Thrown for bad input that CLI11 cannot catch (file contents, inconsistent options).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  int verbosity = 0;
};

struct Context {
  Globals globals;
  std::ostream& out;
  std::ostream& err;

  void info(const std::string& msg) const {
    if (globals.verbosity > 0) {
      err << msg << '\n';
    }
  }
  fs::path path(const std::string& name) const { return fs::path(globals.out) / name; }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write " + p.string());
  }
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) {
    throw UsageError("cannot open " + p.string());
  }
  return is;
}

std::string pose_text(const Pose2D& p) {
  return format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.theta);
}

Pose2D pose_from(const std::vector<double>& v) {
  if (v.size() != 3) {
    throw UsageError("a pose needs x y theta");
  }
  return {v[0], v[1], normalize_angle(v[2])};
}

// ---------------------------------------------------------------------------
// map-extract

struct MapExtractOptions {
  std::string cloud;
  std::string name = "map";
  mapgen::MapGenConfig cfg;
  bool serial = false;
};

int map_extract(const Context& ctx, const MapExtractOptions& o) {
  const PointCloud cloud = mapgen::read_point_cloud(fs::path(o.cloud));
  mapgen::MapStats stats;
  OccupancyGrid grid;
  try {
    grid = mapgen::extract_map(cloud, o.cfg, &stats,
                               o.serial ? Execution::Serial : Execution::Parallel);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_map(grid, ctx.path(o.name));
  std::ostringstream s;
  s << "input_points = " << stats.input_points << '\n'
    << "band_points = " << stats.band_points << '\n'
    << "width = " << grid.width << '\n'
    << "height = " << grid.height << '\n'
    << "occupied = " << stats.occupied << '\n'
    << "free = " << stats.free << '\n'
    << "unknown = " << stats.unknown << '\n'
    << "denoised_cells = " << stats.denoised_cells << '\n';
  ctx.out << s.str();
  open_out(ctx.path(o.name + "_stats.txt")) << s.str();
  return kSuccess;
}

// ---------------------------------------------------------------------------
// controller-demo

struct ControllerDemoOptions {
  double radius = 1.0;
  double speed = kPi / 2.0;
  double duration = 4.0;
  double dt = 0.01;
};

int controller_demo(const Context& ctx, const ControllerDemoOptions& o) {
  std::vector<motion::TimedPose> samples;
  try {
    samples = motion::circle_drive_headings(o.radius, o.speed, o.duration, o.dt);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::ofstream csv = open_out(ctx.path("trajectory.csv"));
  csv << "t,x,y,theta\n";
  for (const auto& s : samples) {
    csv << format_double(s.t) << ',' << format_double(s.pose.x) << ','
        << format_double(s.pose.y) << ',' << format_double(s.pose.theta) << '\n';
  }
  const double tangency = motion::max_tangency_error(samples);
  const double closure = distance(samples.front().pose, samples.back().pose);
  ctx.out << "samples = " << samples.size() << '\n'
          << "max_tangency_error = " << format_double(tangency) << '\n'
          << "closure_error = " << format_double(closure) << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// simulate / localize

struct SimOptions {
  std::string scenario;
  std::string map;
  std::string nav_map;
  std::string world;
  std::string markers;
  std::vector<double> start{0.0, 0.0, 0.0};
  double dt = 0.1;
  std::string scans = "merged";
  double noise_trans = 0.0;
  double noise_rot = 0.0;
  double noise_scale = 0.0;
  double noise_range = 0.0;
  bool localize = true;
};

struct LocalizeOptions {
  std::string log;
  std::string map;
  std::string source = "merged";
  int particles = 500;
  double init_sigma_xy = 0.5;
  double init_sigma_theta_deg = 20.0;
  bool serial = false;
};

const std::map<std::string, sim::ScanLogging> kScanLogging{
    {"none", sim::ScanLogging::None},
    {"merged", sim::ScanLogging::Merged},
    {"all", sim::ScanLogging::All}};

const std::map<std::string, sim::ScanSource> kScanSource{
    {"merged", sim::ScanSource::Merged},
    {"base", sim::ScanSource::BaseOnly},
    {"depth", sim::ScanSource::DepthOnly}};

void write_localization(const Context& ctx, const sim::ReplayResult& r, std::ostream& report) {
  std::ofstream csv = open_out(ctx.path("localization.csv"));
  csv << "t,true_x,true_y,true_theta,est_x,est_y,est_theta,position_error,heading_error\n";
  for (const auto& s : r.timeline) {
    csv << format_double(s.t) << ',' << format_double(s.truth.x) << ','
        << format_double(s.truth.y) << ',' << format_double(s.truth.theta) << ','
        << format_double(s.estimate.x) << ',' << format_double(s.estimate.y) << ','
        << format_double(s.estimate.theta) << ',' << format_double(s.position_error) << ','
        << format_double(s.heading_error) << '\n';
  }
  const auto& last = r.final_sample();
  report << "localization_updates = " << r.timeline.size() << '\n'
         << "localization_resamples = " << r.resamples << '\n'
         << "final_position_error = " << format_double(last.position_error) << '\n'
         << "final_heading_error_deg = " << format_double(rad2deg(last.heading_error)) << '\n';
}

sim::ReplayOptions replay_options(const LocalizeOptions& o, std::uint64_t seed) {
  sim::ReplayOptions r;
  r.mcl.particle_count = o.particles;
  r.mcl.rng_seed = seed;
  r.init_sigma_xy = o.init_sigma_xy;
  r.init_sigma_theta = deg2rad(o.init_sigma_theta_deg);
  r.source = kScanSource.at(o.source);
  r.exec = o.serial ? Execution::Serial : Execution::Parallel;
  return r;
}

int simulate(const Context& ctx, const SimOptions& o) {
  const auto script = sim::parse_scenario(fs::path(o.scenario));
  sim::World world;
  world.map = read_map(o.map);
  world.robot = pose_from(o.start);
  if (!o.world.empty()) {
    world.obstacles = sim::read_obstacles(fs::path(o.world));
  }
  sim::SimConfig cfg;
  cfg.noise = {o.noise_trans, o.noise_rot, o.noise_scale, o.noise_range, ctx.globals.seed};
  cfg.noise.validate();

  sim::ScenarioOptions so;
  so.dt = o.dt;
  so.scans = kScanLogging.at(o.scans);
  // The robot's own map: what it navigates and localizes against.
  const OccupancyGrid belief = o.nav_map.empty() ? world.map : read_map(o.nav_map);
  if (!o.markers.empty()) {
    so.markers = planning::read_markers(fs::path(o.markers));
    so.nav_map = belief;
  }
  sim::Simulator simulator(std::move(world), cfg);
  ctx.info("simulate: " + std::to_string(script.size()) + " events");
  const sim::ScenarioResult res = sim::run_scenario(script, simulator, so);
  {
    std::ofstream log = open_out(ctx.path("log.csv"));
    sim::write_log_csv(log, res.log);
  }

  std::ostringstream report;
  report << "sim_time = " << format_double(simulator.time()) << '\n'
         << "final_pose = " << pose_text(simulator.pose()) << '\n';
  std::size_t reached = 0;
  std::size_t gotos = 0;
  for (const auto& e : script) {
    if (e.kind != sim::EventKind::Goto) {
      continue;
    }
    const planning::NavResult& n = res.navigations.at(gotos++);
    reached += n.outcome == planning::NavOutcome::Reached;
    report << "navigation " << e.name << " = " << planning::to_string(n.outcome) << ' '
           << pose_text(n.final_pose) << '\n';
  }
  if (gotos > 0) {
    report << (reached == gotos ? "tour complete" : "tour incomplete") << ", " << reached << " of "
           << gotos << " markers reached\n";
  }
  if (o.localize && so.scans != sim::ScanLogging::None) {
    LocalizeOptions lo;
    ctx.info("simulate: localizing");
    write_localization(ctx, sim::replay_localization(res.log, belief,
                                                     replay_options(lo, ctx.globals.seed)),
                       report);
  }
  ctx.out << report.str();
  open_out(ctx.path("report.txt")) << report.str();
  return reached == gotos ? kSuccess : kDomainFailure;
}

int localize(const Context& ctx, const LocalizeOptions& o) {
  std::ifstream is = open_in(o.log);
  const auto log = sim::read_log_csv(is);
  const OccupancyGrid map = read_map(o.map);
  std::ostringstream report;
  write_localization(ctx, sim::replay_localization(log, map, replay_options(o, ctx.globals.seed)),
                     report);
  ctx.out << report.str();
  open_out(ctx.path("report.txt")) << report.str();
  return kSuccess;
}

// ---------------------------------------------------------------------------
// tour

struct TourOptions {
  bool mock = false;
  std::string devices;
  std::string map;
  std::string nav_map;
  std::string world;
  std::string markers;
  std::vector<double> start;
  std::vector<std::string> fail;
  std::vector<std::string> down;
  int event_port = 0;
  double timeout = 120.0;
  bool audience = true;
};

std::unique_ptr<tour::SimNavigation> tour_navigation(const TourOptions& o, std::uint64_t seed) {
  if (o.map.empty()) {
    scenes::Scene scene = scenes::tour_scene();
    if (!o.start.empty()) {
      scene.world.robot = pose_from(o.start);
    }
    scene.sim_config.noise.rng_seed = seed;
    return std::make_unique<tour::SimNavigation>(scene.world, scene.nav_map, scene.markers,
                                                 scene.sim_config);
  }
  if (o.markers.empty()) {
    throw UsageError("tour: --markers is required with --map");
  }
  sim::World world;
  world.map = read_map(o.map);
  world.robot = o.start.empty() ? Pose2D{} : pose_from(o.start);
  if (!o.world.empty()) {
    world.obstacles = sim::read_obstacles(fs::path(o.world));
  }
  OccupancyGrid nav_map = o.nav_map.empty() ? world.map : read_map(o.nav_map);
  sim::SimConfig cfg;
  cfg.noise.rng_seed = seed;
  return std::make_unique<tour::SimNavigation>(std::move(world), std::move(nav_map),
                                               planning::read_markers(fs::path(o.markers)), cfg);
}

int run_tour(const Context& ctx, const TourOptions& o) {
  tour::TourConfig cfg;
  if (!o.devices.empty()) {
    std::ifstream is = open_in(o.devices);
    cfg = tour::read_tour_config(is);
  } else if (!o.mock) {
    throw UsageError("tour: give --devices or --mock");
  }
  cfg.run_timeout_s = o.timeout;
  if (!o.audience) {
    cfg.audience.clear();
  }

  tour::EventQueue queue;
  tour::EventServer events(queue, o.event_port);
  ctx.info("tour: events at " + events.url());
  std::optional<tour::MockFleet> fleet;
  if (o.mock) {
    fleet = tour::start_mock_fleet(cfg.bindings, events.url(), [&](tour::MockConfig& m) {
      m.fail_all = std::find(o.fail.begin(), o.fail.end(), m.name) != o.fail.end();
    });
    for (const std::string& name : o.down) {
      fleet->server(name).stop();
    }
    cfg.devices = fleet->endpoints();
  } else if (!o.fail.empty() || !o.down.empty()) {
    throw UsageError("tour: --fail and --down need --mock");
  }

  auto nav = tour_navigation(o, ctx.globals.seed);
  tour::TourRunner runner(cfg, *nav, queue);
  const tour::TourReport rep = runner.run();
  events.stop();
  if (fleet) {
    fleet->stop();
  }

  {
    std::ofstream log = open_out(ctx.path("transitions.log"));
    tour::write_transition_log(log, rep.transitions);
  }
  if (fleet) {
    std::ofstream cmds = open_out(ctx.path("commands.log"));
    for (const std::string& line : fleet->recorder->lines()) {
      cmds << line << '\n';
    }
  }
  std::ostringstream report;
  report << "outcome = " << tour::to_string(rep.outcome) << '\n'
         << "final_state = " << tour::to_string(rep.final_state) << '\n';
  for (const auto& [marker, n] : rep.navigations) {
    report << "navigation " << marker << " = " << planning::to_string(n.outcome) << ' '
           << pose_text(n.final_pose) << '\n';
  }
  if (rep.connectivity) {
    for (const auto& d : rep.connectivity->devices) {
      report << "device " << d.name << " = " << (d.up ? "up" : "down") << '\n';
    }
  }
  for (const auto& a : rep.retry_trail) {
    report << "retry " << a.device << ' ' << a.action << " attempt " << a.attempt << ": "
           << a.error << '\n';
  }
  for (const std::string& w : rep.warnings) {
    report << "warning " << w << '\n';
  }
  ctx.out << report.str();
  open_out(ctx.path("tour_report.txt")) << report.str();

  switch (rep.outcome) {
    case tour::TourOutcome::Done:
      ctx.out << "tour complete\n";
      return kSuccess;
    case tour::TourOutcome::Blocked:
      ctx.out << "blocked at " << tour::to_string(rep.final_state) << '\n';
      return kDomainFailure;
    case tour::TourOutcome::Fault:
      ctx.out << "tour fault\n";
      return kDomainFailure;
    case tour::TourOutcome::Timeout:
      ctx.out << "tour timed out in " << tour::to_string(rep.final_state) << '\n';
      return kDomainFailure;
  }
  return kDomainFailure;
}

// ---------------------------------------------------------------------------
// fixtures

struct FixtureOptions {
  std::size_t cloud_points = 50000;
};

std::string quoted(const fs::path& p) { return "\"" + p.generic_string() + "\""; }

void write_scene(const Context& ctx, const scenes::Scene& scene) {
  const fs::path dir = ctx.path(scene.name);
  fs::create_directories(dir);
  write_map(scene.world.map, dir / "world");
  write_map(scene.nav_map, dir / "nav");
  {
    std::ofstream os = open_out(dir / "obstacles.txt");
    sim::write_obstacles(os, scene.world.obstacles);
  }
  {
    std::ofstream os = open_out(dir / "markers.txt");
    planning::write_markers(os, scene.markers);
  }
  open_out(dir / "scenario.txt") << scene.script;

  const sim::NoiseModel& n = scene.sim_config.noise;
  const Pose2D& r = scene.world.robot;
  std::ofstream ini = open_out(dir / "simulate.ini");
  ini << "seed = " << n.rng_seed << '\n'
      << "[simulate]\n"
      << "scenario = " << quoted(dir / "scenario.txt") << '\n'
      << "map = " << quoted(dir / "world") << '\n'
      << "nav-map = " << quoted(dir / "nav") << '\n'
      << "world = " << quoted(dir / "obstacles.txt") << '\n'
      << "markers = " << quoted(dir / "markers.txt") << '\n'
      << "start = [" << format_double(r.x) << ", " << format_double(r.y) << ", "
      << format_double(r.theta) << "]\n"
      << "noise-trans = " << format_double(n.odom_translation_std) << '\n'
      << "noise-rot = " << format_double(n.odom_rotation_std) << '\n'
      << "noise-scale = " << format_double(n.odom_scale_error) << '\n'
      << "noise-range = " << format_double(n.range_std) << '\n';
}

int fixtures(const Context& ctx, const FixtureOptions& o) {
  for (const auto& make : {scenes::couch_scene, scenes::tour_scene, scenes::corridor_scene,
                           scenes::clearing_scene}) {
    const scenes::Scene scene = make();
    write_scene(ctx, scene);
    ctx.out << "scene " << scene.name << " -> " << ctx.path(scene.name).generic_string() << '\n';
  }
  const PointCloud cloud =
      scenes::floor_plan_cloud(scenes::lab_floor_plan(), o.cloud_points, ctx.globals.seed);
  std::ofstream os = open_out(ctx.path("lab_cloud.xyz"));
  mapgen::write_point_cloud(os, cloud);
  ctx.out << "cloud " << cloud.size() << " points -> "
          << ctx.path("lab_cloud.xyz").generic_string() << '\n';
  return kSuccess;
}

/// Resolved configuration of the run: the globals plus every option of the subcommand.
void write_manifest(const Context& ctx, const CLI::App& sub) {
  std::ofstream m = open_out(ctx.path("manifest.txt"));
  m << "subcommand = " << sub.get_name() << '\n'
    << "seed = " << ctx.globals.seed << '\n'
    << "out = " << ctx.globals.out << '\n'
    << "verbosity = " << ctx.globals.verbosity << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr()) {
      continue;
    }
    std::string value = opt->get_default_str();
    if (opt->count() > 0) {
      value.clear();
      for (const std::string& r : opt->results()) {
        value += (value.empty() ? "" : " ") + r;
      }
    }
    m << sub.get_name() << '.' << opt->get_single_name() << " = " << value << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Omnidirectional service-robot navigation toolkit"};
  app.name("omninav");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.fallthrough();  // global flags may follow the subcommand

  Globals g;
  app.set_config("--config", "", "Flat 'key = value' file; subcommand keys go under [name]");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");
  int verbose = 0;
  app.add_flag("-v,--verbose", verbose, "More diagnostics (repeatable)");

  MapExtractOptions mx;
  auto* c_map = app.add_subcommand("map-extract", "Point cloud to occupancy map");
  c_map->add_option("cloud", mx.cloud, "ASCII x y z cloud")->required()->check(CLI::ExistingFile);
  c_map->add_option("--name", mx.name, "Output map stem");
  c_map->add_option("--resolution", mx.cfg.resolution);
  c_map->add_option("--z-min", mx.cfg.z_min);
  c_map->add_option("--z-max", mx.cfg.z_max);
  c_map->add_option("--min-cluster", mx.cfg.denoise_min_cluster);
  c_map->add_option("--seed-margin", mx.cfg.seed_margin);
  c_map->add_flag("--serial", mx.serial, "Use the serial reference kernels");

  ControllerDemoOptions cd;
  auto* c_demo = app.add_subcommand("controller-demo", "Circle drive through the wheel controller");
  c_demo->add_option("--radius", cd.radius);
  c_demo->add_option("--speed", cd.speed)->default_str(format_double(cd.speed));
  c_demo->add_option("--duration", cd.duration);
  c_demo->add_option("--dt", cd.dt);

  SimOptions so;
  auto* c_sim = app.add_subcommand("simulate", "Run a scenario script in the simulator");
  c_sim->add_option("--scenario", so.scenario)->required()->check(CLI::ExistingFile);
  c_sim->add_option("--map", so.map, "World map stem (.pgm/.yaml)")->required();
  c_sim->add_option("--nav-map", so.nav_map, "Navigation map stem (defaults to --map)");
  c_sim->add_option("--world", so.world, "Obstacle file")->check(CLI::ExistingFile);
  c_sim->add_option("--markers", so.markers, "Marker file")->check(CLI::ExistingFile);
  c_sim->add_option("--start", so.start, "Initial pose x y theta")->expected(3);
  c_sim->add_option("--dt", so.dt);
  c_sim->add_option("--scans", so.scans)->check(CLI::IsMember({"none", "merged", "all"}));
  c_sim->add_option("--noise-trans", so.noise_trans);
  c_sim->add_option("--noise-rot", so.noise_rot);
  c_sim->add_option("--noise-scale", so.noise_scale);
  c_sim->add_option("--noise-range", so.noise_range);
  c_sim->add_flag("--localize,!--no-localize", so.localize, "Replay MCL over the run")
      ->default_str("true");

  LocalizeOptions lo;
  auto* c_loc = app.add_subcommand("localize", "Replay MCL over a simulator log");
  c_loc->add_option("--log", lo.log)->required()->check(CLI::ExistingFile);
  c_loc->add_option("--map", lo.map, "Map stem")->required();
  c_loc->add_option("--source", lo.source)->check(CLI::IsMember({"merged", "base", "depth"}));
  c_loc->add_option("--particles", lo.particles)->check(CLI::PositiveNumber);
  c_loc->add_option("--init-sigma-xy", lo.init_sigma_xy);
  c_loc->add_option("--init-sigma-theta", lo.init_sigma_theta_deg, "Degrees");
  c_loc->add_flag("--serial", lo.serial, "Use the serial reference kernels");

  TourOptions to;
  auto* c_tour = app.add_subcommand("tour", "Run the guided tour");
  c_tour->add_flag("--mock", to.mock, "Spawn local mock devices");
  c_tour->add_option("--devices", to.devices, "Tour config file")->check(CLI::ExistingFile);
  c_tour->add_option("--map", to.map, "World map stem (built-in tour scene when absent)");
  c_tour->add_option("--nav-map", to.nav_map);
  c_tour->add_option("--world", to.world)->check(CLI::ExistingFile);
  c_tour->add_option("--markers", to.markers)->check(CLI::ExistingFile);
  c_tour->add_option("--start", to.start, "Initial pose x y theta")->expected(3);
  c_tour->add_option("--fail", to.fail, "Mock devices that reject every command");
  c_tour->add_option("--down", to.down, "Mock devices that are not reachable");
  c_tour->add_option("--event-port", to.event_port);
  c_tour->add_option("--timeout", to.timeout, "Seconds");
  c_tour->add_flag("--audience,!--no-audience", to.audience, "Simulate visitor input")
      ->default_str("true");

  FixtureOptions fo;
  auto* c_fix = app.add_subcommand("fixtures", "Write the reference scenes and the lab cloud");
  c_fix->add_option("--cloud-points", fo.cloud_points);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }
  g.verbosity = verbose;
  const Context ctx{g, out, err};

  CLI::App* sub = app.get_subcommands().front();
  try {
    fs::create_directories(g.out);
    write_manifest(ctx, *sub);
    if (sub == c_map) {
      return map_extract(ctx, mx);
    }
    if (sub == c_demo) {
      return controller_demo(ctx, cd);
    }
    if (sub == c_sim) {
      return simulate(ctx, so);
    }
    if (sub == c_loc) {
      return localize(ctx, lo);
    }
    if (sub == c_tour) {
      return run_tour(ctx, to);
    }
    return fixtures(ctx, fo);
  } catch (const std::exception& e) {
    // Anything escaping a subcommand is bad input: unreadable or malformed files.
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

}  // namespace omninav::cli
