#include "omninav/tour_runner.hpp"

#include <httplib.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

#include "json.hpp"
#include "omninav/text.hpp"

namespace omninav::tour {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Event intake

void EventQueue::push(Event e) {
  {
    std::lock_guard lock(mu_);
    events_.push_back(std::move(e));
  }
  cv_.notify_one();
}

std::optional<Event> EventQueue::pop_for(std::chrono::milliseconds wait) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, wait, [this] { return !events_.empty(); })) {
    return std::nullopt;
  }
  Event e = std::move(events_.front());
  events_.pop_front();
  return e;
}

bool EventQueue::empty() const {
  std::lock_guard lock(mu_);
  return events_.empty();
}

struct EventServer::Impl {
  httplib::Server server;
  std::thread listener;
  bool running = false;
};

EventServer::EventServer(EventQueue& queue, int port) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/event", [&queue](const httplib::Request& req, httplib::Response& res) {
    try {
      const json body = json::parse(req.body);
      if (!body.is_object() || !body.contains("name") || !body["name"].is_string()) {
        throw std::invalid_argument("body needs a string 'name'");
      }
      Event e = parse_event(body["name"].get<std::string>() +
                            (body.contains("arg") && body["arg"].is_string()
                                 ? "(" + body["arg"].get<std::string>() + ")"
                                 : ""));
      queue.push(std::move(e));
      res.set_content(json{{"ok", true}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"ok", false}, {"error", e.what()}}.dump(), "application/json");
    }
  });
  port_ = port == 0 ? impl_->server.bind_to_any_port("127.0.0.1")
                    : (impl_->server.bind_to_port("127.0.0.1", port) ? port : -1);
  if (port_ <= 0) {
    throw std::runtime_error("event server: cannot bind port " + std::to_string(port));
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->running = true;
}

EventServer::~EventServer() { stop(); }

std::string EventServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void EventServer::stop() {
  if (!impl_->running) {
    return;
  }
  impl_->server.stop();
  if (impl_->listener.joinable()) {
    impl_->listener.join();
  }
  impl_->running = false;
}

// ---------------------------------------------------------------------------
// Navigation

SimNavigation::SimNavigation(sim::World world, OccupancyGrid nav_map,
                             std::vector<planning::MarkerSpec> markers, sim::SimConfig sim_cfg,
                             planning::NavigatorConfig nav_cfg)
    : sim_(std::move(world), sim_cfg),
      robot_(sim_),
      navigator_(robot_, std::move(nav_map), std::move(markers), nav_cfg) {}

planning::NavResult SimNavigation::navigate(const std::string& marker) {
  return navigator_.navigate_to_marker(marker);
}

std::vector<AudienceCue> default_audience() {
  return {
      {State::IdleAtEntry, {EventType::Button, "start"}},
      {State::WaitNext1, {EventType::Button, "next"}},
      {State::CartmanPicking, {EventType::ItemSelected, "item_3"}},
      {State::CartmanPicking, {EventType::ItemSelected, "item_7"}},
      {State::CartmanPicking, {EventType::Finish, ""}},
  };
}

std::vector<DeviceEndpoint> MockFleet::endpoints() const {
  std::vector<DeviceEndpoint> out;
  for (const auto& s : servers) {
    out.push_back(s->endpoint());
  }
  return out;
}

MockDeviceServer& MockFleet::server(const std::string& name) {
  for (const auto& s : servers) {
    if (s->endpoint().name == name) {
      return *s;
    }
  }
  throw std::out_of_range("no mock device '" + name + "'");
}

void MockFleet::stop() {
  for (const auto& s : servers) {
    s->stop();
  }
}

MockFleet start_mock_fleet(const Bindings& b, const std::string& notify_url,
                           const std::function<void(MockConfig&)>& tweak) {
  MockFleet fleet;
  std::vector<MockConfig> configs(4);
  configs[0].name = b.harvey;
  configs[0].demos = {b.harvey_demo};
  configs[1].name = b.cartman;
  configs[2].name = b.harvey_tv;
  configs[2].kind = DeviceKind::Television;
  configs[2].media = {b.harvey_video, b.cartman_video};
  configs[3].name = b.cartman_tv;
  configs[3].kind = DeviceKind::Television;
  configs[3].media = {b.harvey_video, b.cartman_video};
  for (MockConfig& c : configs) {
    c.notify_url = notify_url;
    if (tweak) {
      tweak(c);
    }
    auto server = std::make_unique<MockDeviceServer>(c, fleet.recorder);
    server->start(0);
    fleet.servers.push_back(std::move(server));
  }
  return fleet;
}

// ---------------------------------------------------------------------------
// Config

namespace {

using BindingField = std::string Bindings::*;

constexpr std::pair<std::string_view, BindingField> kBindingFields[] = {
    {"harvey", &Bindings::harvey},
    {"cartman", &Bindings::cartman},
    {"harvey_tv", &Bindings::harvey_tv},
    {"cartman_tv", &Bindings::cartman_tv},
    {"harvey_video", &Bindings::harvey_video},
    {"cartman_video", &Bindings::cartman_video},
    {"harvey_demo", &Bindings::harvey_demo},
    {"entry_marker", &Bindings::entry_marker},
    {"harvey_marker", &Bindings::harvey_marker},
    {"cartman_marker", &Bindings::cartman_marker},
    {"meeting_marker", &Bindings::meeting_marker},
};

}  // namespace

TourConfig read_tour_config(std::istream& is) {
  TourConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view body = text::strip_comment(line);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    const std::string where = "tour config line " + std::to_string(lineno) + ": ";
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(where + "expected 'key = value'");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string_view value = text::trim(body.substr(eq + 1));
    try {
      if (key.rfind("device.", 0) == 0) {
        const auto f = text::split_ws(value);
        if (f.size() != 2) {
          throw std::invalid_argument("device needs '<robot|tv> <url>'");
        }
        DeviceEndpoint ep{key.substr(7), std::string(f[1]), device_kind_from_string(f[0])};
        ep.validate();
        cfg.devices.push_back(std::move(ep));
      } else if (key.rfind("bind.", 0) == 0) {
        const std::string field = key.substr(5);
        const auto it = std::find_if(std::begin(kBindingFields), std::end(kBindingFields),
                                     [&](const auto& p) { return p.first == field; });
        if (it == std::end(kBindingFields)) {
          throw std::invalid_argument("unknown binding '" + field + "'");
        }
        cfg.bindings.*(it->second) = std::string(value);
      } else if (key == "retry.max_attempts") {
        cfg.retry.max_attempts = static_cast<int>(text::parse_int(value));
        if (cfg.retry.max_attempts < 1) {
          throw std::invalid_argument("retry.max_attempts must be >= 1");
        }
      } else if (key == "retry.timeout_s") {
        cfg.retry.timeout_s = text::parse_double(value);
      } else if (key == "connectivity_timeout_s") {
        cfg.connectivity_timeout_s = text::parse_double(value);
      } else if (key == "run_timeout_s") {
        cfg.run_timeout_s = text::parse_double(value);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  validate_endpoints(cfg.devices);
  return cfg;
}

void write_tour_config(std::ostream& os, const TourConfig& cfg) {
  for (const DeviceEndpoint& d : cfg.devices) {
    os << "device." << d.name << " = " << to_string(d.kind) << ' ' << d.base_url << '\n';
  }
  for (const auto& [name, field] : kBindingFields) {
    os << "bind." << name << " = " << cfg.bindings.*field << '\n';
  }
  os << "retry.max_attempts = " << cfg.retry.max_attempts << '\n'
     << "retry.timeout_s = " << text::format_double(cfg.retry.timeout_s) << '\n'
     << "connectivity_timeout_s = " << text::format_double(cfg.connectivity_timeout_s) << '\n'
     << "run_timeout_s = " << text::format_double(cfg.run_timeout_s) << '\n';
}

std::string_view to_string(TourOutcome o) {
  switch (o) {
    case TourOutcome::Done:
      return "done";
    case TourOutcome::Fault:
      return "fault";
    case TourOutcome::Blocked:
      return "blocked";
    case TourOutcome::Timeout:
      return "timeout";
  }
  return "unknown";
}

void write_transition_log(std::ostream& os, const std::vector<TransitionRecord>& transitions) {
  for (const TransitionRecord& t : transitions) {
    os << to_string(t.from) << ',' << t.event << ',' << to_string(t.to) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Runner

struct TourRunner::Worker {
  const TourConfig& cfg;
  NavigationService& nav;
  EventQueue& events;
  TourReport& report;
  std::mutex& report_mu;
  const std::atomic<State>& state;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Action> actions;
  bool stopping = false;
  std::atomic<int> outstanding{0};
  std::thread thread;

  Worker(const TourConfig& c, NavigationService& n, EventQueue& e, TourReport& r, std::mutex& m,
         const std::atomic<State>& s)
      : cfg(c), nav(n), events(e), report(r), report_mu(m), state(s) {
    thread = std::thread([this] { loop(); });
  }

  ~Worker() {
    {
      std::lock_guard lock(mu);
      stopping = true;
      actions.clear();
    }
    cv.notify_all();
    thread.join();
  }

  void enqueue(Action a) {
    ++outstanding;
    {
      std::lock_guard lock(mu);
      actions.push_back(std::move(a));
    }
    cv.notify_one();
  }

  void drop_pending() {
    std::lock_guard lock(mu);
    outstanding -= static_cast<int>(actions.size());
    actions.clear();
  }

  bool idle() const { return outstanding.load() == 0; }

  void loop() {
    while (true) {
      Action a;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [this] { return stopping || !actions.empty(); });
        if (stopping) {
          return;
        }
        a = std::move(actions.front());
        actions.pop_front();
      }
      execute(a);
      --outstanding;
    }
  }

  void issued(const Action& a, bool ok) {
    std::lock_guard lock(report_mu);
    report.commands.push_back({state.load(), a, ok});
  }

  void execute(const Action& a) {
    switch (a.type) {
      case ActionType::CheckConnectivity: {
        ConnectivityReport rep = connectivity_check(cfg.devices, cfg.connectivity_timeout_s);
        for (const auto& d : rep.devices) {
          issued({ActionType::CheckConnectivity, d.name, ""}, d.up);
        }
        const bool up = rep.all_up();
        std::string down;
        for (const std::string& n : rep.down()) {
          down += (down.empty() ? "" : " ") + n;
        }
        {
          std::lock_guard lock(report_mu);
          report.connectivity = std::move(rep);
        }
        events.push(up ? Event{EventType::ConnectivityOk, ""}
                       : Event{EventType::ConnectivityDown, down});
        return;
      }
      case ActionType::Navigate: {
        planning::NavResult r;
        try {
          r = nav.navigate(a.target);
        } catch (const std::exception& e) {
          events.push({EventType::NavFailed, e.what()});
          return;
        }
        {
          std::lock_guard lock(report_mu);
          report.navigations.emplace_back(a.target, r);
        }
        events.push(r.outcome == planning::NavOutcome::Reached
                        ? Event{EventType::NavDone, ""}
                        : Event{EventType::NavFailed, std::string(planning::to_string(r.outcome))});
        return;
      }
      default:
        break;
    }
    const auto ep = std::find_if(cfg.devices.begin(), cfg.devices.end(),
                                 [&](const DeviceEndpoint& d) { return d.name == a.target; });
    if (ep == cfg.devices.end()) {
      issued(a, false);
      events.push({EventType::DeviceError, "unknown device " + a.target});
      return;
    }
    std::vector<AttemptRecord> trail;
    bool ok = false;
    std::string error;
    try {
      device_command_with_retry(*ep, a, cfg.retry, &trail);
      ok = true;
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(report_mu);
      report.retry_trail.insert(report.retry_trail.end(), trail.begin(), trail.end());
    }
    issued(a, ok);
    if (!ok) {
      events.push({EventType::DeviceError, error});
    }
  }
};

TourRunner::TourRunner(TourConfig cfg, NavigationService& nav, EventQueue& queue)
    : cfg_(std::move(cfg)), nav_(nav), queue_(queue) {
  validate_endpoints(cfg_.devices);
  if (cfg_.devices.empty()) {
    throw std::invalid_argument("tour: no devices configured");
  }
}

TourReport TourRunner::run() {
  TourReport report;
  std::mutex report_mu;
  std::atomic<State> state{State::IdleAtEntry};

  const planning::NavResult entry = nav_.navigate(cfg_.bindings.entry_marker);
  report.navigations.emplace_back(cfg_.bindings.entry_marker, entry);
  if (entry.outcome != planning::NavOutcome::Reached) {
    report.warnings.push_back("could not reach the entry marker");
    report.outcome = TourOutcome::Fault;
    report.final_state = State::Fault;
    return report;
  }

  const auto deadline =
      Clock::now() + std::chrono::milliseconds(static_cast<long long>(cfg_.run_timeout_s * 1e3));
  std::set<State> entered;
  std::deque<Event> cues;
  auto cue_time = Clock::now();
  auto enter = [&](State s) {
    if (!entered.insert(s).second) {
      return;
    }
    for (const AudienceCue& c : cfg_.audience) {
      if (c.on_entry == s) {
        cues.push_back(c.event);
      }
    }
    cue_time = Clock::now() + cfg_.audience_delay;
  };

  bool blocked = false;
  {
    Worker worker(cfg_, nav_, queue_, report, report_mu, state);
    enter(State::IdleAtEntry);
    while (true) {
      const State s = state.load();
      if (s == State::Done || s == State::Fault || blocked) {
        report.outcome = s == State::Done    ? TourOutcome::Done
                         : s == State::Fault ? TourOutcome::Fault
                                             : TourOutcome::Blocked;
        break;
      }
      const auto now = Clock::now();
      if (now > deadline) {
        report.outcome = TourOutcome::Timeout;
        break;
      }
      // The audience only acts once the robot has finished its current action.
      if (!cues.empty() && worker.idle() && queue_.empty() && now >= cue_time) {
        queue_.push(cues.front());
        cues.pop_front();
        cue_time = now + cfg_.audience_delay;
      }
      const std::optional<Event> ev = queue_.pop_for(std::chrono::milliseconds(5));
      if (!ev) {
        continue;
      }
      const StepOutcome out = tour_step(s, *ev, cfg_.bindings);
      if (!out.accepted) {
        std::lock_guard lock(report_mu);
        report.warnings.push_back("ignored " + ev->label() + " in " + std::string(to_string(s)));
        continue;
      }
      {
        std::lock_guard lock(report_mu);
        report.transitions.push_back({s, ev->label(), out.next});
        if (ev->type == EventType::DeviceError) {
          report.warnings.push_back("device error: " + ev->arg);
        }
      }
      state.store(out.next);
      if (out.next == State::Fault) {
        worker.drop_pending();
      }
      if (ev->type == EventType::ConnectivityDown && cfg_.stop_when_blocked) {
        std::lock_guard lock(report_mu);
        report.warnings.push_back("devices down: " + ev->arg);
        blocked = true;
      }
      for (const Action& a : out.actions) {
        worker.enqueue(a);
      }
      enter(out.next);
    }
  }
  report.final_state = state.load();
  return report;
}

}  // namespace omninav::tour
