#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "omninav/devices.hpp"
#include "omninav/planning.hpp"
#include "omninav/sim.hpp"
#include "omninav/tour.hpp"

namespace omninav::tour {

/// Thread-safe FIFO of tour events.
class EventQueue {
 public:
  void push(Event e);
  std::optional<Event> pop_for(std::chrono::milliseconds wait);
  bool empty() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> events_;
};

/// POST /event {"name":"button","arg":"next"} (or {"name":"button(next)"}) feeds the queue.
class EventServer {
 public:
  explicit EventServer(EventQueue& queue, int port = 0);
  ~EventServer();
  EventServer(const EventServer&) = delete;
  EventServer& operator=(const EventServer&) = delete;

  int port() const { return port_; }
  std::string url() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

class NavigationService {
 public:
  virtual ~NavigationService() = default;
  virtual planning::NavResult navigate(const std::string& marker) = 0;
};

/// Drives the simulator with the navigator; the controller acts on the true pose.
class SimNavigation : public NavigationService {
 public:
  SimNavigation(sim::World world, OccupancyGrid nav_map, std::vector<planning::MarkerSpec> markers,
                sim::SimConfig sim_cfg = {}, planning::NavigatorConfig nav_cfg = {});

  planning::NavResult navigate(const std::string& marker) override;
  const sim::Simulator& simulator() const { return sim_; }
  const planning::Navigator& navigator() const { return navigator_; }

 private:
  sim::Simulator sim_;
  sim::SimRobot robot_;
  planning::Navigator navigator_;
};

/// An audience member's input, posted once the tour first enters `on_entry` and the robot
/// has finished whatever it was doing.
struct AudienceCue {
  State on_entry = State::IdleAtEntry;
  Event event;
};

/// start at the entrance, next after the demo, two picks and finish at the picking station.
std::vector<AudienceCue> default_audience();

struct TourConfig {
  std::vector<DeviceEndpoint> devices;
  Bindings bindings;
  RetryPolicy retry;
  double connectivity_timeout_s = 1.0;
  double run_timeout_s = 120.0;
  std::vector<AudienceCue> audience = default_audience();
  std::chrono::milliseconds audience_delay{20};
  bool stop_when_blocked = true;
};

/// Flat "key = value" file:
///   device.<name> = robot|tv <url>
///   bind.<field> = <value>           (fields of Bindings, e.g. bind.harvey_tv = tv1)
///   retry.max_attempts, retry.timeout_s, connectivity_timeout_s, run_timeout_s
TourConfig read_tour_config(std::istream& is);
void write_tour_config(std::ostream& os, const TourConfig& cfg);

struct TransitionRecord {
  State from = State::IdleAtEntry;
  std::string event;
  State to = State::IdleAtEntry;
};

struct IssuedCommand {
  State state = State::IdleAtEntry;  // state when the request went out
  Action action;
  bool ok = false;
};

enum class TourOutcome { Done, Fault, Blocked, Timeout };
std::string_view to_string(TourOutcome o);

struct TourReport {
  TourOutcome outcome = TourOutcome::Timeout;
  State final_state = State::IdleAtEntry;
  std::vector<TransitionRecord> transitions;
  std::vector<std::string> warnings;
  std::vector<AttemptRecord> retry_trail;
  std::vector<IssuedCommand> commands;
  std::optional<ConnectivityReport> connectivity;
  std::vector<std::pair<std::string, planning::NavResult>> navigations;
};

/// The four demo devices from `bindings` as local mocks, all reporting to `notify_url`.
/// `tweak` may adjust each config before its server starts.
struct MockFleet {
  std::shared_ptr<CommandRecorder> recorder = std::make_shared<CommandRecorder>();
  std::vector<std::unique_ptr<MockDeviceServer>> servers;

  std::vector<DeviceEndpoint> endpoints() const;
  MockDeviceServer& server(const std::string& name);
  void stop();
};

MockFleet start_mock_fleet(const Bindings& bindings, const std::string& notify_url,
                           const std::function<void(MockConfig&)>& tweak = {});

/// "FROM,event,TO" per line.
void write_transition_log(std::ostream& os, const std::vector<TransitionRecord>& transitions);

/// Single-writer event loop. Actions run in order on a worker thread so slow devices never
/// block event intake; their outcomes come back as events.
class TourRunner {
 public:
  TourRunner(TourConfig cfg, NavigationService& nav, EventQueue& queue);

  /// Positions the robot at the entry marker, then runs until DONE, FAULT, a blocked
  /// connectivity check or the run timeout.
  TourReport run();

 private:
  struct Worker;

  TourConfig cfg_;
  NavigationService& nav_;
  EventQueue& queue_;
};

}  // namespace omninav::tour
