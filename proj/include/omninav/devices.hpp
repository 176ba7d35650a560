#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "omninav/tour.hpp"

// HTTP device protocol: JSON over HTTP/1.1.
//   GET  /health        -> {"status":"ok"}
//   GET  /media         -> {"media":[ids]}
//   POST /media/play    {"id":...}
//   POST /media/stop
//   POST /demo/start    {"id":...}
//   POST /demo/stop
//   POST /pick          {"item":...}
// Successful commands answer 2xx with {"ok":true}.
namespace omninav::tour {

struct DeviceEndpoint {
  std::string name;
  std::string base_url;  // http://host:port
  DeviceKind kind = DeviceKind::Robot;

  /// Throws std::invalid_argument for an empty name or a URL that is not http://host:port.
  void validate() const;
};

/// Throws when names repeat or any endpoint is invalid.
void validate_endpoints(const std::vector<DeviceEndpoint>& devices);

std::string_view to_string(DeviceKind kind);
DeviceKind device_kind_from_string(std::string_view s);

class DeviceError : public std::runtime_error {
 public:
  enum class Kind { Transport, Timeout, Status, Malformed };

  DeviceError(Kind kind, int status, const std::string& what)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

struct Ack {
  int status = 0;
  std::string body;
};

/// One HTTP request for `action` (Play, StopMedia, ListMedia, StartDemo, StopDemo, Pick,
/// CheckConnectivity). Throws std::invalid_argument when the action does not fit the device
/// kind and DeviceError for timeouts, transport failures, non-2xx replies or bodies that
/// are not the expected JSON.
Ack device_command(const DeviceEndpoint& ep, const Action& action, double timeout_s);

struct RetryPolicy {
  int max_attempts = 3;
  double timeout_s = 1.0;
};

struct AttemptRecord {
  std::string device;
  std::string action;
  int attempt = 0;
  std::string error;
};

/// device_command with retries. Every failed attempt is appended to `trail`; the last
/// DeviceError is rethrown after max_attempts failures.
Ack device_command_with_retry(const DeviceEndpoint& ep, const Action& action,
                              const RetryPolicy& policy, std::vector<AttemptRecord>* trail);

struct ConnectivityReport {
  struct Entry {
    std::string name;
    bool up = false;
    std::string detail;
  };
  std::vector<Entry> devices;

  bool all_up() const;
  std::vector<std::string> down() const;
};

/// GET /health on every device (in order). Up iff HTTP 200 within the timeout.
ConnectivityReport connectivity_check(const std::vector<DeviceEndpoint>& devices,
                                      double timeout_s);

// ---------------------------------------------------------------------------
// Mock devices

/// Shared, ordered record of commands received by any mock.
class CommandRecorder {
 public:
  struct Entry {
    std::string device;
    std::string action;  // health, list_media, play, stop, start_demo, stop_demo, pick
    std::string arg;
    int status = 0;
  };

  void add(Entry e);
  std::vector<Entry> entries() const;
  /// "device action[ arg]" per entry.
  std::vector<std::string> lines() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<Entry> entries_;
};

struct MockConfig {
  std::string name;
  DeviceKind kind = DeviceKind::Robot;
  std::vector<std::string> media;  // television
  std::vector<std::string> demos;  // robot
  std::chrono::milliseconds latency{0};
  int fail_first = 0;        // the first n commands (not health checks) answer 503
  bool fail_all = false;     // every command answers 503
  std::chrono::milliseconds media_duration{100};
  std::chrono::milliseconds demo_duration{100};
  /// Where video_done / demo_done go: POST <notify_url>/event {"name":...}.
  std::string notify_url;
  /// In-process alternative to notify_url; used when set.
  std::function<void(const std::string& event)> notify;
};

class MockDeviceServer {
 public:
  MockDeviceServer(MockConfig cfg, std::shared_ptr<CommandRecorder> recorder = nullptr);
  ~MockDeviceServer();
  MockDeviceServer(const MockDeviceServer&) = delete;
  MockDeviceServer& operator=(const MockDeviceServer&) = delete;

  /// Binds 127.0.0.1:port (0 picks a free port) and serves on a background thread.
  /// Throws std::runtime_error when the port is unavailable.
  void start(int port = 0);
  void stop();
  bool running() const;
  int port() const { return port_; }
  std::string base_url() const;
  DeviceEndpoint endpoint() const;

  std::vector<CommandRecorder::Entry> commands() const;
  std::string playing() const;
  std::string running_demo() const;
  std::vector<std::string> picked() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace omninav::tour
