#include "omninav/devices.hpp"

#include <httplib.h>

#include "json.hpp"
#include <regex>

namespace omninav::tour {

using nlohmann::json;

namespace {

const std::regex kUrl(R"(^http://[A-Za-z0-9.\-]+:[0-9]{1,5}/?$)");

void set_timeouts(httplib::Client& cli, double timeout_s) {
  const auto us = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
  cli.set_connection_timeout(us);
  cli.set_read_timeout(us);
  cli.set_write_timeout(us);
}

std::string trim_slash(std::string url) {
  while (!url.empty() && url.back() == '/') {
    url.pop_back();
  }
  return url;
}

json parse_body(const std::string& body, const std::string& where) {
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
    throw DeviceError(DeviceError::Kind::Malformed, 0, where + ": reply is not JSON");
  }
}

}  // namespace

void DeviceEndpoint::validate() const {
  if (name.empty()) {
    throw std::invalid_argument("device endpoint: empty name");
  }
  if (!std::regex_match(base_url, kUrl)) {
    throw std::invalid_argument("device endpoint '" + name + "': base_url '" + base_url +
                                "' is not http://host:port");
  }
}

void validate_endpoints(const std::vector<DeviceEndpoint>& devices) {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    devices[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (devices[j].name == devices[i].name) {
        throw std::invalid_argument("device endpoint: duplicate name '" + devices[i].name + "'");
      }
    }
  }
}

std::string_view to_string(DeviceKind kind) {
  return kind == DeviceKind::Robot ? "robot" : "tv";
}

DeviceKind device_kind_from_string(std::string_view s) {
  if (s == "robot") {
    return DeviceKind::Robot;
  }
  if (s == "tv" || s == "television") {
    return DeviceKind::Television;
  }
  throw std::invalid_argument("unknown device kind '" + std::string(s) + "'");
}

Ack device_command(const DeviceEndpoint& ep, const Action& action, double timeout_s) {
  ep.validate();
  if (!valid_for(action.type, ep.kind)) {
    throw std::invalid_argument("action " + std::string(to_string(action.type)) +
                                " is not valid for " + std::string(to_string(ep.kind)) + " '" +
                                ep.name + "'");
  }
  httplib::Client cli(trim_slash(ep.base_url));
  set_timeouts(cli, timeout_s);
  const std::string where = ep.name + " " + std::string(to_string(action.type));
  httplib::Result res;
  switch (action.type) {
    case ActionType::CheckConnectivity:
      res = cli.Get("/health");
      break;
    case ActionType::ListMedia:
      res = cli.Get("/media");
      break;
    case ActionType::Play:
      res = cli.Post("/media/play", json{{"id", action.arg}}.dump(), "application/json");
      break;
    case ActionType::StopMedia:
      res = cli.Post("/media/stop", "{}", "application/json");
      break;
    case ActionType::StartDemo:
      res = cli.Post("/demo/start", json{{"id", action.arg}}.dump(), "application/json");
      break;
    case ActionType::StopDemo:
      res = cli.Post("/demo/stop", "{}", "application/json");
      break;
    case ActionType::Pick:
      res = cli.Post("/pick", json{{"item", action.arg}}.dump(), "application/json");
      break;
    case ActionType::Navigate:
      throw std::invalid_argument("navigate is not a device action");
  }
  if (!res) {
    const httplib::Error err = res.error();
    const bool timed_out =
        err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
    throw DeviceError(timed_out ? DeviceError::Kind::Timeout : DeviceError::Kind::Transport, 0,
                      where + ": " + httplib::to_string(err));
  }
  if (res->status / 100 != 2) {
    throw DeviceError(DeviceError::Kind::Status, res->status,
                      where + ": HTTP " + std::to_string(res->status));
  }
  const json body = parse_body(res->body, where);
  bool well_formed = false;
  switch (action.type) {
    case ActionType::CheckConnectivity:
      well_formed = body.is_object() && body.value("status", "") == "ok";
      break;
    case ActionType::ListMedia:
      well_formed = body.is_object() && body.contains("media") && body["media"].is_array();
      break;
    default:
      well_formed = body.is_object() && body.contains("ok") && body["ok"] == true;
      break;
  }
  if (!well_formed) {
    throw DeviceError(DeviceError::Kind::Malformed, res->status,
                      where + ": unexpected reply " + res->body);
  }
  return {res->status, res->body};
}

Ack device_command_with_retry(const DeviceEndpoint& ep, const Action& action,
                              const RetryPolicy& policy, std::vector<AttemptRecord>* trail) {
  for (int attempt = 1;; ++attempt) {
    try {
      return device_command(ep, action, policy.timeout_s);
    } catch (const DeviceError& e) {
      if (trail != nullptr) {
        trail->push_back({ep.name, std::string(to_string(action.type)), attempt, e.what()});
      }
      if (attempt >= policy.max_attempts) {
        throw;
      }
    }
  }
}

bool ConnectivityReport::all_up() const {
  for (const Entry& e : devices) {
    if (!e.up) {
      return false;
    }
  }
  return true;
}

std::vector<std::string> ConnectivityReport::down() const {
  std::vector<std::string> out;
  for (const Entry& e : devices) {
    if (!e.up) {
      out.push_back(e.name);
    }
  }
  return out;
}

ConnectivityReport connectivity_check(const std::vector<DeviceEndpoint>& devices,
                                      double timeout_s) {
  ConnectivityReport report;
  for (const DeviceEndpoint& ep : devices) {
    ConnectivityReport::Entry entry{ep.name, false, ""};
    try {
      const Ack ack = device_command(ep, {ActionType::CheckConnectivity, ep.name, ""}, timeout_s);
      entry.up = ack.status == 200;
      entry.detail = entry.up ? "ok" : "HTTP " + std::to_string(ack.status);
    } catch (const std::exception& e) {
      entry.detail = e.what();
    }
    report.devices.push_back(std::move(entry));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Mocks

void CommandRecorder::add(Entry e) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<CommandRecorder::Entry> CommandRecorder::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::vector<std::string> CommandRecorder::lines() const {
  std::vector<std::string> out;
  for (const Entry& e : entries()) {
    out.push_back(e.device + " " + e.action + (e.arg.empty() ? "" : " " + e.arg));
  }
  return out;
}

void CommandRecorder::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
}

struct MockDeviceServer::Impl {
  MockConfig cfg;
  std::shared_ptr<CommandRecorder> shared;
  CommandRecorder own;
  httplib::Server server;
  std::thread listener;
  bool started = false;

  mutable std::mutex mu;
  std::string playing;
  std::string demo;
  std::vector<std::string> picked;
  int commands_seen = 0;

  std::mutex timer_mu;
  std::condition_variable timer_cv;
  bool stopping = false;
  std::vector<std::thread> timers;

  void record(const std::string& action, const std::string& arg, int status) {
    CommandRecorder::Entry e{cfg.name, action, arg, status};
    own.add(e);
    if (shared) {
      shared->add(std::move(e));
    }
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Latency, then failure injection for commands. Returns false when the request was
  // answered with an injected failure.
  bool admit(const std::string& action, const std::string& arg, httplib::Response& res,
             bool is_command) {
    if (cfg.latency.count() > 0) {
      std::this_thread::sleep_for(cfg.latency);
    }
    if (!is_command) {
      return true;
    }
    bool fail = cfg.fail_all;
    {
      std::lock_guard lock(mu);
      fail = fail || commands_seen < cfg.fail_first;
      ++commands_seen;
    }
    if (fail) {
      record(action, arg, 503);
      reply(res, 503, {{"ok", false}, {"error", "injected failure"}});
      return false;
    }
    return true;
  }

  void deliver(const std::string& event) {
    if (cfg.notify) {
      cfg.notify(event);
      return;
    }
    if (cfg.notify_url.empty()) {
      return;
    }
    httplib::Client cli(trim_slash(cfg.notify_url));
    set_timeouts(cli, 1.0);
    cli.Post("/event", json{{"name", event}}.dump(), "application/json");
  }

  void schedule(const std::string& event, std::chrono::milliseconds after) {
    std::lock_guard guard(timer_mu);
    if (stopping) {
      return;
    }
    timers.emplace_back([this, event, after] {
      std::unique_lock lock(timer_mu);
      if (timer_cv.wait_for(lock, after, [this] { return stopping; })) {
        return;
      }
      lock.unlock();
      deliver(event);
    });
  }

  std::optional<std::string> field(const httplib::Request& req, const char* key) {
    try {
      const json body = json::parse(req.body);
      if (body.is_object() && body.contains(key) && body[key].is_string()) {
        return body[key].get<std::string>();
      }
    } catch (const json::parse_error&) {
    }
    return std::nullopt;
  }

  void install() {
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      admit("health", "", res, false);
      record("health", "", 200);
      reply(res, 200, {{"status", "ok"}});
    });
    if (cfg.kind == DeviceKind::Television) {
      install_television();
    } else {
      install_robot();
    }
  }

  void install_television() {
    server.Get("/media", [this](const httplib::Request&, httplib::Response& res) {
      if (!admit("list_media", "", res, true)) {
        return;
      }
      record("list_media", "", 200);
      reply(res, 200, {{"media", cfg.media}});
    });
    server.Post("/media/play", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = field(req, "id");
      if (!admit("play", id.value_or(""), res, true)) {
        return;
      }
      if (!id) {
        record("play", "", 400);
        return reply(res, 400, {{"ok", false}, {"error", "missing id"}});
      }
      if (std::find(cfg.media.begin(), cfg.media.end(), *id) == cfg.media.end()) {
        record("play", *id, 404);
        return reply(res, 404, {{"ok", false}, {"error", "unknown media"}});
      }
      {
        std::lock_guard lock(mu);
        playing = *id;
      }
      record("play", *id, 200);
      reply(res, 200, {{"ok", true}});
      schedule("video_done", cfg.media_duration);
    });
    server.Post("/media/stop", [this](const httplib::Request&, httplib::Response& res) {
      if (!admit("stop", "", res, true)) {
        return;
      }
      {
        std::lock_guard lock(mu);
        playing.clear();
      }
      record("stop", "", 200);
      reply(res, 200, {{"ok", true}});
    });
  }

  void install_robot() {
    server.Post("/demo/start", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = field(req, "id");
      if (!admit("start_demo", id.value_or(""), res, true)) {
        return;
      }
      if (!id) {
        record("start_demo", "", 400);
        return reply(res, 400, {{"ok", false}, {"error", "missing id"}});
      }
      if (std::find(cfg.demos.begin(), cfg.demos.end(), *id) == cfg.demos.end()) {
        record("start_demo", *id, 404);
        return reply(res, 404, {{"ok", false}, {"error", "unknown demo"}});
      }
      {
        std::lock_guard lock(mu);
        demo = *id;
      }
      record("start_demo", *id, 200);
      reply(res, 200, {{"ok", true}});
      schedule("demo_done", cfg.demo_duration);
    });
    server.Post("/demo/stop", [this](const httplib::Request&, httplib::Response& res) {
      if (!admit("stop_demo", "", res, true)) {
        return;
      }
      {
        std::lock_guard lock(mu);
        demo.clear();
      }
      record("stop_demo", "", 200);
      reply(res, 200, {{"ok", true}});
    });
    server.Post("/pick", [this](const httplib::Request& req, httplib::Response& res) {
      const auto item = field(req, "item");
      if (!admit("pick", item.value_or(""), res, true)) {
        return;
      }
      if (!item) {
        record("pick", "", 400);
        return reply(res, 400, {{"ok", false}, {"error", "missing item"}});
      }
      {
        std::lock_guard lock(mu);
        picked.push_back(*item);
      }
      record("pick", *item, 200);
      reply(res, 200, {{"ok", true}});
    });
  }
};

MockDeviceServer::MockDeviceServer(MockConfig cfg, std::shared_ptr<CommandRecorder> recorder)
    : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->shared = std::move(recorder);
  if (impl_->cfg.name.empty()) {
    throw std::invalid_argument("mock device: empty name");
  }
  impl_->install();
}

MockDeviceServer::~MockDeviceServer() { stop(); }

void MockDeviceServer::start(int port) {
  if (impl_->started) {
    throw std::logic_error("mock device '" + impl_->cfg.name + "' already started");
  }
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    port_ = impl_->server.bind_to_port("127.0.0.1", port) ? port : -1;
  }
  if (port_ <= 0) {
    throw std::runtime_error("mock device '" + impl_->cfg.name + "': cannot bind port " +
                             std::to_string(port));
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->started = true;
}

void MockDeviceServer::stop() {
  if (!impl_ || !impl_->started) {
    return;
  }
  {
    std::lock_guard lock(impl_->timer_mu);
    impl_->stopping = true;
  }
  impl_->timer_cv.notify_all();
  for (std::thread& t : impl_->timers) {
    if (t.joinable()) {
      t.join();
    }
  }
  impl_->server.stop();
  if (impl_->listener.joinable()) {
    impl_->listener.join();
  }
  impl_->started = false;
}

bool MockDeviceServer::running() const { return impl_->started; }

std::string MockDeviceServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

DeviceEndpoint MockDeviceServer::endpoint() const {
  return {impl_->cfg.name, base_url(), impl_->cfg.kind};
}

std::vector<CommandRecorder::Entry> MockDeviceServer::commands() const {
  return impl_->own.entries();
}

std::string MockDeviceServer::playing() const {
  std::lock_guard lock(impl_->mu);
  return impl_->playing;
}

std::string MockDeviceServer::running_demo() const {
  std::lock_guard lock(impl_->mu);
  return impl_->demo;
}

std::vector<std::string> MockDeviceServer::picked() const {
  std::lock_guard lock(impl_->mu);
  return impl_->picked;
}

}  // namespace omninav::tour
