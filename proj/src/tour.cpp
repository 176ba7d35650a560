#include "omninav/tour.hpp"

#include <array>
#include <stdexcept>
#include <utility>

namespace omninav::tour {

namespace {

constexpr std::array<std::pair<State, std::string_view>, 12> kStateNames{{
    {State::IdleAtEntry, "IDLE_AT_ENTRY"},
    {State::ConnectivityCheck, "CONNECTIVITY_CHECK"},
    {State::NavToHarvey, "NAV_TO_HARVEY"},
    {State::HarveyVideo, "HARVEY_VIDEO"},
    {State::HarveyDemo, "HARVEY_DEMO"},
    {State::WaitNext1, "WAIT_NEXT_1"},
    {State::NavToCartman, "NAV_TO_CARTMAN"},
    {State::CartmanVideo, "CARTMAN_VIDEO"},
    {State::CartmanPicking, "CARTMAN_PICKING"},
    {State::NavToMeeting, "NAV_TO_MEETING"},
    {State::Done, "DONE"},
    {State::Fault, "FAULT"},
}};

constexpr std::array<std::pair<EventType, std::string_view>, 11> kEventNames{{
    {EventType::Button, "button"},
    {EventType::NavDone, "nav_done"},
    {EventType::NavFailed, "nav_failed"},
    {EventType::VideoDone, "video_done"},
    {EventType::DemoDone, "demo_done"},
    {EventType::DeviceError, "device_error"},
    {EventType::ItemSelected, "item_selected"},
    {EventType::Finish, "finish"},
    {EventType::ConnectivityOk, "connectivity_ok"},
    {EventType::ConnectivityDown, "connectivity_down"},
    {EventType::Reset, "reset"},
}};

bool takes_arg(EventType t) { return t == EventType::Button || t == EventType::ItemSelected; }

StepOutcome go(State next, std::vector<Action> actions = {}) {
  return {next, std::move(actions), true};
}

}  // namespace

std::string_view to_string(State s) {
  for (const auto& [state, name] : kStateNames) {
    if (state == s) {
      return name;
    }
  }
  return "UNKNOWN";
}

std::optional<State> state_from_string(std::string_view name) {
  for (const auto& [state, n] : kStateNames) {
    if (n == name) {
      return state;
    }
  }
  return std::nullopt;
}

bool is_navigation(State s) {
  return s == State::NavToHarvey || s == State::NavToCartman || s == State::NavToMeeting;
}

std::string_view to_string(EventType t) {
  for (const auto& [type, name] : kEventNames) {
    if (type == t) {
      return name;
    }
  }
  return "unknown";
}

std::string Event::label() const {
  std::string out(to_string(type));
  if (takes_arg(type)) {
    out += "(" + arg + ")";
  }
  return out;
}

Event parse_event(std::string_view text) {
  std::string_view name = text;
  std::string arg;
  if (const auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') {
      throw std::invalid_argument("event '" + std::string(text) + "': missing ')'");
    }
    name = text.substr(0, open);
    arg = std::string(text.substr(open + 1, text.size() - open - 2));
  }
  for (const auto& [type, n] : kEventNames) {
    if (n == name) {
      if (takes_arg(type) && arg.empty()) {
        throw std::invalid_argument("event '" + std::string(name) + "' needs an argument");
      }
      return {type, arg};
    }
  }
  throw std::invalid_argument("unknown event '" + std::string(name) + "'");
}

std::string_view to_string(ActionType t) {
  switch (t) {
    case ActionType::CheckConnectivity:
      return "health";
    case ActionType::Navigate:
      return "navigate";
    case ActionType::Play:
      return "play";
    case ActionType::StopMedia:
      return "stop";
    case ActionType::ListMedia:
      return "list_media";
    case ActionType::StartDemo:
      return "start_demo";
    case ActionType::StopDemo:
      return "stop_demo";
    case ActionType::Pick:
      return "pick";
  }
  return "unknown";
}

bool valid_for(ActionType t, DeviceKind kind) {
  switch (t) {
    case ActionType::StartDemo:
    case ActionType::StopDemo:
    case ActionType::Pick:
      return kind == DeviceKind::Robot;
    case ActionType::Play:
    case ActionType::StopMedia:
    case ActionType::ListMedia:
      return kind == DeviceKind::Television;
    case ActionType::CheckConnectivity:
      return true;
    case ActionType::Navigate:
      return false;
  }
  return false;
}

StepOutcome tour_step(State state, const Event& event, const Bindings& b) {
  const StepOutcome ignored{state, {}, false};
  if (state == State::Fault) {
    return event.type == EventType::Reset ? go(State::IdleAtEntry) : ignored;
  }
  if (event.type == EventType::DeviceError && state != State::Done) {
    return go(State::Fault);
  }
  if (event.type == EventType::NavFailed && is_navigation(state)) {
    return go(State::Fault);
  }
  const bool button = event.type == EventType::Button;
  switch (state) {
    case State::IdleAtEntry:
      if (button && event.arg == "start") {
        return go(State::ConnectivityCheck, {{ActionType::CheckConnectivity, "", ""}});
      }
      break;
    case State::ConnectivityCheck:
      if (event.type == EventType::ConnectivityOk) {
        return go(State::NavToHarvey, {{ActionType::Navigate, b.harvey_marker, ""}});
      }
      if (event.type == EventType::ConnectivityDown) {
        return go(State::ConnectivityCheck);
      }
      if (button && event.arg == "start") {
        return go(State::ConnectivityCheck, {{ActionType::CheckConnectivity, "", ""}});
      }
      break;
    case State::NavToHarvey:
      if (event.type == EventType::NavDone) {
        return go(State::HarveyVideo, {{ActionType::Play, b.harvey_tv, b.harvey_video}});
      }
      break;
    case State::HarveyVideo:
      if (event.type == EventType::VideoDone) {
        return go(State::HarveyDemo, {{ActionType::StartDemo, b.harvey, b.harvey_demo}});
      }
      break;
    case State::HarveyDemo:
      if (event.type == EventType::DemoDone) {
        return go(State::WaitNext1);
      }
      [[fallthrough]];
    case State::WaitNext1:
      if (button && event.arg == "next") {
        return go(State::NavToCartman, {{ActionType::Navigate, b.cartman_marker, ""}});
      }
      break;
    case State::NavToCartman:
      if (event.type == EventType::NavDone) {
        return go(State::CartmanVideo, {{ActionType::Play, b.cartman_tv, b.cartman_video}});
      }
      break;
    case State::CartmanVideo:
      if (event.type == EventType::VideoDone) {
        return go(State::CartmanPicking);
      }
      break;
    case State::CartmanPicking:
      if (event.type == EventType::ItemSelected) {
        return go(State::CartmanPicking, {{ActionType::Pick, b.cartman, event.arg}});
      }
      if (event.type == EventType::Finish) {
        return go(State::NavToMeeting, {{ActionType::Navigate, b.meeting_marker, ""}});
      }
      break;
    case State::NavToMeeting:
      if (event.type == EventType::NavDone) {
        return go(State::Done);
      }
      break;
    case State::Done:
      if (event.type == EventType::Reset) {
        return go(State::IdleAtEntry);
      }
      break;
    case State::Fault:
      break;
  }
  return ignored;
}

}  // namespace omninav::tour
