#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Tour mission state machine. Pure: no I/O, no clocks.
namespace omninav::tour {

enum class State {
  IdleAtEntry,
  ConnectivityCheck,
  NavToHarvey,
  HarveyVideo,
  HarveyDemo,
  WaitNext1,
  NavToCartman,
  CartmanVideo,
  CartmanPicking,
  NavToMeeting,
  Done,
  Fault,
};

std::string_view to_string(State s);
std::optional<State> state_from_string(std::string_view name);
bool is_navigation(State s);

enum class EventType {
  Button,
  NavDone,
  NavFailed,
  VideoDone,
  DemoDone,
  DeviceError,
  ItemSelected,
  Finish,
  ConnectivityOk,
  ConnectivityDown,
  Reset,
};

struct Event {
  EventType type = EventType::Button;
  std::string arg;  // button name, item id or error detail

  /// "button(start)", "nav_done", "item_selected(item_3)", ...; device_error and
  /// connectivity_down omit their detail so logs stay stable.
  std::string label() const;
};

std::string_view to_string(EventType t);
/// Accepts "name" or "name(arg)". Throws std::invalid_argument for unknown names.
Event parse_event(std::string_view text);

enum class DeviceKind { Robot, Television };

enum class ActionType {
  CheckConnectivity,
  Navigate,
  Play,
  StopMedia,
  ListMedia,
  StartDemo,
  StopDemo,
  Pick,
};

std::string_view to_string(ActionType t);
/// Whether a device action may be sent to a device of this kind.
bool valid_for(ActionType t, DeviceKind kind);

struct Action {
  ActionType type = ActionType::CheckConnectivity;
  std::string target;  // device name, or marker id for Navigate
  std::string arg;     // media, demo or item id

  friend bool operator==(const Action&, const Action&) = default;
};

/// Which devices, media and markers each station uses.
struct Bindings {
  std::string harvey = "harvey";
  std::string cartman = "cartman";
  std::string harvey_tv = "tv_harvey";
  std::string cartman_tv = "tv_cartman";
  std::string harvey_video = "harvey_field_video";
  std::string cartman_video = "cartman_picking_video";
  std::string harvey_demo = "harvey_demo";
  std::string entry_marker = "m1";
  std::string harvey_marker = "m2";
  std::string cartman_marker = "m3";
  std::string meeting_marker = "m4";
};

struct StepOutcome {
  State next = State::IdleAtEntry;
  std::vector<Action> actions;
  bool accepted = false;  // false: event not valid in this state, state unchanged
};

/// The transition table. FAULT is absorbing except for `reset`.
StepOutcome tour_step(State state, const Event& event, const Bindings& bindings = {});

}  // namespace omninav::tour
