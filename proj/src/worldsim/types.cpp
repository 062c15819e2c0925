#include "edh/worldsim/types.hpp"

#include <cctype>

#include "edh/util/error.hpp"

namespace edh::worldsim {

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::North: return "N";
    case Heading::East: return "E";
    case Heading::South: return "S";
    case Heading::West: return "W";
  }
  return "?";
}

Heading heading_from_string(std::string_view s) {
  if (s == "N") return Heading::North;
  if (s == "E") return Heading::East;
  if (s == "S") return Heading::South;
  if (s == "W") return Heading::West;
  throw InvalidScenario("unknown heading '" + std::string(s) + "'");
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Navigation: return "navigation";
    case ActionKind::Interaction: return "interaction";
    case ActionKind::Dialog: return "dialog";
    case ActionKind::Stop: return "stop";
  }
  return "?";
}

std::string_view to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::Ok: return "ok";
    case StepOutcome::NoopBlocked: return "noop_blocked";
    case StepOutcome::FailedPrecondition: return "failed_precondition";
  }
  return "?";
}

std::string_view flag_name(Flag f) {
  switch (f) {
    case kSliced: return "sliced";
    case kOpen: return "open";
    case kToggledOn: return "toggled_on";
    case kFilled: return "filled";
    case kDirty: return "dirty";
    case kHeldByAgent: return "held_by_agent";
  }
  return "?";
}

std::optional<Flag> flag_from_name(std::string_view name) {
  for (Flag f : kAllFlags) {
    if (flag_name(f) == name) return f;
  }
  return std::nullopt;
}

std::vector<std::string> flag_names(FlagSet flags) {
  std::vector<std::string> out;
  for (Flag f : kAllFlags) {
    if (flags & f) out.emplace_back(flag_name(f));
  }
  return out;
}

FlagSet flags_from_names(const std::vector<std::string>& names) {
  FlagSet s = 0;
  for (const auto& n : names) {
    auto f = flag_from_name(n);
    if (!f) throw InvalidScenario("unknown object flag '" + n + "'");
    s |= *f;
  }
  return s;
}

const std::vector<ActionDef>& action_catalog() {
  static const std::vector<ActionDef> catalog = {
      {"Forward", ActionKind::Navigation, false},    {"Backward", ActionKind::Navigation, false},
      {"Turn Left", ActionKind::Navigation, false},  {"Turn Right", ActionKind::Navigation, false},
      {"Pan Left", ActionKind::Navigation, false},   {"Pan Right", ActionKind::Navigation, false},
      {"Pickup", ActionKind::Interaction, true},     {"Place", ActionKind::Interaction, true},
      {"Open", ActionKind::Interaction, true},       {"Close", ActionKind::Interaction, true},
      {"Slice", ActionKind::Interaction, true},      {"Pour", ActionKind::Interaction, true},
      {"ToggleOn", ActionKind::Interaction, true},   {"ToggleOff", ActionKind::Interaction, true},
      {"Text", ActionKind::Dialog, false},           {"Stop", ActionKind::Stop, false},
  };
  return catalog;
}

const ActionDef* find_action(std::string_view name) {
  for (const auto& a : action_catalog()) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const std::vector<std::string>& object_types() {
  static const std::vector<std::string> types = {"Counter", "Sink",  "Toaster", "CoffeeMachine", "Stove", "Fridge",
                                                 "Knife",   "Bread", "Tomato",  "Potato",        "Plate", "Mug"};
  return types;
}

int object_type_index(std::string_view type) {
  const auto& types = object_types();
  for (std::size_t i = 0; i < types.size(); ++i) {
    if (types[i] == type) return static_cast<int>(i);
  }
  return -1;
}

std::string to_string(const ActionRef& a) {
  if (a.object) return a.action + "(" + *a.object + ")";
  return a.action;
}

Json to_json(const ActionRef& a) {
  Json j;
  j["action"] = a.action;
  j["object"] = a.object ? Json(*a.object) : Json(nullptr);
  return j;
}

ActionRef action_ref_from_json(const Json& j, const std::string& path) {
  ActionRef a;
  const Json& name = require(j, "action", path);
  if (!name.is_string()) throw SchemaError(path + ".action", "expected a string");
  a.action = name.get<std::string>();
  if (j.contains("object") && !j.at("object").is_null()) {
    if (!j.at("object").is_string()) throw SchemaError(path + ".object", "expected a string or null");
    a.object = j.at("object").get<std::string>();
  }
  return a;
}

std::string to_token(std::string_view symbol) {
  std::string out;
  for (std::size_t i = 0; i < symbol.size(); ++i) {
    const char c = symbol[i];
    if (c == ' ' || c == '-') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      if (i > 0 && !out.empty() && out.back() != '_' && std::islower(static_cast<unsigned char>(symbol[i - 1]))) {
        out.push_back('_');
      }
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool is_navigation(const ActionRef& a) {
  const ActionDef* d = find_action(a.action);
  return d != nullptr && d->kind == ActionKind::Navigation;
}

bool is_interaction(const ActionRef& a) {
  const ActionDef* d = find_action(a.action);
  return d != nullptr && d->kind == ActionKind::Interaction;
}

}  // namespace edh::worldsim
