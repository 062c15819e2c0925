#include "edh/worldsim/catalog.hpp"

#include "edh/util/error.hpp"

namespace edh::worldsim {

namespace {

Json kitchen_affordances_json() {
  return Json::parse(R"({
    "pickupable": ["Knife", "Bread", "Tomato", "Potato", "Plate", "Mug"],
    "receptacles": ["Counter", "Sink", "Toaster", "CoffeeMachine", "Stove", "Fridge", "Plate"],
    "openable": ["Fridge"],
    "sliceable": ["Bread", "Tomato", "Potato"],
    "slicing_tools": ["Knife"],
    "toggleable": ["Toaster", "CoffeeMachine", "Stove", "Sink"],
    "fillable": ["Mug"],
    "dirtyable": ["Plate", "Mug"],
    "pour_targets": ["Sink", "Mug"],
    "toggle_effects": {
      "CoffeeMachine": {"add": ["filled"]},
      "Sink": {"remove": ["dirty"]}
    }
  })");
}

Json step(const char* action, const char* object) { return Json{{"action", action}, {"object", object}}; }

Json cond_flag(const char* type, const char* flag, bool value = true) {
  return Json{{"type", type}, {"flag", flag}, {"value", value}};
}

Json cond_inside(const char* type, const char* host) { return Json{{"type", type}, {"inside", host}}; }

Json subgoal(const char* name, std::vector<Json> steps, std::vector<Json> conditions) {
  return Json{{"name", name}, {"steps", steps}, {"conditions", conditions}};
}

Json task_json(const std::string& name) {
  if (name == "MakeToast") {
    return Json{{"name", name},
                {"subgoals",
                 {subgoal("slice the bread", {step("Pickup", "Knife"), step("Slice", "Bread"), step("Place", "Counter")},
                          {cond_flag("Bread", "sliced")}),
                  subgoal("toast the bread", {step("Pickup", "Bread"), step("Place", "Toaster"), step("ToggleOn", "Toaster")},
                          {cond_inside("Bread", "Toaster"), cond_flag("Toaster", "toggled_on")})}}};
  }
  if (name == "MakeCoffee") {
    return Json{{"name", name},
                {"subgoals",
                 {subgoal("brew coffee", {step("Pickup", "Mug"), step("Place", "CoffeeMachine"), step("ToggleOn", "CoffeeMachine")},
                          {cond_flag("Mug", "filled"), cond_inside("Mug", "CoffeeMachine")}),
                  subgoal("serve the coffee", {step("Pickup", "Mug"), step("Place", "Counter")},
                          {cond_flag("Mug", "filled"), cond_inside("Mug", "Counter")})}}};
  }
  if (name == "CleanPlate") {
    return Json{{"name", name},
                {"subgoals",
                 {subgoal("rinse the plate", {step("Pickup", "Plate"), step("Place", "Sink"), step("ToggleOn", "Sink")},
                          {cond_inside("Plate", "Sink"), cond_flag("Plate", "dirty", false)}),
                  subgoal("put the plate away", {step("Pickup", "Plate"), step("Place", "Counter")},
                          {cond_inside("Plate", "Counter")})}}};
  }
  if (name == "ServeTomato") {
    return Json{{"name", name},
                {"subgoals",
                 {subgoal("slice the tomato", {step("Pickup", "Knife"), step("Slice", "Tomato"), step("Place", "Counter")},
                          {cond_flag("Tomato", "sliced")}),
                  subgoal("plate the tomato", {step("Pickup", "Tomato"), step("Place", "Plate")},
                          {cond_inside("Tomato", "Plate")})}}};
  }
  if (name == "CookPotato") {
    return Json{{"name", name},
                {"subgoals",
                 {subgoal("fetch the potato", {step("Open", "Fridge"), step("Pickup", "Potato"), step("Close", "Fridge")},
                          {cond_flag("Potato", "held_by_agent")}),
                  subgoal("cook the potato", {step("Place", "Stove"), step("ToggleOn", "Stove")},
                          {cond_inside("Potato", "Stove"), cond_flag("Stove", "toggled_on")})}}};
  }
  if (name == "Idle") return Json{{"name", name}, {"subgoals", Json::array()}};
  throw ConfigError("unknown task '" + name + "'");
}

Json scenario_json(const std::string& name) {
  Json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = name;
  j["observation_channels"] = 16;
  j["affordances"] = kitchen_affordances_json();
  if (name == "kitchen_small") {
    j["grid_size"] = {7, 7};
    j["agent"] = {{"position", {3, 3}}, {"heading", "N"}};
    j["objects"] = Json::parse(R"([
      {"type": "Counter", "position": [0, 1]},
      {"type": "Counter", "position": [0, 2]},
      {"type": "Sink", "position": [0, 4]},
      {"type": "CoffeeMachine", "position": [0, 5]},
      {"type": "Toaster", "position": [3, 6]},
      {"type": "Stove", "position": [6, 1]},
      {"type": "Fridge", "position": [6, 4]},
      {"type": "Knife", "on": "Counter"},
      {"type": "Plate", "on": "Counter", "flags": ["dirty"]},
      {"type": "Potato", "on": "Fridge"},
      {"type": "Bread", "position": "random"},
      {"type": "Tomato", "position": "random"},
      {"type": "Mug", "position": "random"}
    ])");
  } else if (name == "kitchen_wide") {
    j["grid_size"] = {6, 9};
    j["agent"] = {{"position", {3, 4}}, {"heading", "E"}};
    j["objects"] = Json::parse(R"([
      {"type": "Counter", "position": [0, 2]},
      {"type": "Counter", "position": [5, 6]},
      {"type": "Sink", "position": [0, 6]},
      {"type": "CoffeeMachine", "position": [2, 8]},
      {"type": "Toaster", "position": [0, 4]},
      {"type": "Stove", "position": [5, 2]},
      {"type": "Fridge", "position": [3, 0]},
      {"type": "Knife", "on": "Counter"},
      {"type": "Plate", "on": "Counter", "flags": ["dirty"]},
      {"type": "Potato", "on": "Fridge"},
      {"type": "Bread", "position": "random"},
      {"type": "Tomato", "position": "random"},
      {"type": "Mug", "position": "random"}
    ])");
  } else if (name == "empty_room") {
    j["grid_size"] = {5, 5};
    j["agent"] = {{"position", {2, 2}}, {"heading", "N"}};
    j["objects"] = Json::array();
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return j;
}

}  // namespace

const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names = {"kitchen_small", "kitchen_wide", "empty_room"};
  return names;
}

const std::vector<std::string>& builtin_task_names() {
  static const std::vector<std::string> names = {"MakeToast", "MakeCoffee", "CleanPlate", "ServeTomato", "CookPotato",
                                                 "Idle"};
  return names;
}

ScenarioSpec builtin_scenario(const std::string& name) { return scenario_from_json(scenario_json(name)); }

TaskSpec builtin_task(const std::string& name) { return task_from_json(task_json(name), "task"); }

Affordances kitchen_affordances() { return affordances_from_json(kitchen_affordances_json(), "affordances"); }

}  // namespace edh::worldsim
