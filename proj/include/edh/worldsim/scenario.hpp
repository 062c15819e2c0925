#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "edh/worldsim/types.hpp"

namespace edh::worldsim {

inline constexpr int kScenarioSchemaVersion = 1;

struct ToggleEffect {
  FlagSet add = 0;     // applied to objects inside the toggled container
  FlagSet remove = 0;

  bool operator==(const ToggleEffect&) const = default;
};

// Which interactions are legal on which object types.
struct Affordances {
  std::set<std::string> pickupable;
  std::set<std::string> receptacles;
  std::set<std::string> openable;
  std::set<std::string> sliceable;
  std::set<std::string> slicing_tools;
  std::set<std::string> toggleable;
  std::set<std::string> fillable;
  std::set<std::string> dirtyable;
  std::set<std::string> pour_targets;
  std::map<std::string, ToggleEffect> toggle_effects;

  // True when `flags` only contains states this type can carry.
  bool flags_allowed(const std::string& type, FlagSet flags) const;

  bool operator==(const Affordances&) const = default;
};

struct ObjectSpec {
  std::string type;
  std::optional<std::pair<int, int>> position;  // fixed cell
  bool random_position = false;                 // seeded free-cell placement
  std::optional<std::string> on_type;           // placed inside a seeded choice of this type
  FlagSet flags = 0;
};

struct AgentSpec {
  std::optional<std::pair<int, int>> position;  // nullopt = seeded free cell
  Heading heading = Heading::North;
};

// One state condition over the world: an object of `type` has (or lacks)
// `flag`, or sits inside an object of type `inside`.
struct Condition {
  std::string type;
  std::optional<Flag> flag;
  bool value = true;
  std::optional<std::string> inside;
};

struct Subgoal {
  std::string name;
  std::vector<ActionRef> steps;  // interaction recipe the scripted follower executes
  std::vector<Condition> conditions;
};

struct TaskSpec {
  std::string name;
  std::vector<Subgoal> subgoals;
};

struct ScenarioSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  int observation_channels = 16;
  AgentSpec agent;
  std::vector<ObjectSpec> objects;
  Affordances affordances;
  std::optional<TaskSpec> task;
};

Json to_json(const Affordances& a);
Affordances affordances_from_json(const Json& j, const std::string& path);
Json to_json(const Condition& c);
Condition condition_from_json(const Json& j, const std::string& path);
Json to_json(const TaskSpec& t);
TaskSpec task_from_json(const Json& j, const std::string& path);
Json to_json(const ScenarioSpec& s);
// Throws SchemaError on structural problems; semantic problems (collisions,
// cells outside the grid) surface later from reset() as InvalidScenario.
ScenarioSpec scenario_from_json(const Json& j);

}  // namespace edh::worldsim
