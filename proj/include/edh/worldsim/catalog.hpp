#pragma once

#include <string>
#include <vector>

#include "edh/worldsim/scenario.hpp"

namespace edh::worldsim {

// Built-in scenarios and tasks. Lookups throw ConfigError for unknown names.
const std::vector<std::string>& builtin_scenario_names();
const std::vector<std::string>& builtin_task_names();
ScenarioSpec builtin_scenario(const std::string& name);
TaskSpec builtin_task(const std::string& name);

Affordances kitchen_affordances();

}  // namespace edh::worldsim
