#pragma once

#include <string>
#include <vector>

#include "edh/worldsim/types.hpp"

namespace edh::corpus {

struct PlanStep {
  std::string action;       // interaction action name, e.g. "Pickup"
  std::string object_type;  // e.g. "Knife"

  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;

  bool operator==(const Plan&) const = default;
};

struct ParsedPlan {
  Plan plan;
  bool malformed = false;
};

// "pickup knife slice bread": lowercase snake_case symbols, strictly
// alternating action and object.
std::vector<std::string> plan_to_text(const Plan& plan);
std::string plan_to_string(const Plan& plan);

// Lenient inverse of plan_to_text. Complete (action, object) pairs are kept;
// anything else (unknown tokens, a dangling action, an object without an
// action) is skipped and sets `malformed`.
ParsedPlan parse_plan(const std::vector<std::string>& tokens);

// Validates plan invariants: interaction actions and known object types only.
bool is_valid_plan(const Plan& plan);

Json to_json(const Plan& plan);
Plan plan_from_json(const Json& j, const std::string& path);

}  // namespace edh::corpus
