#include "edh/corpus/plan.hpp"

#include <map>

#include "edh/util/error.hpp"

namespace edh::corpus {

namespace {

const std::map<std::string, std::string>& action_tokens() {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> out;
    for (const auto& a : worldsim::action_catalog()) {
      if (a.kind == worldsim::ActionKind::Interaction) out[worldsim::to_token(a.name)] = a.name;
    }
    return out;
  }();
  return m;
}

const std::map<std::string, std::string>& object_tokens() {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> out;
    for (const auto& t : worldsim::object_types()) out[worldsim::to_token(t)] = t;
    return out;
  }();
  return m;
}

}  // namespace

std::vector<std::string> plan_to_text(const Plan& plan) {
  std::vector<std::string> tokens;
  tokens.reserve(plan.steps.size() * 2);
  for (const auto& s : plan.steps) {
    tokens.push_back(worldsim::to_token(s.action));
    tokens.push_back(worldsim::to_token(s.object_type));
  }
  return tokens;
}

std::string plan_to_string(const Plan& plan) {
  std::string out;
  for (const auto& t : plan_to_text(plan)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

ParsedPlan parse_plan(const std::vector<std::string>& tokens) {
  ParsedPlan result;
  const auto& actions = action_tokens();
  const auto& objects = object_tokens();
  std::size_t i = 0;
  while (i < tokens.size()) {
    auto a = actions.find(tokens[i]);
    if (a != actions.end() && i + 1 < tokens.size()) {
      auto o = objects.find(tokens[i + 1]);
      if (o != objects.end()) {
        result.plan.steps.push_back({a->second, o->second});
        i += 2;
        continue;
      }
    }
    result.malformed = true;
    ++i;
  }
  return result;
}

bool is_valid_plan(const Plan& plan) {
  for (const auto& s : plan.steps) {
    const auto* def = worldsim::find_action(s.action);
    if (def == nullptr || def->kind != worldsim::ActionKind::Interaction) return false;
    if (worldsim::object_type_index(s.object_type) < 0) return false;
  }
  return true;
}

Json to_json(const Plan& plan) {
  Json j = Json::array();
  for (const auto& s : plan.steps) j.push_back(Json{{"action", s.action}, {"object", s.object_type}});
  return j;
}

Plan plan_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of plan steps");
  Plan p;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    p.steps.push_back({require(j[i], "action", at).get<std::string>(), require(j[i], "object", at).get<std::string>()});
  }
  if (!is_valid_plan(p)) throw SchemaError(path, "plan contains a non-interaction action or unknown object");
  return p;
}

}  // namespace edh::corpus
