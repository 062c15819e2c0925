#include "edh/worldsim/scenario.hpp"

#include "edh/util/error.hpp"

namespace edh::worldsim {

namespace {

Json set_json(const std::set<std::string>& s) { return Json(std::vector<std::string>(s.begin(), s.end())); }

std::set<std::string> set_from(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) return {};
  const Json& v = j.at(key);
  if (!v.is_array()) throw SchemaError(path + "." + key, "expected an array of type names");
  std::set<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(path + "." + key, "expected type names");
    out.insert(e.get<std::string>());
  }
  return out;
}

std::pair<int, int> cell_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw SchemaError(path, "expected [row, col]");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

FlagSet flags_from(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of flag names");
  FlagSet s = 0;
  for (const auto& e : j) {
    auto f = e.is_string() ? flag_from_name(e.get<std::string>()) : std::nullopt;
    if (!f) throw SchemaError(path, "unknown flag " + e.dump());
    s |= *f;
  }
  return s;
}

}  // namespace

bool Affordances::flags_allowed(const std::string& type, FlagSet flags) const {
  auto has = [&](const std::set<std::string>& s) { return s.count(type) > 0; };
  if ((flags & kOpen) && !has(openable)) return false;
  if ((flags & kSliced) && !has(sliceable)) return false;
  if ((flags & kToggledOn) && !has(toggleable)) return false;
  if ((flags & kFilled) && !has(fillable)) return false;
  if ((flags & kDirty) && !has(dirtyable)) return false;
  if ((flags & kHeldByAgent) && !has(pickupable)) return false;
  return true;
}

Json to_json(const Affordances& a) {
  Json j;
  j["pickupable"] = set_json(a.pickupable);
  j["receptacles"] = set_json(a.receptacles);
  j["openable"] = set_json(a.openable);
  j["sliceable"] = set_json(a.sliceable);
  j["slicing_tools"] = set_json(a.slicing_tools);
  j["toggleable"] = set_json(a.toggleable);
  j["fillable"] = set_json(a.fillable);
  j["dirtyable"] = set_json(a.dirtyable);
  j["pour_targets"] = set_json(a.pour_targets);
  Json effects = Json::object();
  for (const auto& [type, e] : a.toggle_effects) {
    effects[type] = Json{{"add", flag_names(e.add)}, {"remove", flag_names(e.remove)}};
  }
  j["toggle_effects"] = effects;
  return j;
}

Affordances affordances_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  Affordances a;
  a.pickupable = set_from(j, "pickupable", path);
  a.receptacles = set_from(j, "receptacles", path);
  a.openable = set_from(j, "openable", path);
  a.sliceable = set_from(j, "sliceable", path);
  a.slicing_tools = set_from(j, "slicing_tools", path);
  a.toggleable = set_from(j, "toggleable", path);
  a.fillable = set_from(j, "fillable", path);
  a.dirtyable = set_from(j, "dirtyable", path);
  a.pour_targets = set_from(j, "pour_targets", path);
  if (j.contains("toggle_effects")) {
    for (const auto& [type, e] : j.at("toggle_effects").items()) {
      const std::string p = path + ".toggle_effects." + type;
      ToggleEffect te;
      if (e.contains("add")) te.add = flags_from(e.at("add"), p + ".add");
      if (e.contains("remove")) te.remove = flags_from(e.at("remove"), p + ".remove");
      a.toggle_effects[type] = te;
    }
  }
  return a;
}

Json to_json(const Condition& c) {
  Json j;
  j["type"] = c.type;
  if (c.flag) {
    j["flag"] = std::string(flag_name(*c.flag));
    j["value"] = c.value;
  }
  if (c.inside) j["inside"] = *c.inside;
  return j;
}

Condition condition_from_json(const Json& j, const std::string& path) {
  Condition c;
  c.type = require(j, "type", path).get<std::string>();
  if (j.contains("flag")) {
    auto f = flag_from_name(j.at("flag").get<std::string>());
    if (!f) throw SchemaError(path + ".flag", "unknown flag");
    c.flag = *f;
    c.value = j.value("value", true);
  }
  if (j.contains("inside")) c.inside = j.at("inside").get<std::string>();
  if (!c.flag && !c.inside) throw SchemaError(path, "condition needs 'flag' or 'inside'");
  return c;
}

Json to_json(const TaskSpec& t) {
  Json j;
  j["name"] = t.name;
  Json subgoals = Json::array();
  for (const auto& s : t.subgoals) {
    Json sj;
    sj["name"] = s.name;
    sj["steps"] = Json::array();
    for (const auto& a : s.steps) sj["steps"].push_back(to_json(a));
    sj["conditions"] = Json::array();
    for (const auto& c : s.conditions) sj["conditions"].push_back(to_json(c));
    subgoals.push_back(std::move(sj));
  }
  j["subgoals"] = std::move(subgoals);
  return j;
}

TaskSpec task_from_json(const Json& j, const std::string& path) {
  TaskSpec t;
  t.name = require(j, "name", path).get<std::string>();
  const Json& subgoals = require(j, "subgoals", path);
  if (!subgoals.is_array()) throw SchemaError(path + ".subgoals", "expected an array");
  for (std::size_t i = 0; i < subgoals.size(); ++i) {
    const std::string p = path + ".subgoals[" + std::to_string(i) + "]";
    Subgoal s;
    s.name = require(subgoals[i], "name", p).get<std::string>();
    const Json& steps = require(subgoals[i], "steps", p);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      s.steps.push_back(action_ref_from_json(steps[k], p + ".steps[" + std::to_string(k) + "]"));
    }
    if (subgoals[i].contains("conditions")) {
      const Json& conds = subgoals[i].at("conditions");
      for (std::size_t k = 0; k < conds.size(); ++k) {
        s.conditions.push_back(condition_from_json(conds[k], p + ".conditions[" + std::to_string(k) + "]"));
      }
    }
    t.subgoals.push_back(std::move(s));
  }
  return t;
}

Json to_json(const ScenarioSpec& s) {
  Json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  j["grid_size"] = {s.rows, s.cols};
  j["observation_channels"] = s.observation_channels;
  Json agent;
  agent["position"] = s.agent.position ? Json{s.agent.position->first, s.agent.position->second} : Json("random");
  agent["heading"] = std::string(to_string(s.agent.heading));
  j["agent"] = agent;
  Json objects = Json::array();
  for (const auto& o : s.objects) {
    Json oj;
    oj["type"] = o.type;
    if (o.position) oj["position"] = {o.position->first, o.position->second};
    if (o.random_position) oj["position"] = "random";
    if (o.on_type) oj["on"] = *o.on_type;
    oj["flags"] = flag_names(o.flags);
    objects.push_back(std::move(oj));
  }
  j["objects"] = std::move(objects);
  j["affordances"] = to_json(s.affordances);
  if (s.task) j["task"] = to_json(*s.task);
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  const int version = require(j, "schema_version", "").get<int>();
  if (version != kScenarioSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version " + std::to_string(version));
  }
  ScenarioSpec s;
  s.name = j.value("name", "");
  auto grid = cell_from(require(j, "grid_size", ""), "grid_size");
  s.rows = grid.first;
  s.cols = grid.second;
  s.observation_channels = j.value("observation_channels", 16);
  if (j.contains("agent")) {
    const Json& a = j.at("agent");
    if (a.contains("position") && !a.at("position").is_string()) s.agent.position = cell_from(a.at("position"), "agent.position");
    if (a.contains("heading")) s.agent.heading = heading_from_string(a.at("heading").get<std::string>());
  }
  const Json& objects = require(j, "objects", "");
  if (!objects.is_array()) throw SchemaError("objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = "objects[" + std::to_string(i) + "]";
    const Json& oj = objects[i];
    ObjectSpec o;
    o.type = require(oj, "type", p).get<std::string>();
    if (oj.contains("position")) {
      if (oj.at("position").is_string()) {
        if (oj.at("position").get<std::string>() != "random") throw SchemaError(p + ".position", "expected [row, col] or \"random\"");
        o.random_position = true;
      } else {
        o.position = cell_from(oj.at("position"), p + ".position");
      }
    }
    if (oj.contains("on")) o.on_type = oj.at("on").get<std::string>();
    if (oj.contains("flags")) o.flags = flags_from(oj.at("flags"), p + ".flags");
    int placements = (o.position ? 1 : 0) + (o.random_position ? 1 : 0) + (o.on_type ? 1 : 0);
    if (placements != 1) throw SchemaError(p, "exactly one of position / position:\"random\" / on is required");
    s.objects.push_back(std::move(o));
  }
  s.affordances = affordances_from_json(require(j, "affordances", ""), "affordances");
  if (j.contains("task") && !j.at("task").is_null()) s.task = task_from_json(j.at("task"), "task");
  return s;
}

}  // namespace edh::worldsim
