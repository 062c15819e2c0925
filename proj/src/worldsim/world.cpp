#include "edh/worldsim/world.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "edh/util/error.hpp"
#include "edh/util/hash.hpp"
#include "edh/util/rng.hpp"

namespace edh::worldsim {

namespace {

bool in_grid(const WorldState& s, int r, int c) { return r >= 0 && r < s.rows && c >= 0 && c < s.cols; }

bool cell_blocked(const WorldState& s, int r, int c) {
  if (!in_grid(s, r, c)) return true;
  for (const auto& o : s.objects) {
    if (!o.held() && o.row == r && o.col == c) return true;
  }
  return false;
}

ObjectInstance* find_object(WorldState& s, int id) {
  for (auto& o : s.objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

ObjectInstance* held_object(WorldState& s) {
  for (auto& o : s.objects) {
    if (o.held()) return &o;
  }
  return nullptr;
}

int next_slot(const WorldState& s, int r, int c) {
  int slot = 0;
  for (const auto& o : s.objects) {
    if (!o.held() && o.row == r && o.col == c) slot = std::max(slot, o.slot);
  }
  return slot + 1;
}

bool contains_anything(const WorldState& s, int id) {
  return std::any_of(s.objects.begin(), s.objects.end(),
                     [&](const ObjectInstance& o) { return o.container && *o.container == id; });
}

bool hidden_in_closed_container(const WorldState& s, const ObjectInstance& o) {
  if (!o.container) return false;
  const ObjectInstance* c = s.object(*o.container);
  return c != nullptr && s.affordances->openable.count(c->type) > 0 && (c->flags & kOpen) == 0;
}

// Cell seen at (depth, lateral) relative to the agent.
std::pair<int, int> view_cell(const AgentPose& a, int depth, int lateral) {
  auto [fr, fc] = heading_delta(a.heading);
  auto [rr, rc] = heading_delta(static_cast<Heading>((static_cast<int>(a.heading) + 1) % 4));
  return {a.row + depth * fr + lateral * rr, a.col + depth * fc + lateral * rc};
}

bool in_view(const AgentPose& a, int depth, int lateral) {
  return depth >= 1 && depth <= kViewDepth && lateral >= a.pan - 1 && lateral <= a.pan + 1;
}

ObjectInstance* visible_target(WorldState& s, const std::string& type) {
  for (int id : visible_objects(s)) {
    ObjectInstance* o = find_object(s, id);
    if (o->type == type) return o;
  }
  return nullptr;
}

FlagSet allowed_subset(const Affordances& aff, const std::string& type, FlagSet flags) {
  FlagSet out = 0;
  for (Flag f : kAllFlags) {
    if ((flags & f) && aff.flags_allowed(type, f)) out |= f;
  }
  return out;
}

StepOutcome navigate(WorldState& s, const std::string& name) {
  AgentPose& a = s.agent;
  if (name == "Forward" || name == "Backward") {
    auto [dr, dc] = heading_delta(a.heading);
    const int sign = name == "Forward" ? 1 : -1;
    const int r = a.row + sign * dr;
    const int c = a.col + sign * dc;
    if (cell_blocked(s, r, c)) return StepOutcome::NoopBlocked;
    a.row = r;
    a.col = c;
    if (ObjectInstance* h = held_object(s)) {
      h->row = r;
      h->col = c;
    }
  } else if (name == "Turn Left") {
    a.heading = static_cast<Heading>((static_cast<int>(a.heading) + 3) % 4);
  } else if (name == "Turn Right") {
    a.heading = static_cast<Heading>((static_cast<int>(a.heading) + 1) % 4);
  } else if (name == "Pan Left") {
    if (a.pan <= -1) return StepOutcome::NoopBlocked;
    --a.pan;
  } else if (name == "Pan Right") {
    if (a.pan >= 1) return StepOutcome::NoopBlocked;
    ++a.pan;
  }
  return StepOutcome::Ok;
}

StepOutcome interact(WorldState& s, const std::string& name, const std::string& type) {
  const Affordances& aff = *s.affordances;
  ObjectInstance* target = visible_target(s, type);
  if (target == nullptr) return StepOutcome::FailedPrecondition;
  ObjectInstance* held = held_object(s);
  const auto has = [&](const std::set<std::string>& set, const std::string& t) { return set.count(t) > 0; };

  if (name == "Pickup") {
    if (held != nullptr || !has(aff.pickupable, target->type) || contains_anything(s, target->id)) {
      return StepOutcome::FailedPrecondition;
    }
    target->flags |= kHeldByAgent;
    target->row = s.agent.row;
    target->col = s.agent.col;
    target->slot = -1;
    target->container.reset();
  } else if (name == "Place") {
    if (held == nullptr || !has(aff.receptacles, target->type)) return StepOutcome::FailedPrecondition;
    if (has(aff.openable, target->type) && (target->flags & kOpen) == 0) return StepOutcome::FailedPrecondition;
    held->flags &= static_cast<FlagSet>(~kHeldByAgent);
    held->row = target->row;
    held->col = target->col;
    held->slot = next_slot(s, target->row, target->col);
    held->container = target->id;
  } else if (name == "Open" || name == "Close") {
    const bool open = name == "Open";
    if (!has(aff.openable, target->type) || ((target->flags & kOpen) != 0) == open) {
      return StepOutcome::FailedPrecondition;
    }
    target->flags ^= kOpen;
  } else if (name == "Slice") {
    if (!has(aff.sliceable, target->type) || (target->flags & kSliced) != 0) return StepOutcome::FailedPrecondition;
    if (held == nullptr || !has(aff.slicing_tools, held->type)) return StepOutcome::FailedPrecondition;
    target->flags |= kSliced;
  } else if (name == "Pour") {
    if (held == nullptr || (held->flags & kFilled) == 0 || !has(aff.pour_targets, target->type)) {
      return StepOutcome::FailedPrecondition;
    }
    held->flags &= static_cast<FlagSet>(~kFilled);
    if (has(aff.fillable, target->type)) target->flags |= kFilled;
  } else if (name == "ToggleOn" || name == "ToggleOff") {
    const bool on = name == "ToggleOn";
    if (!has(aff.toggleable, target->type) || ((target->flags & kToggledOn) != 0) == on) {
      return StepOutcome::FailedPrecondition;
    }
    target->flags ^= kToggledOn;
    auto effect = aff.toggle_effects.find(target->type);
    if (on && effect != aff.toggle_effects.end()) {
      for (auto& o : s.objects) {
        if (!o.container || *o.container != target->id) continue;
        o.flags = static_cast<FlagSet>((o.flags | allowed_subset(aff, o.type, effect->second.add)) &
                                       ~effect->second.remove);
      }
    }
  }
  return StepOutcome::Ok;
}

}  // namespace

std::pair<int, int> heading_delta(Heading h) {
  switch (h) {
    case Heading::North: return {-1, 0};
    case Heading::East: return {0, 1};
    case Heading::South: return {1, 0};
    case Heading::West: return {0, -1};
  }
  return {0, 0};
}

const ObjectInstance* WorldState::held() const {
  for (const auto& o : objects) {
    if (o.held()) return &o;
  }
  return nullptr;
}

const ObjectInstance* WorldState::object(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

bool WorldState::operator==(const WorldState& other) const {
  const bool same_affordances = affordances == other.affordances ||
                                (affordances && other.affordances && *affordances == *other.affordances);
  return rows == other.rows && cols == other.cols && agent == other.agent && objects == other.objects &&
         step_count == other.step_count && rng_seed == other.rng_seed &&
         observation_channels == other.observation_channels && same_affordances;
}

WorldState reset(std::uint64_t seed, const ScenarioSpec& scenario) {
  if (scenario.rows <= 0 || scenario.cols <= 0) throw InvalidScenario("grid_size must be positive");
  const int type_count = static_cast<int>(object_types().size());
  if (scenario.observation_channels < kMinChannels + type_count) {
    throw InvalidScenario("observation_channels must be at least " + std::to_string(kMinChannels + type_count));
  }

  WorldState s;
  s.rows = scenario.rows;
  s.cols = scenario.cols;
  s.rng_seed = seed;
  s.observation_channels = scenario.observation_channels;
  s.affordances = std::make_shared<const Affordances>(scenario.affordances);
  s.agent.heading = scenario.agent.heading;

  Rng rng(seed);
  std::set<std::pair<int, int>> occupied;
  s.objects.resize(scenario.objects.size());
  for (std::size_t i = 0; i < scenario.objects.size(); ++i) {
    const ObjectSpec& spec = scenario.objects[i];
    if (object_type_index(spec.type) < 0) throw InvalidScenario("unknown object type '" + spec.type + "'");
    if (spec.flags & kHeldByAgent) throw InvalidScenario("objects cannot start held");
    if (!scenario.affordances.flags_allowed(spec.type, spec.flags)) {
      throw InvalidScenario("flags not allowed for type '" + spec.type + "'");
    }
    ObjectInstance& o = s.objects[i];
    o.id = static_cast<int>(i);
    o.type = spec.type;
    o.flags = spec.flags;
    if (spec.position) {
      auto [r, c] = *spec.position;
      if (!in_grid(s, r, c)) throw InvalidScenario("object " + std::to_string(i) + " lies outside the grid");
      if (!occupied.insert({r, c}).second) {
        throw InvalidScenario("objects collide at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      }
      o.row = r;
      o.col = c;
    }
  }

  if (scenario.agent.position) {
    auto [r, c] = *scenario.agent.position;
    if (!in_grid(s, r, c)) throw InvalidScenario("agent lies outside the grid");
    if (occupied.count({r, c})) throw InvalidScenario("agent starts on an occupied cell");
    s.agent.row = r;
    s.agent.col = c;
  }

  auto free_cells = [&] {
    std::vector<std::pair<int, int>> cells;
    for (int r = 0; r < s.rows; ++r) {
      for (int c = 0; c < s.cols; ++c) {
        if (occupied.count({r, c})) continue;
        if (scenario.agent.position && *scenario.agent.position == std::make_pair(r, c)) continue;
        cells.emplace_back(r, c);
      }
    }
    return cells;
  };

  for (std::size_t i = 0; i < scenario.objects.size(); ++i) {
    if (!scenario.objects[i].random_position) continue;
    auto cells = free_cells();
    if (cells.empty()) throw InvalidScenario("no free cell for object " + std::to_string(i));
    auto cell = cells[rng.below(cells.size())];
    occupied.insert(cell);
    s.objects[i].row = cell.first;
    s.objects[i].col = cell.second;
  }

  if (!scenario.agent.position) {
    auto cells = free_cells();
    if (cells.empty()) throw InvalidScenario("no free cell for the agent");
    auto cell = cells[rng.below(cells.size())];
    s.agent.row = cell.first;
    s.agent.col = cell.second;
  }

  for (std::size_t i = 0; i < scenario.objects.size(); ++i) {
    const ObjectSpec& spec = scenario.objects[i];
    if (!spec.on_type) continue;
    if (!scenario.affordances.receptacles.count(*spec.on_type)) {
      throw InvalidScenario("'" + *spec.on_type + "' is not a receptacle");
    }
    std::vector<int> hosts;
    for (std::size_t k = 0; k < scenario.objects.size(); ++k) {
      if (k != i && scenario.objects[k].type == *spec.on_type && !scenario.objects[k].on_type) {
        hosts.push_back(static_cast<int>(k));
      }
    }
    if (hosts.empty()) throw InvalidScenario("no '" + *spec.on_type + "' to place object " + std::to_string(i) + " on");
    const ObjectInstance& host = s.objects[static_cast<std::size_t>(hosts[rng.below(hosts.size())])];
    ObjectInstance& o = s.objects[i];
    o.row = host.row;
    o.col = host.col;
    o.container = host.id;
    o.slot = next_slot(s, host.row, host.col);
  }

  if (auto problem = check_invariants(s)) throw InvalidScenario(*problem);
  return s;
}

std::vector<int> visible_objects(const WorldState& s) {
  std::vector<std::tuple<int, int, int, int>> found;  // depth, lateral, slot, id
  for (const auto& o : s.objects) {
    if (o.held() || hidden_in_closed_container(s, o)) continue;
    for (int depth = 1; depth <= kViewDepth; ++depth) {
      for (int lateral = s.agent.pan - 1; lateral <= s.agent.pan + 1; ++lateral) {
        if (view_cell(s.agent, depth, lateral) == std::make_pair(o.row, o.col)) {
          found.emplace_back(depth, lateral, o.slot, o.id);
        }
      }
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<int> ids;
  ids.reserve(found.size());
  for (const auto& f : found) ids.push_back(std::get<3>(f));
  return ids;
}

Observation render_observation(const WorldState& s) {
  Observation obs;
  obs.channels = s.observation_channels;
  obs.feature_grid.assign(static_cast<std::size_t>(obs.channels * kViewSize * kViewSize), 0.0);
  obs.visible_object_ids = visible_objects(s);
  auto cell = [&](int ch, int r, int c) -> double& {
    return obs.feature_grid[static_cast<std::size_t>((ch * kViewSize + r) * kViewSize + c)];
  };

  std::map<std::pair<int, int>, std::vector<const ObjectInstance*>> by_cell;
  for (int id : obs.visible_object_ids) {
    const ObjectInstance* o = s.object(id);
    by_cell[{o->row, o->col}].push_back(o);
  }

  const double heading = static_cast<double>(static_cast<int>(s.agent.heading)) / 3.0;
  for (int er = 0; er < kViewSize; ++er) {
    for (int ec = 0; ec < kViewSize; ++ec) {
      cell(3, er, ec) = heading;
      const int depth = kViewSize - 1 - er;
      const int lateral = ec - kViewSize / 2;
      if (!in_view(s.agent, depth, lateral)) continue;
      auto [r, c] = view_cell(s.agent, depth, lateral);
      if (!in_grid(s, r, c)) continue;
      cell(0, er, ec) = 1.0;
      auto it = by_cell.find({r, c});
      if (it == by_cell.end()) continue;
      for (const ObjectInstance* o : it->second) {
        cell(1, er, ec) = std::max(cell(1, er, ec), static_cast<double>(o->flags) / 31.0);
        cell(kMinChannels + object_type_index(o->type), er, ec) = 1.0;
      }
    }
  }
  if (const ObjectInstance* h = s.held()) {
    cell(2, kViewSize - 1, kViewSize / 2) = 1.0;
    cell(kMinChannels + object_type_index(h->type), kViewSize - 1, kViewSize / 2) = 1.0;
  }
  return obs;
}

StepResult step(const WorldState& state, const ActionRef& action) {
  const ActionDef* def = find_action(action.action);
  if (def == nullptr) throw UnknownAction("unknown action '" + action.action + "'");
  if (def->requires_object && !action.object) {
    throw MissingObjectArgument("action '" + action.action + "' needs an object argument");
  }

  StepResult result;
  result.outcome = StepOutcome::Ok;
  if (def->kind == ActionKind::Navigation || def->kind == ActionKind::Interaction) {
    WorldState next = state;
    result.outcome =
        def->kind == ActionKind::Navigation ? navigate(next, def->name) : interact(next, def->name, *action.object);
    if (result.outcome == StepOutcome::Ok) {
      ++next.step_count;
      result.state = std::move(next);
    } else {
      result.state = state;
    }
  } else {
    result.state = state;
  }
  result.observation = render_observation(result.state);
  return result;
}

std::optional<std::string> check_invariants(const WorldState& s) {
  if (s.rows <= 0 || s.cols <= 0) return "grid_size must be positive";
  if (!in_grid(s, s.agent.row, s.agent.col)) return "agent outside the grid";
  if (s.agent.pan < -1 || s.agent.pan > 1) return "camera pan out of range";
  if (!s.affordances) return "missing affordance table";
  const Affordances& aff = *s.affordances;

  std::set<int> ids;
  std::set<std::tuple<int, int, int>> slots;
  int held = 0;
  for (const auto& o : s.objects) {
    const std::string who = "object " + std::to_string(o.id) + " (" + o.type + ")";
    if (!ids.insert(o.id).second) return "duplicate object id " + std::to_string(o.id);
    if (!aff.flags_allowed(o.type, o.flags)) return who + " carries flags its type does not afford";
    if (o.held()) {
      ++held;
      if (o.row != s.agent.row || o.col != s.agent.col || o.slot != -1 || o.container) {
        return who + " is held but not with the agent";
      }
      continue;
    }
    if (!in_grid(s, o.row, o.col)) return who + " outside the grid";
    if (o.slot < 0) return who + " has a negative slot";
    if ((o.slot == 0) != !o.container) return who + " slot and container disagree";
    if (!slots.insert({o.row, o.col, o.slot}).second) return who + " shares its cell slot";
    if (o.row == s.agent.row && o.col == s.agent.col) return who + " occupies the agent cell";
    if (o.container) {
      const ObjectInstance* c = s.object(*o.container);
      if (c == nullptr || c->held() || c->row != o.row || c->col != o.col || !aff.receptacles.count(c->type)) {
        return who + " has an invalid container";
      }
    }
  }
  if (held > 1) return "more than one object held";
  return std::nullopt;
}

Json to_json(const Observation& o) {
  Json nonzero = Json::array();
  for (std::size_t i = 0; i < o.feature_grid.size(); ++i) {
    if (o.feature_grid[i] != 0.0) nonzero.push_back(Json::array({i, o.feature_grid[i]}));
  }
  return Json{{"channels", o.channels}, {"nonzero", std::move(nonzero)}, {"visible", o.visible_object_ids}};
}

Observation observation_from_json(const Json& j, const std::string& path) {
  Observation o;
  try {
    o.channels = require(j, "channels", path).get<int>();
    if (o.channels <= 0) throw SchemaError(path + ".channels", "must be positive");
    o.feature_grid.assign(static_cast<std::size_t>(o.channels * kViewSize * kViewSize), 0.0);
    for (const auto& e : require(j, "nonzero", path)) {
      const auto index = e.at(0).get<std::size_t>();
      if (index >= o.feature_grid.size()) throw SchemaError(path + ".nonzero", "index out of range");
      o.feature_grid[index] = e.at(1).get<double>();
    }
    o.visible_object_ids = require(j, "visible", path).get<std::vector<int>>();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
  return o;
}

std::string observation_hash(const Observation& o) {
  std::string bytes(reinterpret_cast<const char*>(o.feature_grid.data()), o.feature_grid.size() * sizeof(double));
  for (int id : o.visible_object_ids) bytes += "|" + std::to_string(id);
  return to_hex(fnv1a64(bytes));
}

bool condition_holds(const WorldState& s, const Condition& c) {
  for (const auto& o : s.objects) {
    if (o.type != c.type) continue;
    if (c.flag && ((o.flags & *c.flag) != 0) != c.value) continue;
    if (c.inside) {
      const ObjectInstance* host = o.container ? s.object(*o.container) : nullptr;
      if (host == nullptr || host->type != *c.inside) continue;
    }
    return true;
  }
  return false;
}

bool subgoal_satisfied(const WorldState& s, const Subgoal& g) {
  return std::all_of(g.conditions.begin(), g.conditions.end(),
                     [&](const Condition& c) { return condition_holds(s, c); });
}

Simulator::Simulator(ScenarioSpec scenario, std::uint64_t seed) : scenario_(std::move(scenario)), seed_(seed) {
  reset();
}

void Simulator::reset() {
  state_ = worldsim::reset(seed_, scenario_);
  observation_ = render_observation(state_);
}

StepOutcome Simulator::step(const ActionRef& action) {
  StepResult r = worldsim::step(state_, action);
  state_ = std::move(r.state);
  observation_ = std::move(r.observation);
  return r.outcome;
}

}  // namespace edh::worldsim
