#include "edh/corpus/generate.hpp"

#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "edh/corpus/plan.hpp"
#include "edh/util/error.hpp"
#include "edh/util/rng.hpp"
#include "edh/worldsim/catalog.hpp"

namespace edh::corpus {

using worldsim::ActionRef;
using worldsim::StepOutcome;
using worldsim::WorldState;

namespace {

const std::vector<std::string> kNavOrder = {"Forward", "Turn Left", "Turn Right", "Pan Left", "Pan Right", "Backward"};

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string the(const std::string& type) { return "the " + object_words(type); }

std::string step_phrase(const ActionRef& a, Rng& rng) {
  const std::string obj = the(*a.object);
  if (a.action == "Pickup") return pick<std::string>({"pick up " + obj, "grab " + obj, "take " + obj}, rng);
  if (a.action == "Place") return pick<std::string>({"put it on " + obj, "set it down in " + obj, "place it in " + obj}, rng);
  if (a.action == "Open") return pick<std::string>({"open " + obj, "pull open " + obj}, rng);
  if (a.action == "Close") return pick<std::string>({"close " + obj, "shut " + obj}, rng);
  if (a.action == "Slice") return pick<std::string>({"slice " + obj, "cut " + obj + " into slices"}, rng);
  if (a.action == "Pour") return pick<std::string>({"pour it into " + obj, "empty it into " + obj}, rng);
  if (a.action == "ToggleOn") return pick<std::string>({"turn on " + obj, "switch on " + obj}, rng);
  if (a.action == "ToggleOff") return pick<std::string>({"turn off " + obj, "switch off " + obj}, rng);
  return a.action;
}

std::string clarification_question(const worldsim::Subgoal& g, Rng& rng) {
  const std::string obj = g.steps.empty() ? "thing" : object_words(*g.steps.front().object);
  return pick<std::string>({"where is the " + obj + " ?", "which " + obj + " should i use ?", "what should i do first ?",
                            "ok , anything else i should know ?"},
                           rng);
}

std::string clarification_answer(const worldsim::Subgoal& g, const WorldState& s, Rng& rng) {
  if (g.steps.empty()) return "just finish up .";
  const std::string& type = *g.steps.front().object;
  for (const auto& o : s.objects) {
    if (o.type != type) continue;
    if (o.held()) return "you are already holding it .";
    if (o.container) {
      return "the " + object_words(type) + " is in the " + object_words(s.object(*o.container)->type) + " .";
    }
    break;
  }
  return pick<std::string>({"look around the kitchen .", "it should be in plain sight .", "you will find it nearby ."},
                           rng);
}

using PoseKey = std::tuple<int, int, int, int>;

PoseKey pose_key(const WorldState& s) {
  return {s.agent.row, s.agent.col, static_cast<int>(s.agent.heading), s.agent.pan};
}

struct Recorder {
  WorldState state;
  GameplaySession* session;

  void say(Actor actor, std::string text) {
    session->events.push_back(Event{actor, ActionRef{"Text", std::nullopt}, std::move(text), std::nullopt});
  }

  void act(const ActionRef& a) {
    worldsim::StepResult r = worldsim::step(state, a);
    if (r.outcome != StepOutcome::Ok) {
      throw UnachievableTask("scripted action " + worldsim::to_string(a) + " did not succeed");
    }
    state = std::move(r.state);
    session->frames.push_back(worldsim::observation_hash(r.observation));
    session->events.push_back(
        Event{Actor::Follower, a, std::nullopt, static_cast<int>(session->frames.size()) - 1});
  }

  bool feasible(const std::string& nav) const {
    return worldsim::step(state, ActionRef{nav, std::nullopt}).outcome == StepOutcome::Ok;
  }

  // Two navigation actions that cancel out, leaving the world as it was.
  void detour(Rng& rng) {
    std::vector<std::pair<std::string, std::string>> options = {
        {"Turn Left", "Turn Right"}, {"Turn Right", "Turn Left"}, {"Pan Left", "Pan Right"},
        {"Pan Right", "Pan Left"},   {"Forward", "Backward"},     {"Backward", "Forward"}};
    rng.shuffle(options);
    for (const auto& [first, second] : options) {
      if (!feasible(first)) continue;
      act({first, std::nullopt});
      act({second, std::nullopt});
      return;
    }
  }
};

}  // namespace

std::string object_words(const std::string& type) {
  std::string t = worldsim::to_token(type);
  for (char& c : t) {
    if (c == '_') c = ' ';
  }
  return t;
}

std::optional<std::vector<ActionRef>> solve_interaction(const WorldState& start, const ActionRef& interaction) {
  struct Node {
    WorldState state;
    int parent;
    std::string via;
  };
  std::vector<Node> nodes;
  std::set<PoseKey> seen;
  nodes.push_back({start, -1, ""});
  seen.insert(pose_key(start));
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (worldsim::step(nodes[head].state, interaction).outcome == StepOutcome::Ok) {
      std::vector<ActionRef> path = {interaction};
      for (int i = static_cast<int>(head); nodes[static_cast<std::size_t>(i)].parent >= 0;
           i = nodes[static_cast<std::size_t>(i)].parent) {
        path.insert(path.begin(), ActionRef{nodes[static_cast<std::size_t>(i)].via, std::nullopt});
      }
      return path;
    }
    for (const auto& nav : kNavOrder) {
      worldsim::StepResult r = worldsim::step(nodes[head].state, ActionRef{nav, std::nullopt});
      if (r.outcome != StepOutcome::Ok || !seen.insert(pose_key(r.state)).second) continue;
      nodes.push_back({std::move(r.state), static_cast<int>(head), nav});
    }
  }
  return std::nullopt;
}

std::string instruction_text(const worldsim::Subgoal& goal, Rng& rng) {
  std::string text = pick<std::string>({goal.name + " .", "please " + goal.name + " .", "next you need to " + goal.name + " .",
                                        "can you " + goal.name + " ?", "i need you to " + goal.name + " , thanks ."},
                                       rng);
  std::set<std::string> used;
  for (const auto& s : goal.steps) used.insert(*s.object);
  std::vector<std::string> others;
  for (const auto& t : worldsim::object_types()) {
    if (!used.count(t)) others.push_back(t);
  }
  if (!others.empty() && rng.bernoulli(0.5)) {
    const std::string d = object_words(pick(others, rng));
    text += pick<std::string>({" ignore the " + d + " .", " the " + d + " can stay where it is .",
                               " don't worry about the " + d + " ."},
                              rng);
  }
  return text;
}

GameplaySession generate_session(std::uint64_t seed, const worldsim::ScenarioSpec& scenario,
                                 const worldsim::TaskSpec& task, const GenerationOptions& options) {
  if (options.nav_skew < 0.0 || options.nav_skew >= 1.0) throw ConfigError("nav_skew must lie in [0, 1)");
  GameplaySession session;
  session.session_id = task.name + "-" + scenario.name + "-" + std::to_string(seed);
  session.seed = seed;
  session.scenario = scenario;
  session.task = task;

  const WorldState initial = worldsim::reset(seed, scenario);

  // Solve every subgoal on a scratch copy first so detours can be budgeted
  // against the whole session.
  std::vector<std::vector<ActionRef>> plans;
  WorldState scratch = initial;
  int nav_count = 0;
  int interaction_count = 0;
  for (const auto& goal : task.subgoals) {
    std::vector<ActionRef> acts;
    for (const auto& s : goal.steps) {
      auto path = solve_interaction(scratch, s);
      if (!path) {
        throw UnachievableTask("no way to perform " + worldsim::to_string(s) + " for subgoal '" + goal.name + "'");
      }
      for (const auto& a : *path) {
        scratch = worldsim::step(scratch, a).state;
        (worldsim::is_navigation(a) ? nav_count : interaction_count) += 1;
      }
      acts.insert(acts.end(), path->begin(), path->end());
    }
    if (!worldsim::subgoal_satisfied(scratch, goal)) {
      throw UnachievableTask("recipe for subgoal '" + goal.name + "' does not satisfy its conditions");
    }
    plans.push_back(std::move(acts));
  }

  Rng rng(seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  std::map<std::pair<std::size_t, std::size_t>, int> detours;  // (subgoal, before action j) -> pairs
  if (options.nav_skew > 0.0 && interaction_count > 0) {
    const double target = options.nav_skew / (1.0 - options.nav_skew) * interaction_count;
    const long pairs = std::lround((target - nav_count) / 2.0);
    std::vector<std::pair<std::size_t, std::size_t>> gaps;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      for (std::size_t j = 0; j < plans[k].size(); ++j) gaps.emplace_back(k, j);
    }
    for (long p = 0; p < pairs; ++p) ++detours[pick(gaps, rng)];
  }

  Recorder rec{initial, &session};
  session.frames.push_back(worldsim::observation_hash(worldsim::render_observation(initial)));
  session.initial_digest = worldsim::snapshot_state(initial);

  if (task.subgoals.empty()) {
    rec.say(Actor::Commander, pick<std::string>({"hi , there is nothing to do today .", "hello , all done here ."}, rng));
    rec.say(Actor::Follower, "ok .");
  }
  for (std::size_t k = 0; k < task.subgoals.size(); ++k) {
    const auto& goal = task.subgoals[k];
    rec.say(Actor::Commander, instruction_text(goal, rng));
    if (rng.bernoulli(options.clarify_probability)) {
      rec.say(Actor::Follower, clarification_question(goal, rng));
      rec.say(Actor::Commander, clarification_answer(goal, rec.state, rng));
    }
    for (std::size_t j = 0; j < plans[k].size(); ++j) {
      auto d = detours.find({k, j});
      for (int n = 0; d != detours.end() && n < d->second; ++n) rec.detour(rng);
      rec.act(plans[k][j]);
    }
  }
  if (!task.subgoals.empty()) {
    rec.say(Actor::Follower, pick<std::string>({"done .", "all finished .", "is that everything ?"}, rng));
    rec.say(Actor::Commander, pick<std::string>({"great work , thanks .", "that's all , thank you ."}, rng));
  }
  session.final_digest = worldsim::snapshot_state(rec.state);
  return session;
}

std::vector<SimplificationPair> synthetic_simplification_pairs(std::uint64_t seed, std::size_t count) {
  std::vector<ActionRef> pool;
  std::set<ActionRef> seen;
  for (const auto& name : worldsim::builtin_task_names()) {
    for (const auto& g : worldsim::builtin_task(name).subgoals) {
      for (const auto& s : g.steps) {
        if (seen.insert(s).second) pool.push_back(s);
      }
    }
  }
  const std::vector<std::string> openers = {"could you please", "hey ,", "when you get a chance ,", "alright ,", ""};
  const std::vector<std::string> connectors = {"then", "after that", "and then", "next"};
  Rng rng(seed);
  std::vector<SimplificationPair> out;
  std::set<std::string> verbose_seen;
  for (std::size_t attempts = 0; out.size() < count; ++attempts) {
    if (attempts > 100 * count) throw ConfigError("cannot produce that many distinct simplification pairs");
    const std::size_t len = 1 + static_cast<std::size_t>(rng.below(3));
    Plan plan;
    std::string verbose = pick(openers, rng);
    for (std::size_t i = 0; i < len; ++i) {
      const ActionRef& a = pick(pool, rng);
      plan.steps.push_back({a.action, *a.object});
      if (!verbose.empty()) verbose += ' ';
      if (i > 0) verbose += pick(connectors, rng) + " ";
      verbose += step_phrase(a, rng);
    }
    verbose += " .";
    if (!verbose_seen.insert(verbose).second) continue;
    out.push_back({verbose, plan_to_string(plan)});
  }
  return out;
}

}  // namespace edh::corpus
