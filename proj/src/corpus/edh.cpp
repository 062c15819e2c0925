#include "edh/corpus/edh.hpp"

#include "edh/corpus/vocab.hpp"
#include "edh/util/error.hpp"
#include "edh/worldsim/digest.hpp"

namespace edh::corpus {

using worldsim::ActionRef;
using worldsim::Observation;

namespace {

bool is_physical(const Event& e) {
  return e.actor == Actor::Follower && (worldsim::is_navigation(e.action) || worldsim::is_interaction(e.action));
}

Json actions_json(const std::vector<ActionRef>& actions) {
  Json j = Json::array();
  for (const auto& a : actions) j.push_back(worldsim::to_json(a));
  return j;
}

Json observations_json(const std::vector<Observation>& obs) {
  Json j = Json::array();
  for (const auto& o : obs) j.push_back(worldsim::to_json(o));
  return j;
}

std::vector<ActionRef> actions_from(const Json& j, const std::string& path) {
  std::vector<ActionRef> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(worldsim::action_ref_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<Observation> observations_from(const Json& j, const std::string& path) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(worldsim::observation_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> instance_boundaries(const GameplaySession& session) {
  std::vector<std::size_t> out;
  std::optional<std::size_t> open_turn;
  bool has_interaction = false;
  auto close = [&] {
    if (open_turn && has_interaction) out.push_back(*open_turn);
  };
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const Event& e = session.events[i];
    if (e.actor == Actor::Commander && e.is_dialog()) {
      close();
      open_turn = i;
      has_interaction = false;
    } else if (e.actor == Actor::Follower && worldsim::is_interaction(e.action)) {
      has_interaction = true;
    }
  }
  close();
  return out;
}

std::vector<EDHInstance> build_edh_instances(const GameplaySession& session) {
  worldsim::WorldState state = worldsim::reset(session.seed, session.scenario);
  if (worldsim::snapshot_state(state) != session.initial_digest) {
    throw ReplayMismatch(session.session_id + ": initial state does not match the recorded digest");
  }
  std::vector<Observation> observations = {worldsim::render_observation(state)};
  std::vector<worldsim::StateDigest> digests = {worldsim::snapshot_state(state)};
  if (session.frames.empty() || worldsim::observation_hash(observations[0]) != session.frames[0]) {
    throw ReplayMismatch(session.session_id + ": initial frame differs from the recording");
  }
  // step index (1-based count of physical actions) at each event
  std::vector<int> steps_before(session.events.size(), 0);
  std::vector<ActionRef> actions;
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const Event& e = session.events[i];
    steps_before[i] = static_cast<int>(actions.size());
    if (!is_physical(e)) continue;
    worldsim::StepResult r = worldsim::step(state, e.action);
    state = std::move(r.state);
    const std::size_t frame = static_cast<std::size_t>(*e.frame_ref);
    if (frame >= session.frames.size() || worldsim::observation_hash(r.observation) != session.frames[frame]) {
      throw ReplayMismatch(session.session_id + ": frame " + std::to_string(frame) + " differs from the recording");
    }
    actions.push_back(e.action);
    observations.push_back(std::move(r.observation));
    digests.push_back(worldsim::snapshot_state(state));
  }
  if (digests.back() != session.final_digest) {
    throw ReplayMismatch(session.session_id + ": final state does not match the recorded digest");
  }

  const auto bounds = instance_boundaries(session);
  std::vector<EDHInstance> out;
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const std::size_t start_event = bounds[k];
    const int t_i = steps_before[start_event];
    const int t_f = k + 1 < bounds.size() ? steps_before[bounds[k + 1]] : static_cast<int>(actions.size());

    EDHInstance inst;
    inst.instance_id = session.session_id + "-" + std::to_string(k);
    inst.session_id = session.session_id;
    inst.task_name = session.task.name;
    inst.seed = session.seed;
    inst.scenario = session.scenario;
    for (std::size_t i = 0; i <= start_event; ++i) {
      const Event& e = session.events[i];
      if (e.is_dialog()) inst.dialog_history.push_back({e.actor, *e.utterance});
    }
    inst.initial_observation = observations[0];
    for (int t = 0; t < t_i; ++t) {
      inst.action_history.push_back(actions[static_cast<std::size_t>(t)]);
      inst.image_history.push_back(observations[static_cast<std::size_t>(t + 1)]);
    }
    for (int t = t_i; t < t_f; ++t) {
      const ActionRef& a = actions[static_cast<std::size_t>(t)];
      inst.future_actions.push_back(a);
      inst.future_observations.push_back(observations[static_cast<std::size_t>(t + 1)]);
      if (worldsim::is_interaction(a)) inst.reference_actions.push_back(a);
    }
    inst.t_i = t_i;
    inst.t_f = t_f;
    inst.initial_digest = digests[0];
    inst.final_digest = digests[static_cast<std::size_t>(t_f)];
    out.push_back(std::move(inst));
  }
  return out;
}

Plan extract_plan(const EDHInstance& instance) {
  Plan p;
  for (const auto& a : instance.reference_actions) {
    if (worldsim::is_interaction(a) && a.object) p.steps.push_back({a.action, *a.object});
  }
  return p;
}

worldsim::WorldState replay_history(const EDHInstance& instance) {
  worldsim::WorldState s = worldsim::reset(instance.seed, instance.scenario);
  for (const auto& a : instance.action_history) s = worldsim::step(s, a).state;
  return s;
}

std::vector<std::string> dialog_tokens(const EDHInstance& instance) {
  std::vector<std::string> out;
  for (const auto& turn : instance.dialog_history) {
    out.push_back(turn.actor == Actor::Commander ? "commander" : "follower");
    out.push_back(":");
    for (auto& w : tokenize(turn.utterance)) out.push_back(std::move(w));
  }
  return out;
}

Json export_instance(const EDHInstance& inst) {
  Json j;
  j["schema_version"] = kInstanceSchemaVersion;
  j["instance_id"] = inst.instance_id;
  j["session_id"] = inst.session_id;
  j["task"] = inst.task_name;
  j["seed"] = inst.seed;
  j["scenario"] = to_json(inst.scenario);
  Json dialog = Json::array();
  for (const auto& t : inst.dialog_history) {
    dialog.push_back(Json{{"actor", std::string(to_string(t.actor))}, {"utterance", t.utterance}});
  }
  j["dialog_history"] = std::move(dialog);
  j["initial_observation"] = worldsim::to_json(inst.initial_observation);
  j["action_history"] = actions_json(inst.action_history);
  j["image_history"] = observations_json(inst.image_history);
  j["future_actions"] = actions_json(inst.future_actions);
  j["future_observations"] = observations_json(inst.future_observations);
  j["reference_actions"] = actions_json(inst.reference_actions);
  j["t_i"] = inst.t_i;
  j["t_f"] = inst.t_f;
  j["initial_digest"] = to_json(inst.initial_digest);
  j["final_digest"] = to_json(inst.final_digest);
  return j;
}

EDHInstance ingest_instance(const Json& doc) {
  EDHInstance inst;
  try {
    if (require(doc, "schema_version", "").get<int>() != kInstanceSchemaVersion) {
      throw SchemaError("schema_version", "unsupported version");
    }
    inst.instance_id = require(doc, "instance_id", "").get<std::string>();
    inst.session_id = require(doc, "session_id", "").get<std::string>();
    inst.task_name = require(doc, "task", "").get<std::string>();
    inst.seed = require(doc, "seed", "").get<std::uint64_t>();
    inst.scenario = worldsim::scenario_from_json(require(doc, "scenario", ""));
    const Json& dialog = require(doc, "dialog_history", "");
    for (std::size_t i = 0; i < dialog.size(); ++i) {
      const std::string p = "dialog_history[" + std::to_string(i) + "]";
      const std::string actor = require(dialog[i], "actor", p).get<std::string>();
      if (actor != "Commander" && actor != "Follower") throw SchemaError(p + ".actor", "expected Commander or Follower");
      inst.dialog_history.push_back(
          {actor == "Commander" ? Actor::Commander : Actor::Follower, require(dialog[i], "utterance", p).get<std::string>()});
    }
    inst.initial_observation = worldsim::observation_from_json(require(doc, "initial_observation", ""), "initial_observation");
    inst.action_history = actions_from(require(doc, "action_history", ""), "action_history");
    inst.image_history = observations_from(require(doc, "image_history", ""), "image_history");
    inst.future_actions = actions_from(require(doc, "future_actions", ""), "future_actions");
    inst.future_observations = observations_from(require(doc, "future_observations", ""), "future_observations");
    inst.reference_actions = actions_from(require(doc, "reference_actions", ""), "reference_actions");
    inst.t_i = require(doc, "t_i", "").get<int>();
    inst.t_f = require(doc, "t_f", "").get<int>();
    inst.initial_digest = worldsim::digest_from_json(require(doc, "initial_digest", ""), "initial_digest");
    inst.final_digest = worldsim::digest_from_json(require(doc, "final_digest", ""), "final_digest");
  } catch (const Json::exception& e) {
    throw SchemaError("", e.what());
  }
  if (inst.action_history.size() != inst.image_history.size()) {
    throw SchemaError("image_history", "must have one observation per history action");
  }
  if (inst.future_actions.size() != inst.future_observations.size()) {
    throw SchemaError("future_observations", "must have one observation per future action");
  }
  if (inst.t_i != static_cast<int>(inst.action_history.size()) ||
      inst.t_f != inst.t_i + static_cast<int>(inst.future_actions.size())) {
    throw SchemaError("t_f", "step indices disagree with history lengths");
  }
  for (std::size_t i = 0; i < inst.reference_actions.size(); ++i) {
    if (!worldsim::is_interaction(inst.reference_actions[i])) {
      throw SchemaError("reference_actions[" + std::to_string(i) + "]", "only interaction actions are allowed");
    }
  }
  return inst;
}

}  // namespace edh::corpus
