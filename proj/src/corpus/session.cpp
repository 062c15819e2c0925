#include "edh/corpus/session.hpp"

#include "edh/util/error.hpp"

namespace edh::corpus {

std::string_view to_string(Actor a) { return a == Actor::Commander ? "Commander" : "Follower"; }

bool operator==(const GameplaySession& a, const GameplaySession& b) {
  return a.session_id == b.session_id && a.seed == b.seed && to_json(a.scenario) == to_json(b.scenario) &&
         to_json(a.task) == to_json(b.task) && a.events == b.events && a.frames == b.frames &&
         a.initial_digest == b.initial_digest && a.final_digest == b.final_digest;
}

Json export_session(const GameplaySession& s) {
  Json j;
  j["schema_version"] = kSessionSchemaVersion;
  j["session_id"] = s.session_id;
  j["seed"] = s.seed;
  j["scenario"] = to_json(s.scenario);
  j["task"] = to_json(s.task);
  Json events = Json::array();
  for (const auto& e : s.events) {
    Json ej;
    ej["actor"] = std::string(to_string(e.actor));
    ej["action"] = worldsim::to_json(e.action);
    ej["utterance"] = e.utterance ? Json(*e.utterance) : Json(nullptr);
    ej["frame_ref"] = e.frame_ref ? Json(*e.frame_ref) : Json(nullptr);
    events.push_back(std::move(ej));
  }
  j["events"] = std::move(events);
  j["frames"] = s.frames;
  j["initial_digest"] = to_json(s.initial_digest);
  j["final_digest"] = to_json(s.final_digest);
  return j;
}

namespace {

GameplaySession parse_session(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("", "session document must be an object");
  const Json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kSessionSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version");
  }
  GameplaySession s;
  s.session_id = require(doc, "session_id", "").get<std::string>();
  s.seed = require(doc, "seed", "").get<std::uint64_t>();
  try {
    s.scenario = worldsim::scenario_from_json(require(doc, "scenario", ""));
  } catch (const SchemaError& e) {
    throw SchemaError("scenario." + e.field(), e.what());
  }
  s.task = worldsim::task_from_json(require(doc, "task", ""), "task");

  const Json& frames = require(doc, "frames", "");
  if (!frames.is_array()) throw SchemaError("frames", "expected an array");
  for (const auto& f : frames) s.frames.push_back(f.get<std::string>());

  const Json& events = require(doc, "events", "");
  if (!events.is_array() || events.empty()) throw SchemaError("events", "expected a non-empty array");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string p = "events[" + std::to_string(i) + "]";
    const Json& ej = events[i];
    Event e;
    const std::string actor = require(ej, "actor", p).get<std::string>();
    if (actor == "Commander") {
      e.actor = Actor::Commander;
    } else if (actor == "Follower") {
      e.actor = Actor::Follower;
    } else {
      throw SchemaError(p + ".actor", "expected Commander or Follower");
    }
    e.action = worldsim::action_ref_from_json(require(ej, "action", p), p + ".action");
    const auto* def = worldsim::find_action(e.action.action);
    if (def == nullptr) throw SchemaError(p + ".action.action", "unknown action '" + e.action.action + "'");
    if (def->requires_object && !e.action.object) throw SchemaError(p + ".action.object", "interaction needs an object");
    if (ej.contains("utterance") && !ej.at("utterance").is_null()) e.utterance = ej.at("utterance").get<std::string>();
    if (ej.contains("frame_ref") && !ej.at("frame_ref").is_null()) e.frame_ref = ej.at("frame_ref").get<int>();

    if (def->kind == worldsim::ActionKind::Dialog && !e.utterance) {
      throw SchemaError(p + ".utterance", "dialog events must carry an utterance");
    }
    const bool physical =
        def->kind == worldsim::ActionKind::Navigation || def->kind == worldsim::ActionKind::Interaction;
    if (physical && e.actor != Actor::Follower) throw SchemaError(p + ".actor", "only the Follower acts in the world");
    if (physical && !e.frame_ref) throw SchemaError(p + ".frame_ref", "Follower actions need a frame reference");
    if (e.frame_ref && (*e.frame_ref < 0 || *e.frame_ref >= static_cast<int>(s.frames.size()))) {
      throw SchemaError(p + ".frame_ref", "frame index out of range");
    }
    s.events.push_back(std::move(e));
  }
  s.initial_digest = worldsim::digest_from_json(require(doc, "initial_digest", ""), "initial_digest");
  s.final_digest = worldsim::digest_from_json(require(doc, "final_digest", ""), "final_digest");
  return s;
}

}  // namespace

GameplaySession ingest_session(const Json& document) {
  try {
    return parse_session(document);
  } catch (const Json::exception& e) {
    throw SchemaError("", e.what());
  }
}

std::vector<worldsim::ActionRef> physical_actions(const GameplaySession& s) {
  std::vector<worldsim::ActionRef> out;
  for (const auto& e : s.events) {
    if (e.actor == Actor::Follower && (worldsim::is_navigation(e.action) || worldsim::is_interaction(e.action))) {
      out.push_back(e.action);
    }
  }
  return out;
}

std::string split_for_seed(std::uint64_t seed) { return seed % 2 == 0 ? "train" : "valid_seen"; }

}  // namespace edh::corpus
