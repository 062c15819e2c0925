#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edh/worldsim/digest.hpp"
#include "edh/worldsim/scenario.hpp"

namespace edh::corpus {

inline constexpr int kSessionSchemaVersion = 1;

enum class Actor { Commander, Follower };

std::string_view to_string(Actor a);

struct Event {
  Actor actor = Actor::Commander;
  worldsim::ActionRef action;
  std::optional<std::string> utterance;
  std::optional<int> frame_ref;  // index into GameplaySession::frames

  bool is_dialog() const { return action.action == "Text"; }
  bool operator==(const Event&) const = default;
};

struct GameplaySession {
  std::string session_id;
  std::uint64_t seed = 0;
  worldsim::ScenarioSpec scenario;
  worldsim::TaskSpec task;
  std::vector<Event> events;
  // Observation hashes: frames[0] is the initial view, frames[k] the view
  // after the k-th Follower navigation/interaction action.
  std::vector<std::string> frames;
  worldsim::StateDigest initial_digest;
  worldsim::StateDigest final_digest;
};

bool operator==(const GameplaySession& a, const GameplaySession& b);

Json export_session(const GameplaySession& s);
// Throws SchemaError naming the offending field.
GameplaySession ingest_session(const Json& document);

// Follower navigation + interaction actions in order.
std::vector<worldsim::ActionRef> physical_actions(const GameplaySession& s);

// "train" for even seeds, "valid_seen" for odd seeds.
std::string split_for_seed(std::uint64_t seed);

}  // namespace edh::corpus
