#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edh/corpus/plan.hpp"
#include "edh/corpus/session.hpp"
#include "edh/worldsim/world.hpp"

namespace edh::corpus {

inline constexpr int kInstanceSchemaVersion = 1;

struct DialogTurn {
  Actor actor = Actor::Commander;
  std::string utterance;

  bool operator==(const DialogTurn&) const = default;
};

// One supervised slice of a session. Steps are counted in Follower
// navigation/interaction actions: the history holds steps 1..t_i, the future
// steps t_i+1..t_f.
struct EDHInstance {
  std::string instance_id;
  std::string session_id;
  std::string task_name;
  std::uint64_t seed = 0;
  worldsim::ScenarioSpec scenario;

  std::vector<DialogTurn> dialog_history;
  worldsim::Observation initial_observation;                 // view before step 1
  std::vector<worldsim::ActionRef> action_history;           // A_H
  std::vector<worldsim::Observation> image_history;          // I_H, view after each A_H step
  std::vector<worldsim::ActionRef> future_actions;           // steps t_i+1..t_f, navigation included
  std::vector<worldsim::Observation> future_observations;    // view after each future step
  std::vector<worldsim::ActionRef> reference_actions;        // A^I_R, interactions among the future steps
  int t_i = 0;
  int t_f = 0;
  worldsim::StateDigest initial_digest;  // S^E, session state at step 0
  worldsim::StateDigest final_digest;    // F^E, state after step t_f
};

// Event indices of the Commander turns that open an instance: each Commander
// dialog turn followed by at least one Follower interaction before the next
// Commander turn.
std::vector<std::size_t> instance_boundaries(const GameplaySession& session);

// Replays the session, checking every recorded frame, and slices it into
// instances. Throws ReplayMismatch when a frame or digest disagrees.
std::vector<EDHInstance> build_edh_instances(const GameplaySession& session);

Plan extract_plan(const EDHInstance& instance);

// World state after replaying the instance's action history from S^E.
worldsim::WorldState replay_history(const EDHInstance& instance);

// All dialog turns joined into one utterance stream ("commander : ...").
std::vector<std::string> dialog_tokens(const EDHInstance& instance);

Json export_instance(const EDHInstance& instance);
EDHInstance ingest_instance(const Json& document);

}  // namespace edh::corpus
