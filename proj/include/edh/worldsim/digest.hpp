#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edh/worldsim/world.hpp"

namespace edh::worldsim {

struct ObjectRecord {
  int id = 0;
  std::string type;
  int row = 0;
  int col = 0;
  int slot = 0;
  FlagSet flags = 0;
  std::optional<int> container;

  bool operator==(const ObjectRecord&) const = default;
};

// Physical content of a state: agent pose and objects sorted by id. The
// step counter and seed are bookkeeping and are left out, so two states that
// look the same compare equal however they were reached.
struct StateDigest {
  AgentPose agent;
  std::vector<ObjectRecord> objects;
  std::string hash;  // 16 hex digits over the canonical encoding

  bool operator==(const StateDigest&) const = default;
};

struct Change {
  int object_id = -1;  // -1 for the agent
  std::string field;   // "row", "col", "slot", "container", flag names, "heading", "pan"
  Json before;
  Json after;

  bool operator==(const Change&) const = default;
};

struct ChangeSet {
  std::vector<Change> changes;  // ordered by (object_id, field)

  bool empty() const { return changes.empty(); }
  bool operator==(const ChangeSet&) const = default;
};

StateDigest snapshot_state(const WorldState& state);
ChangeSet diff_states(const StateDigest& a, const StateDigest& b);

Json to_json(const StateDigest& d);
StateDigest digest_from_json(const Json& j, const std::string& path);
Json to_json(const ChangeSet& c);

}  // namespace edh::worldsim
