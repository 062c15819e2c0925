#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edh/worldsim/scenario.hpp"

namespace edh::worldsim {

inline constexpr int kViewSize = 7;
inline constexpr int kViewDepth = 3;
inline constexpr int kMinChannels = 4;  // plus one channel per object type

struct AgentPose {
  int row = 0;
  int col = 0;
  Heading heading = Heading::North;
  int pan = 0;  // -1, 0 or +1

  bool operator==(const AgentPose&) const = default;
};

struct ObjectInstance {
  int id = 0;
  std::string type;
  int row = 0;
  int col = 0;
  // 0 = standing in the cell, >= 1 = inside a container, -1 = held.
  int slot = 0;
  FlagSet flags = 0;
  std::optional<int> container;

  bool held() const { return (flags & kHeldByAgent) != 0; }
  bool operator==(const ObjectInstance&) const = default;
};

struct WorldState {
  int rows = 0;
  int cols = 0;
  AgentPose agent;
  std::vector<ObjectInstance> objects;
  std::uint64_t step_count = 0;
  std::uint64_t rng_seed = 0;
  int observation_channels = 16;
  std::shared_ptr<const Affordances> affordances;

  const ObjectInstance* held() const;
  const ObjectInstance* object(int id) const;

  bool operator==(const WorldState& other) const;
};

// Channel layout per 7x7 ego-centric cell, agent at row 6 / column 3 facing
// up the grid:
//   0  cell lies in the field of view
//   1  object state flags of the cell (max over objects, scaled to [0, 1])
//   2  agent holds something (agent cell only)
//   3  heading / 3 (constant plane)
//   4+ object type one-hot; the held item is drawn in the agent cell
struct Observation {
  int channels = 0;
  std::vector<double> feature_grid;  // channels * 7 * 7, channel-major
  std::vector<int> visible_object_ids;

  double at(int channel, int row, int col) const {
    return feature_grid[static_cast<std::size_t>((channel * kViewSize + row) * kViewSize + col)];
  }
  bool operator==(const Observation&) const = default;
};

struct StepResult {
  WorldState state;
  Observation observation;
  StepOutcome outcome = StepOutcome::Ok;
};

WorldState reset(std::uint64_t seed, const ScenarioSpec& scenario);

StepResult step(const WorldState& state, const ActionRef& action);

Observation render_observation(const WorldState& state);

// Ids of objects in the field of view, nearest first: ordered by depth,
// then lateral offset, then slot, then id. Held objects and objects inside
// closed containers are not visible.
std::vector<int> visible_objects(const WorldState& state);

// Empty when the state satisfies every structural invariant, otherwise a
// description of the first violation found.
std::optional<std::string> check_invariants(const WorldState& state);

// Sparse encoding: {"channels", "nonzero": [[index, value], ...], "visible"}.
Json to_json(const Observation& o);
Observation observation_from_json(const Json& j, const std::string& path);
// Content hash used to check recorded frames against a replay.
std::string observation_hash(const Observation& o);

bool condition_holds(const WorldState& state, const Condition& c);
bool subgoal_satisfied(const WorldState& state, const Subgoal& g);

// Grid cell offset for one step in heading `h`.
std::pair<int, int> heading_delta(Heading h);

// Stateful wrapper for closed-loop use.
class Simulator {
 public:
  Simulator(ScenarioSpec scenario, std::uint64_t seed);

  void reset();
  StepOutcome step(const ActionRef& action);

  const WorldState& state() const { return state_; }
  const Observation& observation() const { return observation_; }
  const ScenarioSpec& scenario() const { return scenario_; }

 private:
  ScenarioSpec scenario_;
  std::uint64_t seed_;
  WorldState state_;
  Observation observation_;
};

}  // namespace edh::worldsim
