#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edh/corpus/session.hpp"
#include "edh/util/rng.hpp"
#include "edh/worldsim/world.hpp"

namespace edh::corpus {

struct GenerationOptions {
  // Target share of navigation among the Follower's navigation+interaction
  // actions. Reached by inserting pose-preserving detour pairs; 0 keeps the
  // solver's shortest paths.
  double nav_skew = 0.0;
  double clarify_probability = 0.3;
};

// Shortest navigation path (breadth-first over agent poses) to a pose where
// `interaction` succeeds, followed by the interaction itself. nullopt when no
// reachable pose works.
std::optional<std::vector<worldsim::ActionRef>> solve_interaction(const worldsim::WorldState& state,
                                                                  const worldsim::ActionRef& interaction);

// Scripted Commander/Follower episode. Throws UnachievableTask when the
// solver cannot complete every subgoal.
GameplaySession generate_session(std::uint64_t seed, const worldsim::ScenarioSpec& scenario,
                                 const worldsim::TaskSpec& task, const GenerationOptions& options = {});

// Templated Commander instruction for one subgoal, with distractor phrasing.
std::string instruction_text(const worldsim::Subgoal& goal, Rng& rng);

// Natural-language name of an object type: "CoffeeMachine" -> "coffee machine".
std::string object_words(const std::string& type);

struct SimplificationPair {
  std::string verbose;     // wordy instruction
  std::string simplified;  // plan-style directive, e.g. "pickup knife slice bread"
};

// Template-generated pairs over the interactions used by the built-in tasks.
std::vector<SimplificationPair> synthetic_simplification_pairs(std::uint64_t seed, std::size_t count);

}  // namespace edh::corpus
