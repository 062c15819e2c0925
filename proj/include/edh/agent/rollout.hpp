#pragma once

#include <functional>
#include <string>
#include <vector>

#include "edh/agent/model.hpp"
#include "edh/corpus/edh.hpp"

namespace edh::agent {

enum class StopReason { StopToken, MaxSteps, SimulatorFailure };
const char* to_string(StopReason r);

// Predicted A_F with the view after each action.
struct Trajectory {
  std::vector<worldsim::ActionRef> actions;
  std::vector<worldsim::Observation> observations;
  std::vector<worldsim::StepOutcome> outcomes;
  StopReason stop_reason = StopReason::MaxSteps;
};

struct RolloutOptions {
  int max_steps = 40;
  // Consecutive failed or blocked steps before giving up.
  int max_failures = 10;
};

// Replays the instance history, then repeatedly predicts the next action at
// the last step, executes it and appends the resulting view. Dialog stays
// fixed. Stops on Stop, max_steps or max_failures.
Trajectory rollout(const AgentModel& model, const corpus::TokenVocab& text_vocab, const corpus::EDHInstance& instance,
                   const RolloutOptions& options = {});

}  // namespace edh::agent
