#include "edh/agent/rollout.hpp"

#include "edh/agent/data.hpp"
#include "edh/worldsim/world.hpp"

namespace edh::agent {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::StopToken: return "stop_token";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::SimulatorFailure: return "simulator_failure";
  }
  return "max_steps";
}

Trajectory rollout(const AgentModel& model, const corpus::TokenVocab& text_vocab, const corpus::EDHInstance& inst,
                   const RolloutOptions& options) {
  const ActionCodec& codec = model.codec();
  const int window = model.config().max_steps;
  nn::NoGradGuard no_grad;
  const nn::Context ctx;

  worldsim::WorldState state = corpus::replay_history(inst);
  std::vector<nn::Matrix> frames = {frame_row(inst.initial_observation)};
  std::vector<int> inputs = {ActionCodec::kStart};
  for (std::size_t i = 0; i < inst.action_history.size(); ++i) {
    frames.push_back(frame_row(inst.image_history[i]));
    inputs.push_back(codec.input_index(inst.action_history[i]));
  }
  worldsim::Observation current =
      inst.image_history.empty() ? inst.initial_observation : inst.image_history.back();

  ModelInput input;
  input.text = dialog_ids(inst, text_vocab, model.config().max_dialog_tokens);
  Trajectory traj;
  int failures = 0;
  for (int step = 0; step < options.max_steps; ++step) {
    const std::size_t start = frames.size() > static_cast<std::size_t>(window) ? frames.size() - window : 0;
    input.frames.resize(static_cast<Eigen::Index>(frames.size() - start), frames[0].cols());
    for (std::size_t t = start; t < frames.size(); ++t) input.frames.row(static_cast<Eigen::Index>(t - start)) = frames[t];
    input.actions.assign(inputs.begin() + static_cast<long>(start), inputs.end());

    const ModelOutput out = model.forward(input, ctx);
    const Eigen::Index last = out.action_logits.rows() - 1;
    const int action_cls = argmax_first(out.action_logits.value(), last);
    const nn::Matrix objects = out.object_logits.value().row(last).leftCols(codec.none_object());
    const worldsim::ActionRef action = codec.decode(action_cls, argmax_first(objects, 0));

    if (action.action == "Stop") {
      traj.actions.push_back(action);
      traj.observations.push_back(current);
      traj.outcomes.push_back(worldsim::StepOutcome::Ok);
      traj.stop_reason = StopReason::StopToken;
      return traj;
    }
    worldsim::StepResult r = worldsim::step(state, action);
    state = std::move(r.state);
    current = r.observation;
    traj.actions.push_back(action);
    traj.observations.push_back(r.observation);
    traj.outcomes.push_back(r.outcome);
    frames.push_back(frame_row(r.observation));
    inputs.push_back(codec.input_index(action));
    failures = r.outcome == worldsim::StepOutcome::Ok ? 0 : failures + 1;
    if (failures >= options.max_failures) {
      traj.stop_reason = StopReason::SimulatorFailure;
      return traj;
    }
  }
  traj.stop_reason = StopReason::MaxSteps;
  return traj;
}

}  // namespace edh::agent
