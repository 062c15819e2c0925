#include "edh/agent/data.hpp"

#include "edh/util/error.hpp"

namespace edh::agent {

nn::Matrix frame_row(const worldsim::Observation& obs) {
  nn::Matrix m(1, static_cast<Eigen::Index>(obs.feature_grid.size()));
  for (std::size_t i = 0; i < obs.feature_grid.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = obs.feature_grid[i];
  return m;
}

std::vector<int> dialog_ids(const corpus::EDHInstance& instance, const corpus::TokenVocab& vocab, int max_tokens) {
  std::vector<int> ids = vocab.encode(corpus::dialog_tokens(instance));
  if (static_cast<int>(ids.size()) > max_tokens) ids.erase(ids.begin(), ids.end() - max_tokens);
  if (ids.empty()) ids.push_back(corpus::TokenVocab::kPad);
  return ids;
}

AgentExample make_example(const corpus::EDHInstance& inst, const AgentModel& model,
                          const corpus::TokenVocab& text_vocab) {
  const ActionCodec& codec = model.codec();
  std::vector<const worldsim::Observation*> obs = {&inst.initial_observation};
  std::vector<worldsim::ActionRef> acts;
  for (std::size_t i = 0; i < inst.action_history.size(); ++i) {
    acts.push_back(inst.action_history[i]);
    obs.push_back(&inst.image_history[i]);
  }
  for (std::size_t i = 0; i < inst.future_actions.size(); ++i) {
    acts.push_back(inst.future_actions[i]);
    obs.push_back(&inst.future_observations[i]);
  }
  const int total = static_cast<int>(obs.size());
  const int start = std::max(0, total - model.config().max_steps);
  const int steps = total - start;

  AgentExample ex;
  ex.instance_id = inst.instance_id;
  ex.input.text = dialog_ids(inst, text_vocab, model.config().max_dialog_tokens);
  ex.input.frames.resize(steps, static_cast<Eigen::Index>(inst.initial_observation.feature_grid.size()));
  const worldsim::ActionRef stop{"Stop", std::nullopt};
  for (int t = start; t < total; ++t) {
    const auto row = static_cast<Eigen::Index>(t - start);
    ex.input.frames.row(row) = frame_row(*obs[static_cast<std::size_t>(t)]);
    ex.input.actions.push_back(t == 0 ? ActionCodec::kStart : codec.input_index(acts[static_cast<std::size_t>(t - 1)]));
    const worldsim::ActionRef& next = t < total - 1 ? acts[static_cast<std::size_t>(t)] : stop;
    ex.targets.actions.push_back(codec.action_class(next.action));
    ex.targets.objects.push_back(worldsim::is_interaction(next) ? codec.object_class(next) : -1);
  }
  ex.targets.first_future = std::max(0, inst.t_i - start);
  return ex;
}

}  // namespace edh::agent
