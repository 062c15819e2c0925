#pragma once

#include <functional>
#include <vector>

#include "edh/agent/data.hpp"

namespace edh::agent {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 2;
  double lr = 1e-5;
  double final_lr_fraction = 0.1;  // linear decay target
  long warmup_steps = 0;
  double weight_decay = 0.33;
  double action_loss_weight = 1.0;
  double object_loss_weight = 1.0;
  bool include_history = false;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  // Desk-scale preset: same schedule shape, larger step size and more epochs.
  static TrainConfig toy();
  Json to_json() const;
  static TrainConfig from_json(const Json& j);
};

// Shared mini-batch AdamW loop. Each epoch visits the examples in a seeded
// shuffled order; the batch loss is the mean of the per-example losses and
// the learning rate follows a linear warmup/decay schedule.
struct FitOptions {
  int epochs = 1;
  int batch_size = 1;
  double lr = 1e-3;
  double final_lr_fraction = 0.1;
  long warmup_steps = 0;
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  double dropout = 0.0;
  std::uint64_t seed = 0;
};

using ExampleLoss = std::function<nn::Tensor(std::size_t, const nn::Context&)>;

// Returns the mean training loss of every epoch.
std::vector<double> fit(nn::ParamSet& params, std::size_t example_count, const FitOptions& options,
                        const ExampleLoss& loss, const std::function<void(int, double)>& on_epoch = {});

struct TrainResult {
  std::vector<double> epoch_losses;  // mean training loss per epoch
};

// Mini-batch AdamW over the examples in a seeded shuffled order. The batch
// loss is the mean of the per-example losses.
TrainResult train_agent(AgentModel& model, const std::vector<AgentExample>& examples, const TrainConfig& config,
                        const std::function<void(int, double)>& on_epoch = {});

// Eval-mode loss of one example.
double example_loss(const AgentModel& model, const AgentExample& example, bool include_history);

}  // namespace edh::agent
