#include "edh/agent/train.hpp"

#include <numeric>

#include "edh/nn/optim.hpp"
#include "edh/util/error.hpp"

namespace edh::agent {

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.epochs = 60;
  c.lr = 2e-3;
  c.weight_decay = 0.01;
  return c;
}

Json TrainConfig::to_json() const {
  return Json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"lr", lr},
              {"final_lr_fraction", final_lr_fraction},
              {"warmup_steps", warmup_steps},
              {"weight_decay", weight_decay},
              {"action_loss_weight", action_loss_weight},
              {"object_loss_weight", object_loss_weight},
              {"include_history", include_history},
              {"clip_norm", clip_norm},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.action_loss_weight = j.value("action_loss_weight", c.action_loss_weight);
    c.object_loss_weight = j.value("object_loss_weight", c.object_loss_weight);
    c.include_history = j.value("include_history", c.include_history);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  if (c.epochs < 0 || c.batch_size < 1 || c.lr <= 0.0) throw ConfigError("train config: bad epochs, batch or lr");
  return c;
}

std::vector<double> fit(nn::ParamSet& params, std::size_t example_count, const FitOptions& options,
                        const ExampleLoss& loss, const std::function<void(int, double)>& on_epoch) {
  if (example_count == 0) throw EmptyCorpus("no training examples");
  if (options.batch_size < 1) throw ConfigError("batch size must be positive");
  nn::AdamWOptions opt;
  opt.weight_decay = options.weight_decay;
  opt.clip_norm = options.clip_norm;
  nn::AdamW optimizer(params, opt);
  const auto batch = static_cast<std::size_t>(options.batch_size);
  const long batches_per_epoch = static_cast<long>((example_count + batch - 1) / batch);
  nn::LinearSchedule schedule{options.lr, options.warmup_steps, std::max(1L, batches_per_epoch * options.epochs),
                              options.final_lr_fraction};

  Rng rng(options.seed);
  nn::Context ctx{true, options.dropout, &rng};
  std::vector<std::size_t> order(example_count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses;
  long step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t end = std::min(order.size(), b + batch);
      const double scale = 1.0 / static_cast<double>(end - b);
      for (std::size_t k = b; k < end; ++k) {
        nn::Tensor l = loss(order[k], ctx);
        total += l.item();
        nn::affine(l, scale).backward();
      }
      optimizer.step(schedule.at(step++));
    }
    losses.push_back(total / static_cast<double>(example_count));
    if (on_epoch) on_epoch(epoch, losses.back());
  }
  return losses;
}

TrainResult train_agent(AgentModel& model, const std::vector<AgentExample>& examples, const TrainConfig& config,
                        const std::function<void(int, double)>& on_epoch) {
  FitOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.lr = config.lr;
  options.final_lr_fraction = config.final_lr_fraction;
  options.warmup_steps = config.warmup_steps;
  options.weight_decay = config.weight_decay;
  options.clip_norm = config.clip_norm;
  options.dropout = model.config().dropout;
  options.seed = config.seed;
  const AgentModel& m = model;
  auto loss = [&](std::size_t i, const nn::Context& ctx) {
    const AgentExample& ex = examples[i];
    return compute_loss(m.forward(ex.input, ctx), ex.targets, config.include_history, config.action_loss_weight,
                        config.object_loss_weight);
  };
  return TrainResult{fit(model.params(), examples.size(), options, loss, on_epoch)};
}

double example_loss(const AgentModel& model, const AgentExample& example, bool include_history) {
  nn::NoGradGuard no_grad;
  return compute_loss(model.forward(example.input, nn::Context{}), example.targets, include_history).item();
}

}  // namespace edh::agent
