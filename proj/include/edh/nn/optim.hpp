#pragma once

#include <vector>

#include "edh/nn/layers.hpp"

namespace edh::nn {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

// Decoupled weight decay Adam. Parameters whose name ends in ".bias",
// ".gamma" or ".beta" are exempt from decay.
class AdamW {
 public:
  AdamW(ParamSet& params, AdamWOptions options);

  // Applies one update with the given learning rate and clears gradients.
  // Returns the pre-clipping global gradient norm.
  double step(double lr);

 private:
  ParamSet& params_;
  AdamWOptions options_;
  std::vector<Matrix> m_, v_;
  std::vector<bool> decay_;
  long t_ = 0;
};

// Linear warmup to `base_lr`, then linear decay to `base_lr * final_fraction`
// at `total_steps`.
struct LinearSchedule {
  double base_lr = 1e-3;
  long warmup_steps = 0;
  long total_steps = 1;
  double final_fraction = 0.0;

  double at(long step) const;
};

}  // namespace edh::nn
