#pragma once

#include <span>
#include <string>
#include <vector>

#include "edh/nn/layers.hpp"

namespace edh::agent {

// Bidirectional self-attention stack over dialog tokens. PAD ids are
// excluded as attention keys. Shared by the agent and the planner so the
// planner's synthetic-simplification run can initialize the agent's text
// encoder (parameters live under "<name>.").
struct TextEncoder {
  nn::Embedding tokens;
  nn::Embedding positions;
  std::vector<nn::EncoderLayer> layers;
  int max_len = 0;

  TextEncoder() = default;
  TextEncoder(nn::ParamSet& params, const std::string& name, int vocab_size, int max_len, int dim, int heads,
              int hidden, int layer_count, Rng& rng);

  // ids.size() must be in [1, max_len]. Returns [len x dim].
  nn::Tensor operator()(std::span<const int> ids, const nn::Context& ctx) const;
};

// true where the id is not PAD.
std::vector<bool> non_pad(std::span<const int> ids);

}  // namespace edh::agent
