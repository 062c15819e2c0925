#include "edh/agent/text_encoder.hpp"

#include <numeric>

#include "edh/corpus/vocab.hpp"
#include "edh/util/error.hpp"

namespace edh::agent {

TextEncoder::TextEncoder(nn::ParamSet& params, const std::string& name, int vocab_size, int max_len_, int dim,
                         int heads, int hidden, int layer_count, Rng& rng)
    : tokens(params, name + ".tokens", vocab_size, dim, rng),
      positions(params, name + ".positions", max_len_, dim, rng),
      max_len(max_len_) {
  for (int i = 0; i < layer_count; ++i) {
    layers.emplace_back(params, name + ".layer" + std::to_string(i), dim, heads, hidden, rng);
  }
}

nn::Tensor TextEncoder::operator()(std::span<const int> ids, const nn::Context& ctx) const {
  if (ids.empty() || static_cast<int>(ids.size()) > max_len) {
    throw ShapeMismatch("text encoder: expected 1.." + std::to_string(max_len) + " tokens, got " +
                        std::to_string(ids.size()));
  }
  std::vector<int> pos(ids.size());
  std::iota(pos.begin(), pos.end(), 0);
  nn::Tensor x = ctx.drop(tokens(ids) + positions(pos));
  const nn::Mask mask = nn::key_mask(static_cast<Eigen::Index>(ids.size()), non_pad(ids));
  for (const auto& layer : layers) x = layer(x, mask, ctx);
  return x;
}

std::vector<bool> non_pad(std::span<const int> ids) {
  std::vector<bool> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = ids[i] != corpus::TokenVocab::kPad;
  return out;
}

}  // namespace edh::agent
