#include "edh/agent/decoder.hpp"

#include <numeric>

#include "edh/agent/model.hpp"
#include "edh/util/error.hpp"

namespace edh::agent {

TokenDecoder::TokenDecoder(nn::ParamSet& params, const std::string& name, int vocab_size, int max_len_, int dim,
                           int heads, int hidden, int layer_count, Rng& rng)
    : tokens(params, name + ".tokens", vocab_size, dim, rng),
      positions(params, name + ".positions", max_len_, dim, rng),
      max_len(max_len_) {
  for (int i = 0; i < layer_count; ++i) {
    layers.emplace_back(params, name + ".layer" + std::to_string(i), dim, heads, hidden, rng);
  }
  out = nn::Linear(params, name + ".out", dim, vocab_size, rng);
}

nn::Tensor TokenDecoder::operator()(std::span<const int> prefix, const nn::Tensor& memory,
                                    const std::vector<bool>& memory_valid, const nn::Context& ctx) const {
  if (prefix.empty() || static_cast<int>(prefix.size()) > max_len) {
    throw ShapeMismatch("decoder: prefix length must be in 1.." + std::to_string(max_len));
  }
  const auto n = static_cast<Eigen::Index>(prefix.size());
  std::vector<int> pos(prefix.size());
  std::iota(pos.begin(), pos.end(), 0);
  nn::Tensor x = ctx.drop(tokens(prefix) + positions(pos));
  const nn::Mask self_mask = nn::causal_mask(n);
  const nn::Mask memory_mask = nn::key_mask(n, memory_valid);
  for (const auto& layer : layers) x = layer(x, memory, self_mask, memory_mask, ctx);
  return out(x);
}

std::vector<int> greedy_decode(const TokenDecoder& decoder, const nn::Tensor& memory,
                               const std::vector<bool>& memory_valid, int bos, int eos, int max_tokens) {
  nn::NoGradGuard no_grad;
  const nn::Context eval;
  std::vector<int> prefix = {bos};
  const int limit = std::min(max_tokens, decoder.max_len - 1);
  for (int i = 0; i < limit; ++i) {
    const nn::Tensor logits = decoder(prefix, memory, memory_valid, eval);
    const int next = argmax_first(logits.value(), logits.rows() - 1);
    if (next == eos) break;
    prefix.push_back(next);
  }
  return {prefix.begin() + 1, prefix.end()};
}

nn::Tensor teacher_forced_loss(const TokenDecoder& decoder, const nn::Tensor& memory,
                               const std::vector<bool>& memory_valid, int bos, const std::vector<int>& target,
                               const nn::Context& ctx) {
  if (target.empty()) throw ShapeMismatch("decoder: empty target");
  std::vector<int> input = {bos};
  input.insert(input.end(), target.begin(), target.end() - 1);
  return nn::cross_entropy(decoder(input, memory, memory_valid, ctx), target);
}

}  // namespace edh::agent
