#pragma once

#include <span>
#include <string>
#include <vector>

#include "edh/nn/layers.hpp"

namespace edh::agent {

// Autoregressive transformer decoder over a memory matrix. Used by the plan
// generator and the generative action decoder.
struct TokenDecoder {
  nn::Embedding tokens;
  nn::Embedding positions;
  std::vector<nn::DecoderLayer> layers;
  nn::Linear out;
  int max_len = 0;

  TokenDecoder() = default;
  TokenDecoder(nn::ParamSet& params, const std::string& name, int vocab_size, int max_len, int dim, int heads,
               int hidden, int layer_count, Rng& rng);

  // Logits [len(prefix) x vocab]; row t depends on prefix[0..t] only.
  nn::Tensor operator()(std::span<const int> prefix, const nn::Tensor& memory, const std::vector<bool>& memory_valid,
                        const nn::Context& ctx) const;
};

// Greedy decoding from `bos` until `eos` or `max_tokens` generated tokens.
// The returned sequence excludes bos and eos.
std::vector<int> greedy_decode(const TokenDecoder& decoder, const nn::Tensor& memory,
                               const std::vector<bool>& memory_valid, int bos, int eos, int max_tokens);

// Teacher-forced cross-entropy of `target` (which should end in eos) given
// memory; the decoder input is bos followed by target minus its last token.
nn::Tensor teacher_forced_loss(const TokenDecoder& decoder, const nn::Tensor& memory,
                               const std::vector<bool>& memory_valid, int bos, const std::vector<int>& target,
                               const nn::Context& ctx);

}  // namespace edh::agent
