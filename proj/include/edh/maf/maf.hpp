#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "edh/agent/decoder.hpp"
#include "edh/agent/model.hpp"
#include "edh/agent/text_encoder.hpp"
#include "edh/agent/train.hpp"
#include "edh/corpus/edh.hpp"

namespace edh::maf {

// Infusion parameters of one modality. lambda_* are stored pre-squash.
struct MCA2Params {
  nn::Tensor lambda_k;  // [n x 1]
  nn::Tensor lambda_v;  // [n x 1]
  nn::Tensor u_k;       // [d_c x d]
  nn::Tensor u_v;       // [d_c x d]

  MCA2Params() = default;
  MCA2Params(nn::ParamSet& params, const std::string& name, int n, int context_dim, int dim, Rng& rng);
};

struct InfusedKV {
  nn::Tensor k_hat;
  nn::Tensor v_hat;
};

// K_hat = (1 - l_k) K + l_k (C U_k), likewise for V, with l = sigmoid(lambda).
// A context with a row count other than n is mean-pooled and broadcast.
InfusedKV mca2_infuse(const nn::Tensor& k, const nn::Tensor& v, const nn::Tensor& context, const MCA2Params& params);

// H + sum_m g_m * H_m. Gates are already in [0, 1].
nn::Tensor gif_fuse(const nn::Tensor& h, std::span<const nn::Tensor> streams, std::span<const nn::Tensor> gates);

// Attention over the text whose keys and values carry one extra modality.
struct MCA2Attention {
  nn::Linear q, k, v;
  MCA2Params infuse;
  nn::Tensor gate;  // [n x d], pre-squash

  MCA2Attention() = default;
  MCA2Attention(nn::ParamSet& params, const std::string& name, int n, int dim, Rng& rng);

  // H_m for text states h [n x d] and context [c x d].
  nn::Tensor operator()(const nn::Tensor& h, const std::vector<bool>& text_valid, const nn::Tensor& context) const;
  nn::Tensor squashed_gate() const;
};

struct MAFConfig {
  int d_model = 32;
  int heads = 4;
  int text_layers = 1;
  int decoder_layers = 1;
  int ff_hidden = 0;  // 0 means 4 * d_model
  double dropout = 0.1;
  int max_dialog_tokens = 192;  // n: text is padded to this length
  int max_history = 64;         // most recent context rows kept per stream
  int max_actions = 48;         // generated tokens, EOS excluded
  int observation_channels = 16;
  std::uint64_t seed = 0;

  int text_vocab = 0;    // from the vocabularies
  int action_inputs = 0;  // START + flattened (action, object) pairs

  int hidden() const { return ff_hidden > 0 ? ff_hidden : 4 * d_model; }
  static MAFConfig toy();
  void validate() const;
  Json to_json() const;
  static MAFConfig from_json(const Json& j);
};

struct MAFInput {
  std::vector<int> text;     // up to n ids; padded internally
  std::vector<int> history;  // action-input ids of A^I_H, START excluded
  nn::Matrix frames;         // [k x C*49] observations so far, k >= 1
};

struct MAFExample {
  std::string instance_id;
  MAFInput input;
  std::vector<int> target;  // future action tokens followed by EOS
};

// Decoder token space: BOS shares index 0 with START, actions use their
// codec input index, EOS comes last.
class MAFModel {
 public:
  MAFModel(MAFConfig config, const corpus::Vocabularies& vocab);

  const MAFConfig& config() const { return config_; }
  const agent::ActionCodec& codec() const { return codec_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  int bos() const { return agent::ActionCodec::kStart; }
  int eos() const { return codec_.input_count(); }
  int token_count() const { return codec_.input_count() + 1; }

  std::vector<int> padded_text(std::span<const int> ids) const;
  nn::Tensor action_context(std::span<const int> history) const;
  nn::Tensor vision_context(const nn::Matrix& frames) const;

  // X_in [n x d]: the text encoding passes through one infused attention per
  // modality, the gated streams are summed onto it, and the concatenation
  // [H_hat | H_act | H_vis] is mapped back to d.
  nn::Tensor fuse_inputs(const MAFInput& input, const nn::Context& ctx) const;
  // Same with explicit context matrices.
  nn::Tensor fuse(std::span<const int> text, const nn::Tensor& action_ctx, const nn::Tensor& vision_ctx,
                  const nn::Context& ctx) const;
  std::vector<bool> memory_valid(const MAFInput& input) const;

  // Next-token distribution [1 x tokens] after `prefix` (BOS first).
  nn::Matrix decode_step(const nn::Tensor& x_in, const std::vector<bool>& valid, std::span<const int> prefix) const;
  nn::Tensor decoder_logits(const nn::Tensor& x_in, const std::vector<bool>& valid, std::span<const int> prefix,
                            const nn::Context& ctx) const;
  std::vector<int> generate(const MAFInput& input) const;
  std::vector<worldsim::ActionRef> generate_actions(const MAFInput& input) const;

  nn::Tensor loss(const MAFExample& example, const nn::Context& ctx) const;

  std::string token_name(int token) const;
  MCA2Attention& action_attention() { return act_attn_; }
  MCA2Attention& vision_attention() { return vis_attn_; }

  nn::Checkpoint checkpoint() const;
  static MAFModel from_checkpoint(const nn::Checkpoint& ckpt, const corpus::Vocabularies& vocab);

 private:
  MAFConfig config_;
  agent::ActionCodec codec_;
  std::map<std::string, std::string> vocab_hashes_;
  nn::ParamSet params_;
  agent::TextEncoder text_;
  nn::Embedding action_table_;
  nn::Linear vision_proj_;
  MCA2Attention act_attn_, vis_attn_;
  nn::Linear fuse_out_;
  agent::TokenDecoder decoder_;
};

// Future actions become the target; the history and observations so far
// become the input. Throws ConfigError when the target exceeds max_actions.
MAFExample make_maf_example(const corpus::EDHInstance& instance, const MAFModel& model,
                            const corpus::TokenVocab& text_vocab);

struct MAFTrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double lr = 5e-5;
  double final_lr_fraction = 0.1;
  long warmup_steps = 500;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  static MAFTrainConfig toy();
  Json to_json() const;
  static MAFTrainConfig from_json(const Json& j);
};

std::vector<double> train_maf(MAFModel& model, const std::vector<MAFExample>& examples, const MAFTrainConfig& config,
                              const std::function<void(int, double)>& on_epoch = {});

// Multiset overlap between a predicted and a reference token sequence.
struct F1Counts {
  std::size_t overlap = 0;
  std::size_t predicted = 0;
  std::size_t reference = 0;
};

F1Counts f1_counts(const std::vector<std::string>& predicted, const std::vector<std::string>& reference);
// F1 of pooled counts; 0 when there is no overlap, including two empty sides.
double f1_from_counts(const F1Counts& counts);
double f1_sequence(const std::vector<std::string>& predicted, const std::vector<std::string>& reference);
// Micro F1 over a corpus: counts are summed before the ratio.
double micro_f1(const std::vector<F1Counts>& counts);

}  // namespace edh::maf
