#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edh/agent/text_encoder.hpp"
#include "edh/corpus/vocab.hpp"
#include "edh/nn/checkpoint.hpp"
#include "edh/nn/layers.hpp"
#include "edh/worldsim/types.hpp"

namespace edh::agent {

// How frames enter the model. Zero keeps the vision stream but feeds blank
// frames; None drops it and classifies from the action stream.
enum class VisionMode { Frames, Zero, None };

enum class InitMode { Random, SyntheticPretrained };

struct ModelConfig {
  int d_model = 768;
  int text_layers = 2;
  int mm_encoder_layers = 2;
  int heads = 8;
  int ff_hidden = 0;  // 0 means 4 * d_model
  double dropout = 0.2;
  int max_dialog_tokens = 512;  // M
  int max_steps = 64;           // T
  int observation_channels = 16;
  int conv_channels = 8;
  bool cross_attention = false;
  VisionMode vision = VisionMode::Frames;
  InitMode init_mode = InitMode::Random;
  std::uint64_t seed = 0;

  // Filled from the vocabularies.
  int text_vocab = 0;
  int action_classes = 0;
  int object_classes = 0;  // object types + NONE
  int action_inputs = 0;   // START + flattened (action, object) pairs

  int hidden() const { return ff_hidden > 0 ? ff_hidden : 4 * d_model; }
  // Desk-scale preset used by the tests and the CLI defaults.
  static ModelConfig toy();
  void validate() const;

  Json to_json() const;
  static ModelConfig from_json(const Json& j);
};

// Index spaces of the action embedder and the two classification heads.
class ActionCodec {
 public:
  static constexpr int kStart = 0;

  ActionCodec() = default;
  explicit ActionCodec(const corpus::Vocabularies& vocab);

  int action_classes() const { return static_cast<int>(actions_.size()); }
  int object_classes() const { return static_cast<int>(objects_.size()) + 1; }
  int none_object() const { return static_cast<int>(objects_.size()); }
  int input_count() const { return static_cast<int>(inputs_.size()) + 1; }

  // Throws UnknownAction / IndexError for symbols outside the vocabularies.
  int input_index(const worldsim::ActionRef& a) const;
  // Inverse of input_index for 1..input_count()-1.
  const worldsim::ActionRef& input(int index) const;
  int action_class(const std::string& action) const;
  // NONE for actions without an object argument.
  int object_class(const worldsim::ActionRef& a) const;

  const std::string& action_name(int cls) const;
  const std::string& object_name(int cls) const;
  // Builds the executable action from head predictions; object is attached
  // only when the action takes one.
  worldsim::ActionRef decode(int action_cls, int object_cls) const;

 private:
  std::vector<std::string> actions_;
  std::vector<std::string> objects_;
  std::vector<worldsim::ActionRef> inputs_;  // index i+1
};

// Pre- and post-encoder streams.
struct FusionTensors {
  nn::Tensor h_text, h_vis, h_act;
  nn::Tensor z_text, z_vis, z_act;
};

struct ModelInput {
  std::vector<int> text;     // 1..M ids
  nn::Matrix frames;         // [T x C*49], o_0..o_{T-1}
  std::vector<int> actions;  // [T] action inputs, START first
};

struct ModelOutput {
  nn::Tensor action_logits;  // [T x |A|]
  nn::Tensor object_logits;  // [T x |O|+1]
  FusionTensors fusion;
};

// Per-position supervision. -1 marks an ignored position.
struct Targets {
  std::vector<int> actions;
  std::vector<int> objects;
  int first_future = 0;  // t_i within the window
};

// Row t: keys with index <= t_now are visible.
std::vector<bool> build_future_action_mask(int t_now, int steps);

// Attention of `target` rows over `source` rows. A row with at least one
// visible source column gets the attention output; a fully masked row passes
// the target row through unchanged.
nn::Tensor cross_modal_attend(const nn::MultiHeadAttention& attn, const nn::Tensor& target, const nn::Tensor& source,
                              const nn::Mask& mask);

// Mask over [text | vis | act] (or [text | act] without vision). Text rows
// see valid text; a step-t row sees valid text and both step streams up to t.
nn::Mask multimodal_mask(const std::vector<bool>& text_valid, int steps, bool with_vision);

// Lowest index among maxima.
int argmax_first(const nn::Matrix& m, Eigen::Index row);

class AgentModel {
 public:
  AgentModel(ModelConfig config, const corpus::Vocabularies& vocab);

  const ModelConfig& config() const { return config_; }
  const ActionCodec& codec() const { return codec_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  std::map<std::string, std::string> vocab_hashes() const { return vocab_hashes_; }

  nn::Tensor encode_text(std::span<const int> ids, const nn::Context& ctx) const;
  nn::Tensor encode_frames(const nn::Matrix& frames, const nn::Context& ctx) const;
  nn::Tensor embed_actions(std::span<const int> indices) const;
  // h streams get positions added, an optional residual cross-modal
  // attention over the text, then the causal multimodal encoder.
  FusionTensors multimodal_encode(const nn::Tensor& h_text, const std::vector<bool>& text_valid,
                                  const nn::Tensor& h_vis, const nn::Tensor& h_act, const nn::Context& ctx) const;
  std::pair<nn::Tensor, nn::Tensor> classify_heads(const nn::Tensor& z) const;

  ModelOutput forward(const ModelInput& input, const nn::Context& ctx) const;

  // Loads "text." weights from a synthetic-simplification checkpoint; the
  // checkpoint must have been trained against the same text vocabulary.
  void load_text_encoder(const nn::Checkpoint& ckpt);

  nn::Checkpoint checkpoint() const;
  static AgentModel from_checkpoint(const nn::Checkpoint& ckpt, const corpus::Vocabularies& vocab);

 private:
  ModelConfig config_;
  ActionCodec codec_;
  std::map<std::string, std::string> vocab_hashes_;
  nn::ParamSet params_;
  TextEncoder text_;
  nn::Linear conv_;      // 3x3 patches -> conv channels
  nn::Linear vis_proj_;  // flattened conv map -> d
  nn::Embedding action_table_;
  nn::Embedding vis_pos_, act_pos_;
  nn::MultiHeadAttention vis_cross_, act_cross_;
  std::vector<nn::EncoderLayer> mm_layers_;
  nn::Linear action_head_, object_head_;
};

// Weighted sum of the two head cross-entropies, each averaged over the
// future positions. include_history adds the same sum averaged over the
// history positions as a separate term.
nn::Tensor compute_loss(const ModelOutput& out, const Targets& targets, bool include_history,
                        double action_weight = 1.0, double object_weight = 1.0);

}  // namespace edh::agent
