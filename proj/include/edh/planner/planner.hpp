#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "edh/agent/decoder.hpp"
#include "edh/agent/text_encoder.hpp"
#include "edh/corpus/edh.hpp"
#include "edh/corpus/generate.hpp"
#include "edh/corpus/plan.hpp"
#include "edh/corpus/vocab.hpp"
#include "edh/nn/checkpoint.hpp"

namespace edh::planner {

struct PlannerConfig {
  int d_model = 32;
  int heads = 4;
  int encoder_layers = 1;
  int decoder_layers = 1;
  int ff_hidden = 0;  // 0 means 4 * d_model
  double dropout = 0.1;
  int max_src_len = 192;
  int max_tgt_len = 33;  // plan tokens plus EOS
  double lr = 5e-5;
  long warmup_steps = 500;
  double final_lr_fraction = 0.0;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 0;

  int text_vocab = 0;  // from the vocabulary

  int hidden() const { return ff_hidden > 0 ? ff_hidden : 4 * d_model; }
  // Desk-scale preset: encoder shape matches agent::ModelConfig::toy() so a
  // synthetic run can initialize the agent's text encoder.
  static PlannerConfig toy();
  void validate() const;
  Json to_json() const;
  static PlannerConfig from_json(const Json& j);
};

// One training pair as word tokens.
struct TextPair {
  std::string id;
  std::vector<std::string> source;
  std::vector<std::string> target;
};

// (dialog tokens, plan_to_text(extract_plan)) for each instance.
std::vector<TextPair> plan_pairs(const std::vector<corpus::EDHInstance>& instances);
std::vector<TextPair> simplification_pairs(const std::vector<corpus::SimplificationPair>& pairs);

// Encoder-decoder over the shared text vocabulary. Encoder weights live under
// "text." with the same layout as the agent's language encoder.
class PlannerModel {
 public:
  PlannerModel(PlannerConfig config, const corpus::TokenVocab& vocab, std::string kind = "planner");

  const PlannerConfig& config() const { return config_; }
  const std::string& kind() const { return kind_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const corpus::TokenVocab& vocab() const { return vocab_; }

  // Most recent max_src_len ids; [PAD] when empty.
  std::vector<int> source_ids(const std::vector<std::string>& words) const;
  // Target ids followed by EOS; ConfigError past max_tgt_len.
  std::vector<int> target_ids(const std::vector<std::string>& words) const;

  nn::Tensor loss(const std::vector<int>& source, const std::vector<int>& target, const nn::Context& ctx) const;
  // Teacher-forced logits [len(target) x vocab] with BOS prepended.
  nn::Tensor logits(const std::vector<int>& source, const std::vector<int>& target, const nn::Context& ctx) const;
  std::vector<std::string> generate(const std::vector<std::string>& source) const;

  nn::Checkpoint checkpoint() const;
  static PlannerModel from_checkpoint(const nn::Checkpoint& ckpt, const corpus::TokenVocab& vocab);

 private:
  PlannerConfig config_;
  std::string kind_;
  corpus::TokenVocab vocab_;
  nn::ParamSet params_;
  agent::TextEncoder encoder_;
  agent::TokenDecoder decoder_;
};

struct PlannerTraining {
  PlannerModel model;
  std::vector<double> epoch_losses;
};

// Teacher-forced cross-entropy training from scratch. Throws EmptyCorpus for
// no pairs and ConfigError when a target does not fit max_tgt_len.
PlannerTraining train_planner(const std::vector<TextPair>& pairs, const corpus::TokenVocab& vocab,
                              const PlannerConfig& config, const std::function<void(int, double)>& on_epoch = {});

// Same model and loop on simplification pairs; the checkpoint kind is
// "synthetic" and its "text." weights fit an agent of matching shape.
PlannerTraining train_synthetic_simplification(const std::vector<TextPair>& pairs, const corpus::TokenVocab& vocab,
                                               const PlannerConfig& config,
                                               const std::function<void(int, double)>& on_epoch = {});

// Greedy decode, then parse_plan.
corpus::ParsedPlan predict_plan(const PlannerModel& model, const std::vector<std::string>& dialog);

}  // namespace edh::planner
