#include "edh/planner/planner.hpp"

#include "edh/agent/train.hpp"
#include "edh/corpus/edh.hpp"
#include "edh/util/error.hpp"

namespace edh::planner {

using nn::Tensor;

PlannerConfig PlannerConfig::toy() {
  PlannerConfig c;
  c.lr = 2e-3;
  c.warmup_steps = 20;
  c.epochs = 80;
  c.batch_size = 4;
  c.dropout = 0.0;
  return c;
}

void PlannerConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || d_model % heads != 0) throw ConfigError("planner: d_model must divide into heads");
  if (encoder_layers < 0 || decoder_layers < 1) throw ConfigError("planner: need at least one decoder layer");
  if (max_src_len < 1) throw ConfigError("planner: max_src_len must be positive");
  if (max_tgt_len < 3 || max_tgt_len % 2 == 0) {
    throw ConfigError("planner: max_tgt_len must be odd (whole action/object pairs plus EOS) and at least 3");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("planner: dropout must be in [0, 1)");
  if (epochs < 0 || batch_size < 1 || lr <= 0.0) throw ConfigError("planner: bad epochs, batch or lr");
}

Json PlannerConfig::to_json() const {
  return Json{{"d_model", d_model},
              {"heads", heads},
              {"encoder_layers", encoder_layers},
              {"decoder_layers", decoder_layers},
              {"ff_hidden", ff_hidden},
              {"dropout", dropout},
              {"max_src_len", max_src_len},
              {"max_tgt_len", max_tgt_len},
              {"lr", lr},
              {"warmup_steps", warmup_steps},
              {"final_lr_fraction", final_lr_fraction},
              {"weight_decay", weight_decay},
              {"clip_norm", clip_norm},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"seed", seed}};
}

PlannerConfig PlannerConfig::from_json(const Json& j) {
  PlannerConfig c;
  try {
    c.d_model = j.value("d_model", c.d_model);
    c.heads = j.value("heads", c.heads);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.ff_hidden = j.value("ff_hidden", c.ff_hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.max_src_len = j.value("max_src_len", c.max_src_len);
    c.max_tgt_len = j.value("max_tgt_len", c.max_tgt_len);
    c.lr = j.value("lr", c.lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("planner config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<TextPair> plan_pairs(const std::vector<corpus::EDHInstance>& instances) {
  std::vector<TextPair> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back({inst.instance_id, corpus::dialog_tokens(inst), corpus::plan_to_text(corpus::extract_plan(inst))});
  }
  return out;
}

std::vector<TextPair> simplification_pairs(const std::vector<corpus::SimplificationPair>& pairs) {
  std::vector<TextPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({"synthetic_" + std::to_string(i), corpus::tokenize(pairs[i].verbose),
                   corpus::tokenize(pairs[i].simplified)});
  }
  return out;
}

PlannerModel::PlannerModel(PlannerConfig config, const corpus::TokenVocab& vocab, std::string kind)
    : config_(std::move(config)), kind_(std::move(kind)), vocab_(vocab) {
  config_.text_vocab = vocab_.size();
  config_.validate();
  Rng rng(config_.seed);
  const int d = config_.d_model;
  encoder_ = agent::TextEncoder(params_, "text", config_.text_vocab, config_.max_src_len, d, config_.heads,
                                config_.hidden(), config_.encoder_layers, rng);
  decoder_ = agent::TokenDecoder(params_, "decoder", config_.text_vocab, config_.max_tgt_len, d, config_.heads,
                                 config_.hidden(), config_.decoder_layers, rng);
}

std::vector<int> PlannerModel::source_ids(const std::vector<std::string>& words) const {
  std::vector<int> ids = vocab_.encode(words);
  const auto m = static_cast<std::size_t>(config_.max_src_len);
  if (ids.size() > m) ids.erase(ids.begin(), ids.end() - static_cast<std::ptrdiff_t>(m));
  if (ids.empty()) ids.push_back(corpus::TokenVocab::kPad);
  return ids;
}

std::vector<int> PlannerModel::target_ids(const std::vector<std::string>& words) const {
  std::vector<int> ids = vocab_.encode(words);
  ids.push_back(corpus::TokenVocab::kEos);
  if (static_cast<int>(ids.size()) > config_.max_tgt_len) {
    throw ConfigError("planner: target of " + std::to_string(words.size()) + " tokens exceeds max_tgt_len " +
                      std::to_string(config_.max_tgt_len) + " with EOS");
  }
  return ids;
}

Tensor PlannerModel::logits(const std::vector<int>& source, const std::vector<int>& target,
                            const nn::Context& ctx) const {
  const Tensor memory = encoder_(source, ctx);
  std::vector<int> input = {corpus::TokenVocab::kBos};
  input.insert(input.end(), target.begin(), target.end() - 1);
  return decoder_(input, memory, agent::non_pad(source), ctx);
}

Tensor PlannerModel::loss(const std::vector<int>& source, const std::vector<int>& target,
                          const nn::Context& ctx) const {
  const Tensor memory = encoder_(source, ctx);
  return agent::teacher_forced_loss(decoder_, memory, agent::non_pad(source), corpus::TokenVocab::kBos, target, ctx);
}

std::vector<std::string> PlannerModel::generate(const std::vector<std::string>& source) const {
  nn::NoGradGuard no_grad;
  const std::vector<int> src = source_ids(source);
  const Tensor memory = encoder_(src, nn::Context{});
  const std::vector<int> ids = agent::greedy_decode(decoder_, memory, agent::non_pad(src), corpus::TokenVocab::kBos,
                                                    corpus::TokenVocab::kEos, config_.max_tgt_len - 1);
  return vocab_.decode(ids);
}

nn::Checkpoint PlannerModel::checkpoint() const {
  return nn::Checkpoint::capture(kind_, config_.to_json(), {{"text", vocab_.hash()}}, params_);
}

PlannerModel PlannerModel::from_checkpoint(const nn::Checkpoint& ckpt, const corpus::TokenVocab& vocab) {
  if (ckpt.kind != "planner" && ckpt.kind != "synthetic") {
    throw CheckpointError("expected a planner or synthetic checkpoint, got '" + ckpt.kind + "'");
  }
  PlannerModel model(PlannerConfig::from_json(ckpt.config), vocab, ckpt.kind);
  ckpt.require_vocab({{"text", vocab.hash()}});
  ckpt.restore(model.params_);
  return model;
}

namespace {

PlannerTraining train(const std::vector<TextPair>& pairs, const corpus::TokenVocab& vocab,
                      const PlannerConfig& config, const std::string& kind,
                      const std::function<void(int, double)>& on_epoch) {
  if (pairs.empty()) throw EmptyCorpus("no training pairs");
  PlannerModel model(config, vocab, kind);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> encoded;
  encoded.reserve(pairs.size());
  for (const auto& p : pairs) encoded.emplace_back(model.source_ids(p.source), model.target_ids(p.target));

  agent::FitOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.lr = config.lr;
  options.final_lr_fraction = config.final_lr_fraction;
  options.warmup_steps = config.warmup_steps;
  options.weight_decay = config.weight_decay;
  options.clip_norm = config.clip_norm;
  options.dropout = config.dropout;
  options.seed = config.seed;
  const PlannerModel& m = model;
  std::vector<double> losses = agent::fit(
      model.params(), encoded.size(), options,
      [&](std::size_t i, const nn::Context& ctx) { return m.loss(encoded[i].first, encoded[i].second, ctx); },
      on_epoch);
  return PlannerTraining{std::move(model), std::move(losses)};
}

}  // namespace

PlannerTraining train_planner(const std::vector<TextPair>& pairs, const corpus::TokenVocab& vocab,
                              const PlannerConfig& config, const std::function<void(int, double)>& on_epoch) {
  return train(pairs, vocab, config, "planner", on_epoch);
}

PlannerTraining train_synthetic_simplification(const std::vector<TextPair>& pairs, const corpus::TokenVocab& vocab,
                                               const PlannerConfig& config,
                                               const std::function<void(int, double)>& on_epoch) {
  return train(pairs, vocab, config, "synthetic", on_epoch);
}

corpus::ParsedPlan predict_plan(const PlannerModel& model, const std::vector<std::string>& dialog) {
  return corpus::parse_plan(model.generate(dialog));
}

}  // namespace edh::planner
