#include "edh/maf/maf.hpp"

#include <algorithm>

#include "edh/agent/data.hpp"
#include "edh/util/error.hpp"

namespace edh::maf {

using nn::Matrix;
using nn::Tensor;

MCA2Params::MCA2Params(nn::ParamSet& params, const std::string& name, int n, int context_dim, int dim, Rng& rng)
    : lambda_k(params.add(name + ".lambda_k", Matrix::Zero(n, 1))),
      lambda_v(params.add(name + ".lambda_v", Matrix::Zero(n, 1))),
      u_k(params.add(name + ".u_k", nn::xavier_uniform(context_dim, dim, rng))),
      u_v(params.add(name + ".u_v", nn::xavier_uniform(context_dim, dim, rng))) {}

InfusedKV mca2_infuse(const Tensor& k, const Tensor& v, const Tensor& context, const MCA2Params& params) {
  const Eigen::Index n = k.rows();
  if (v.rows() != n || v.cols() != k.cols()) throw ShapeMismatch("mca2: K and V must have the same shape");
  if (params.lambda_k.rows() != n || params.lambda_v.rows() != n || params.lambda_k.cols() != 1 ||
      params.lambda_v.cols() != 1) {
    throw ShapeMismatch("mca2: lambda must be [n x 1]");
  }
  if (context.rows() < 1 || context.cols() != params.u_k.rows() || context.cols() != params.u_v.rows()) {
    throw ShapeMismatch("mca2: context width must match U rows");
  }
  if (params.u_k.cols() != k.cols() || params.u_v.cols() != v.cols()) {
    throw ShapeMismatch("mca2: U columns must match the key width");
  }
  const Tensor c = context.rows() == n ? context : nn::broadcast_rows(nn::mean_rows(context), n);
  const Tensor lk = nn::sigmoid(params.lambda_k);
  const Tensor lv = nn::sigmoid(params.lambda_v);
  InfusedKV out;
  out.k_hat = nn::mul_col(k, nn::affine(lk, -1.0, 1.0)) + nn::mul_col(nn::matmul(c, params.u_k), lk);
  out.v_hat = nn::mul_col(v, nn::affine(lv, -1.0, 1.0)) + nn::mul_col(nn::matmul(c, params.u_v), lv);
  return out;
}

Tensor gif_fuse(const Tensor& h, std::span<const Tensor> streams, std::span<const Tensor> gates) {
  if (streams.size() != gates.size()) throw ShapeMismatch("gif: one gate per stream");
  Tensor out = h;
  for (std::size_t m = 0; m < streams.size(); ++m) {
    if (streams[m].rows() != h.rows() || streams[m].cols() != h.cols() || gates[m].rows() != h.rows() ||
        gates[m].cols() != h.cols()) {
      throw ShapeMismatch("gif: streams and gates must match H");
    }
    out = out + nn::mul(gates[m], streams[m]);
  }
  return out;
}

MCA2Attention::MCA2Attention(nn::ParamSet& params, const std::string& name, int n, int dim, Rng& rng)
    : q(params, name + ".q", dim, dim, rng),
      k(params, name + ".k", dim, dim, rng),
      v(params, name + ".v", dim, dim, rng),
      infuse(params, name, n, dim, dim, rng),
      gate(params.add(name + ".gate", Matrix::Zero(n, dim))) {}

Tensor MCA2Attention::operator()(const Tensor& h, const std::vector<bool>& text_valid, const Tensor& context) const {
  const InfusedKV kv = mca2_infuse(k(h), v(h), context, infuse);
  return nn::multi_head_attention(q(h), kv.k_hat, kv.v_hat, nn::key_mask(h.rows(), text_valid), 1);
}

Tensor MCA2Attention::squashed_gate() const { return nn::sigmoid(gate); }

MAFConfig MAFConfig::toy() { return MAFConfig{}; }

void MAFConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || d_model % heads != 0) throw ConfigError("maf: d_model must divide into heads");
  if (text_layers < 0 || decoder_layers < 1) throw ConfigError("maf: need at least one decoder layer");
  if (max_dialog_tokens < 1 || max_history < 1 || max_actions < 1) throw ConfigError("maf: lengths must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("maf: dropout must be in [0, 1)");
  if (observation_channels < 1) throw ConfigError("maf: observation_channels must be positive");
}

Json MAFConfig::to_json() const {
  return Json{{"d_model", d_model},
              {"heads", heads},
              {"text_layers", text_layers},
              {"decoder_layers", decoder_layers},
              {"ff_hidden", ff_hidden},
              {"dropout", dropout},
              {"max_dialog_tokens", max_dialog_tokens},
              {"max_history", max_history},
              {"max_actions", max_actions},
              {"observation_channels", observation_channels},
              {"seed", seed}};
}

MAFConfig MAFConfig::from_json(const Json& j) {
  MAFConfig c;
  try {
    c.d_model = j.value("d_model", c.d_model);
    c.heads = j.value("heads", c.heads);
    c.text_layers = j.value("text_layers", c.text_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.ff_hidden = j.value("ff_hidden", c.ff_hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.max_dialog_tokens = j.value("max_dialog_tokens", c.max_dialog_tokens);
    c.max_history = j.value("max_history", c.max_history);
    c.max_actions = j.value("max_actions", c.max_actions);
    c.observation_channels = j.value("observation_channels", c.observation_channels);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("maf config: ") + e.what());
  }
  c.validate();
  return c;
}

MAFModel::MAFModel(MAFConfig config, const corpus::Vocabularies& vocab) : config_(std::move(config)), codec_(vocab) {
  config_.text_vocab = vocab.text.size();
  config_.action_inputs = codec_.input_count();
  config_.validate();
  vocab_hashes_ = {{"text", vocab.text.hash()}, {"actions", vocab.actions.hash()}, {"objects", vocab.objects.hash()}};

  Rng rng(config_.seed);
  const int d = config_.d_model;
  const int n = config_.max_dialog_tokens;
  text_ = agent::TextEncoder(params_, "text", config_.text_vocab, n, d, config_.heads, config_.hidden(),
                             config_.text_layers, rng);
  action_table_ = nn::Embedding(params_, "maf.actions", config_.action_inputs, d, rng);
  vision_proj_ = nn::Linear(params_, "maf.vision", config_.observation_channels * 49, d, rng);
  act_attn_ = MCA2Attention(params_, "maf.mca2_actions", n, d, rng);
  vis_attn_ = MCA2Attention(params_, "maf.mca2_vision", n, d, rng);
  fuse_out_ = nn::Linear(params_, "maf.fuse", 3 * d, d, rng);
  decoder_ = agent::TokenDecoder(params_, "decoder", token_count(), config_.max_actions + 1, d, config_.heads,
                                 config_.hidden(), config_.decoder_layers, rng);
}

std::vector<int> MAFModel::padded_text(std::span<const int> ids) const {
  const auto n = static_cast<std::size_t>(config_.max_dialog_tokens);
  std::vector<int> out(ids.size() > n ? ids.end() - static_cast<std::ptrdiff_t>(n) : ids.begin(), ids.end());
  out.resize(n, corpus::TokenVocab::kPad);
  return out;
}

Tensor MAFModel::action_context(std::span<const int> history) const {
  if (history.empty()) return nn::zeros(1, config_.d_model);
  const auto keep = std::min(history.size(), static_cast<std::size_t>(config_.max_history));
  return action_table_(history.subspan(history.size() - keep));
}

Tensor MAFModel::vision_context(const Matrix& frames) const {
  if (frames.rows() == 0) return nn::zeros(1, config_.d_model);
  if (frames.cols() != static_cast<Eigen::Index>(config_.observation_channels) * 49) {
    throw ShapeMismatch("maf: frame width does not match the observation channels");
  }
  const Eigen::Index keep = std::min<Eigen::Index>(frames.rows(), config_.max_history);
  return vision_proj_(nn::constant(frames.bottomRows(keep)));
}

Tensor MAFModel::fuse(std::span<const int> text, const Tensor& action_ctx, const Tensor& vision_ctx,
                      const nn::Context& ctx) const {
  const std::vector<int> ids = padded_text(text);
  const std::vector<bool> valid = agent::non_pad(ids);
  const Tensor h = text_(ids, ctx);
  const Tensor streams[] = {act_attn_(h, valid, action_ctx), vis_attn_(h, valid, vision_ctx)};
  const Tensor gates[] = {act_attn_.squashed_gate(), vis_attn_.squashed_gate()};
  const Tensor fused = gif_fuse(h, streams, gates);
  const Tensor parts[] = {fused, streams[0], streams[1]};
  return fuse_out_(ctx.drop(nn::concat_cols(parts)));
}

Tensor MAFModel::fuse_inputs(const MAFInput& input, const nn::Context& ctx) const {
  return fuse(input.text, action_context(input.history), vision_context(input.frames), ctx);
}

std::vector<bool> MAFModel::memory_valid(const MAFInput& input) const {
  return agent::non_pad(padded_text(input.text));
}

Tensor MAFModel::decoder_logits(const Tensor& x_in, const std::vector<bool>& valid, std::span<const int> prefix,
                                const nn::Context& ctx) const {
  return decoder_(prefix, x_in, valid, ctx);
}

Matrix MAFModel::decode_step(const Tensor& x_in, const std::vector<bool>& valid, std::span<const int> prefix) const {
  nn::NoGradGuard no_grad;
  const Tensor logits = decoder_(prefix, x_in, valid, nn::Context{});
  return nn::softmax_rows(logits.value().bottomRows(1));
}

std::vector<int> MAFModel::generate(const MAFInput& input) const {
  nn::NoGradGuard no_grad;
  const Tensor x_in = fuse_inputs(input, nn::Context{});
  return agent::greedy_decode(decoder_, x_in, memory_valid(input), bos(), eos(), config_.max_actions);
}

std::vector<worldsim::ActionRef> MAFModel::generate_actions(const MAFInput& input) const {
  std::vector<worldsim::ActionRef> out;
  for (int t : generate(input)) {
    if (t != bos() && t != eos()) out.push_back(codec_.input(t));
  }
  return out;
}

Tensor MAFModel::loss(const MAFExample& example, const nn::Context& ctx) const {
  const Tensor x_in = fuse_inputs(example.input, ctx);
  return agent::teacher_forced_loss(decoder_, x_in, memory_valid(example.input), bos(), example.target, ctx);
}

std::string MAFModel::token_name(int token) const {
  if (token == bos()) return "<bos>";
  if (token == eos()) return "<eos>";
  return worldsim::to_string(codec_.input(token));
}

nn::Checkpoint MAFModel::checkpoint() const {
  return nn::Checkpoint::capture("maf", config_.to_json(), vocab_hashes_, params_);
}

MAFModel MAFModel::from_checkpoint(const nn::Checkpoint& ckpt, const corpus::Vocabularies& vocab) {
  if (ckpt.kind != "maf") throw CheckpointError("expected a maf checkpoint, got '" + ckpt.kind + "'");
  MAFModel model(MAFConfig::from_json(ckpt.config), vocab);
  ckpt.require_vocab(model.vocab_hashes_);
  ckpt.restore(model.params_);
  return model;
}

MAFExample make_maf_example(const corpus::EDHInstance& instance, const MAFModel& model,
                            const corpus::TokenVocab& text_vocab) {
  const MAFConfig& c = model.config();
  if (static_cast<int>(instance.future_actions.size()) > c.max_actions) {
    throw ConfigError("maf: instance " + instance.instance_id + " has " + std::to_string(instance.future_actions.size()) +
                      " future actions, max_actions is " + std::to_string(c.max_actions));
  }
  MAFExample ex;
  ex.instance_id = instance.instance_id;
  ex.input.text = agent::dialog_ids(instance, text_vocab, c.max_dialog_tokens);
  for (const auto& a : instance.action_history) ex.input.history.push_back(model.codec().input_index(a));
  ex.input.frames = Matrix(static_cast<Eigen::Index>(instance.image_history.size()) + 1,
                           static_cast<Eigen::Index>(c.observation_channels) * 49);
  ex.input.frames.row(0) = agent::frame_row(instance.initial_observation);
  for (std::size_t i = 0; i < instance.image_history.size(); ++i) {
    ex.input.frames.row(static_cast<Eigen::Index>(i) + 1) = agent::frame_row(instance.image_history[i]);
  }
  for (const auto& a : instance.future_actions) ex.target.push_back(model.codec().input_index(a));
  ex.target.push_back(model.eos());
  return ex;
}

MAFTrainConfig MAFTrainConfig::toy() {
  MAFTrainConfig c;
  c.epochs = 60;
  c.batch_size = 2;
  c.lr = 2e-3;
  c.warmup_steps = 20;
  return c;
}

Json MAFTrainConfig::to_json() const {
  return Json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"lr", lr},
              {"final_lr_fraction", final_lr_fraction},
              {"warmup_steps", warmup_steps},
              {"weight_decay", weight_decay},
              {"clip_norm", clip_norm},
              {"seed", seed}};
}

MAFTrainConfig MAFTrainConfig::from_json(const Json& j) {
  MAFTrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("maf train config: ") + e.what());
  }
  if (c.epochs < 0 || c.batch_size < 1 || c.lr <= 0.0) throw ConfigError("maf train config: bad epochs, batch or lr");
  return c;
}

std::vector<double> train_maf(MAFModel& model, const std::vector<MAFExample>& examples, const MAFTrainConfig& config,
                              const std::function<void(int, double)>& on_epoch) {
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.target.size()) > model.config().max_actions + 1) {
      throw ConfigError("maf: target of " + ex.instance_id + " exceeds max_actions");
    }
  }
  agent::FitOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch_size;
  options.lr = config.lr;
  options.final_lr_fraction = config.final_lr_fraction;
  options.warmup_steps = config.warmup_steps;
  options.weight_decay = config.weight_decay;
  options.clip_norm = config.clip_norm;
  options.dropout = model.config().dropout;
  options.seed = config.seed;
  const MAFModel& m = model;
  return agent::fit(
      model.params(), examples.size(), options,
      [&](std::size_t i, const nn::Context& ctx) { return m.loss(examples[i], ctx); }, on_epoch);
}

F1Counts f1_counts(const std::vector<std::string>& predicted, const std::vector<std::string>& reference) {
  std::map<std::string, std::size_t> ref;
  for (const auto& t : reference) ++ref[t];
  F1Counts c{0, predicted.size(), reference.size()};
  for (const auto& t : predicted) {
    auto it = ref.find(t);
    if (it != ref.end() && it->second > 0) {
      --it->second;
      ++c.overlap;
    }
  }
  return c;
}

double f1_from_counts(const F1Counts& c) {
  if (c.overlap == 0) return 0.0;
  const double p = static_cast<double>(c.overlap) / static_cast<double>(c.predicted);
  const double r = static_cast<double>(c.overlap) / static_cast<double>(c.reference);
  return 2.0 * p * r / (p + r);
}

double f1_sequence(const std::vector<std::string>& predicted, const std::vector<std::string>& reference) {
  return f1_from_counts(f1_counts(predicted, reference));
}

double micro_f1(const std::vector<F1Counts>& counts) {
  F1Counts total;
  for (const auto& c : counts) {
    total.overlap += c.overlap;
    total.predicted += c.predicted;
    total.reference += c.reference;
  }
  return f1_from_counts(total);
}

}  // namespace edh::maf
