#include "edh/agent/model.hpp"

#include <numeric>

#include "edh/util/error.hpp"
#include "edh/worldsim/world.hpp"

namespace edh::agent {

using nn::Mask;
using nn::Matrix;
using nn::Tensor;

namespace {

constexpr int kKernel = 3;
constexpr int kCells = worldsim::kViewSize * worldsim::kViewSize;

const char* to_string(VisionMode m) {
  switch (m) {
    case VisionMode::Frames: return "frames";
    case VisionMode::Zero: return "zero";
    case VisionMode::None: return "none";
  }
  return "frames";
}

VisionMode vision_from(const std::string& s) {
  if (s == "frames") return VisionMode::Frames;
  if (s == "zero") return VisionMode::Zero;
  if (s == "none") return VisionMode::None;
  throw ConfigError("unknown vision mode '" + s + "'");
}

const char* to_string(InitMode m) { return m == InitMode::Random ? "random" : "synthetic_pretrained"; }

InitMode init_from(const std::string& s) {
  if (s == "random") return InitMode::Random;
  if (s == "synthetic_pretrained") return InitMode::SyntheticPretrained;
  throw ConfigError("unknown init mode '" + s + "'");
}

// 3x3 zero-padded patches of every cell of every frame: [T*49 x C*9].
Matrix im2col(const Matrix& frames, int channels) {
  const int v = worldsim::kViewSize;
  Matrix out = Matrix::Zero(frames.rows() * kCells, channels * kKernel * kKernel);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (int r = 0; r < v; ++r) {
      for (int c = 0; c < v; ++c) {
        const Eigen::Index row = t * kCells + r * v + c;
        for (int ch = 0; ch < channels; ++ch) {
          for (int dr = 0; dr < kKernel; ++dr) {
            for (int dc = 0; dc < kKernel; ++dc) {
              const int rr = r + dr - 1, cc = c + dc - 1;
              if (rr < 0 || rr >= v || cc < 0 || cc >= v) continue;
              out(row, (ch * kKernel + dr) * kKernel + dc) = frames(t, (ch * v + rr) * v + cc);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<int> iota(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.d_model = 32;
  c.text_layers = 1;
  c.mm_encoder_layers = 2;
  c.heads = 4;
  c.max_dialog_tokens = 192;
  c.max_steps = 64;
  return c;
}

void ModelConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
  if (mm_encoder_layers < 1) throw ConfigError("mm_encoder_layers must be at least 1");
  if (text_layers < 0) throw ConfigError("text_layers must be non-negative");
  if (max_dialog_tokens < 1 || max_steps < 1) throw ConfigError("max_dialog_tokens and max_steps must be positive");
  if (observation_channels < worldsim::kMinChannels || conv_channels < 1) throw ConfigError("bad vision sizes");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
}

Json ModelConfig::to_json() const {
  return Json{{"d_model", d_model},
              {"text_layers", text_layers},
              {"mm_encoder_layers", mm_encoder_layers},
              {"heads", heads},
              {"ff_hidden", ff_hidden},
              {"dropout", dropout},
              {"max_dialog_tokens", max_dialog_tokens},
              {"max_steps", max_steps},
              {"observation_channels", observation_channels},
              {"conv_channels", conv_channels},
              {"cross_attention", cross_attention},
              {"vision", to_string(vision)},
              {"init_mode", to_string(init_mode)},
              {"seed", seed},
              {"text_vocab", text_vocab},
              {"action_classes", action_classes},
              {"object_classes", object_classes},
              {"action_inputs", action_inputs}};
}

ModelConfig ModelConfig::from_json(const Json& j) {
  ModelConfig c;
  try {
    c.d_model = j.value("d_model", c.d_model);
    c.text_layers = j.value("text_layers", c.text_layers);
    c.mm_encoder_layers = j.value("mm_encoder_layers", c.mm_encoder_layers);
    c.heads = j.value("heads", c.heads);
    c.ff_hidden = j.value("ff_hidden", c.ff_hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.max_dialog_tokens = j.value("max_dialog_tokens", c.max_dialog_tokens);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.observation_channels = j.value("observation_channels", c.observation_channels);
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    c.cross_attention = j.value("cross_attention", c.cross_attention);
    c.vision = vision_from(j.value("vision", std::string("frames")));
    c.init_mode = init_from(j.value("init_mode", std::string("random")));
    c.seed = j.value("seed", c.seed);
    c.text_vocab = j.value("text_vocab", 0);
    c.action_classes = j.value("action_classes", 0);
    c.object_classes = j.value("object_classes", 0);
    c.action_inputs = j.value("action_inputs", 0);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

ActionCodec::ActionCodec(const corpus::Vocabularies& vocab)
    : actions_(vocab.actions.symbols), objects_(vocab.objects.symbols) {
  for (const auto& name : actions_) {
    const auto* def = worldsim::find_action(name);
    if (def == nullptr) throw UnknownAction("action vocabulary holds unknown action '" + name + "'");
    if (def->requires_object) {
      for (const auto& o : objects_) inputs_.push_back({name, o});
    } else {
      inputs_.push_back({name, std::nullopt});
    }
  }
}

const worldsim::ActionRef& ActionCodec::input(int index) const {
  if (index < 1 || index >= input_count()) throw IndexError("action input " + std::to_string(index) + " out of range");
  return inputs_[static_cast<std::size_t>(index - 1)];
}

int ActionCodec::input_index(const worldsim::ActionRef& a) const {
  auto it = std::find(inputs_.begin(), inputs_.end(), a);
  if (it == inputs_.end()) throw UnknownAction("no action embedding for '" + worldsim::to_string(a) + "'");
  return static_cast<int>(it - inputs_.begin()) + 1;
}

int ActionCodec::action_class(const std::string& action) const {
  auto it = std::find(actions_.begin(), actions_.end(), action);
  if (it == actions_.end()) throw UnknownAction("action '" + action + "' is not in the vocabulary");
  return static_cast<int>(it - actions_.begin());
}

int ActionCodec::object_class(const worldsim::ActionRef& a) const {
  if (!a.object) return none_object();
  auto it = std::find(objects_.begin(), objects_.end(), *a.object);
  if (it == objects_.end()) throw IndexError("object '" + *a.object + "' is not in the vocabulary");
  return static_cast<int>(it - objects_.begin());
}

const std::string& ActionCodec::action_name(int cls) const {
  if (cls < 0 || cls >= action_classes()) throw IndexError("action class out of range");
  return actions_[static_cast<std::size_t>(cls)];
}

const std::string& ActionCodec::object_name(int cls) const {
  if (cls < 0 || cls >= none_object()) throw IndexError("object class out of range");
  return objects_[static_cast<std::size_t>(cls)];
}

worldsim::ActionRef ActionCodec::decode(int action_cls, int object_cls) const {
  worldsim::ActionRef a{action_name(action_cls), std::nullopt};
  if (worldsim::find_action(a.action)->requires_object) a.object = object_name(object_cls);
  return a;
}

std::vector<bool> build_future_action_mask(int t_now, int steps) {
  std::vector<bool> m(static_cast<std::size_t>(std::max(steps, 0)));
  for (int j = 0; j < steps; ++j) m[static_cast<std::size_t>(j)] = j <= t_now;
  return m;
}

Tensor cross_modal_attend(const nn::MultiHeadAttention& attn, const Tensor& target, const Tensor& source,
                          const Mask& mask) {
  if (target.cols() != source.cols() || target.cols() != attn.q.weight.rows()) {
    throw ShapeMismatch("cross-modal attention: target and source widths must match the block");
  }
  if (mask.rows() != target.rows() || mask.cols() != source.rows()) {
    throw ShapeMismatch("cross-modal attention: mask must be [len(target) x len(source)]");
  }
  Matrix keep(target.rows(), 1), fallback(target.rows(), 1);
  bool any_fallback = false;
  for (Eigen::Index i = 0; i < target.rows(); ++i) {
    const bool open = mask.row(i).any();
    keep(i, 0) = open ? 1.0 : 0.0;
    fallback(i, 0) = open ? 0.0 : 1.0;
    any_fallback |= !open;
  }
  Tensor attended = attn(target, source, mask);
  if (!any_fallback) return attended;
  return nn::mul_col(attended, nn::constant(keep)) + nn::mul_col(target, nn::constant(fallback));
}

Mask multimodal_mask(const std::vector<bool>& text_valid, int steps, bool with_vision) {
  const auto m = static_cast<Eigen::Index>(text_valid.size());
  const int streams = with_vision ? 2 : 1;
  const Eigen::Index n = m + streams * steps;
  Mask mask = Mask::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) mask(i, j) = text_valid[static_cast<std::size_t>(j)];
  }
  for (int s = 0; s < streams; ++s) {
    for (int t = 0; t < steps; ++t) {
      const auto visible = build_future_action_mask(t, steps);
      const Eigen::Index row = m + s * steps + t;
      for (int s2 = 0; s2 < streams; ++s2) {
        for (int j = 0; j < steps; ++j) mask(row, m + s2 * steps + j) = visible[static_cast<std::size_t>(j)];
      }
    }
  }
  return mask;
}

int argmax_first(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return static_cast<int>(best);
}

AgentModel::AgentModel(ModelConfig config, const corpus::Vocabularies& vocab) : config_(std::move(config)), codec_(vocab) {
  config_.text_vocab = vocab.text.size();
  config_.action_classes = codec_.action_classes();
  config_.object_classes = codec_.object_classes();
  config_.action_inputs = codec_.input_count();
  config_.validate();
  vocab_hashes_ = {{"text", vocab.text.hash()}, {"actions", vocab.actions.hash()}, {"objects", vocab.objects.hash()}};

  Rng rng(config_.seed);
  const int d = config_.d_model;
  text_ = TextEncoder(params_, "text", config_.text_vocab, config_.max_dialog_tokens, d, config_.heads,
                      config_.hidden(), config_.text_layers, rng);
  if (config_.vision != VisionMode::None) {
    conv_ = nn::Linear(params_, "vision.conv", config_.observation_channels * kKernel * kKernel, config_.conv_channels,
                       rng);
    vis_proj_ = nn::Linear(params_, "vision.proj", kCells * config_.conv_channels, d, rng);
    vis_pos_ = nn::Embedding(params_, "vision.positions", config_.max_steps, d, rng);
  }
  action_table_ = nn::Embedding(params_, "actions.table", config_.action_inputs, d, rng);
  act_pos_ = nn::Embedding(params_, "actions.positions", config_.max_steps, d, rng);
  if (config_.cross_attention) {
    // Zero output projections: each cross block starts as the identity.
    if (config_.vision != VisionMode::None) {
      vis_cross_ = nn::MultiHeadAttention(params_, "cross.vision", d, config_.heads, rng);
      vis_cross_.out.weight.mutable_value().setZero();
    }
    act_cross_ = nn::MultiHeadAttention(params_, "cross.actions", d, config_.heads, rng);
    act_cross_.out.weight.mutable_value().setZero();
  }
  for (int i = 0; i < config_.mm_encoder_layers; ++i) {
    mm_layers_.emplace_back(params_, "mm.layer" + std::to_string(i), d, config_.heads, config_.hidden(), rng);
  }
  action_head_ = nn::Linear(params_, "head.action", d, config_.action_classes, rng);
  object_head_ = nn::Linear(params_, "head.object", d, config_.object_classes, rng);
}

Tensor AgentModel::encode_text(std::span<const int> ids, const nn::Context& ctx) const { return text_(ids, ctx); }

Tensor AgentModel::encode_frames(const Matrix& frames, const nn::Context& ctx) const {
  if (config_.vision == VisionMode::None) throw ConfigError("vision stream is disabled in this model");
  const Eigen::Index width = static_cast<Eigen::Index>(config_.observation_channels) * kCells;
  if (frames.cols() != width) {
    throw ShapeMismatch("encode_frames: expected " + std::to_string(width) + " features per frame");
  }
  const Tensor patches = nn::constant(im2col(frames, config_.observation_channels));
  Tensor maps = nn::relu(conv_(patches));
  maps = nn::reshape(maps, frames.rows(), kCells * config_.conv_channels);
  return vis_proj_(ctx.drop(maps));
}

Tensor AgentModel::embed_actions(std::span<const int> indices) const { return action_table_(indices); }

FusionTensors AgentModel::multimodal_encode(const Tensor& h_text, const std::vector<bool>& text_valid,
                                            const Tensor& h_vis, const Tensor& h_act, const nn::Context& ctx) const {
  const bool with_vision = config_.vision != VisionMode::None;
  const Eigen::Index steps = h_act.rows();
  if (steps < 1 || steps > config_.max_steps) throw ShapeMismatch("multimodal_encode: step count out of range");
  if (with_vision && h_vis.rows() != steps) throw ShapeMismatch("multimodal_encode: |h_vis| != |h_act|");
  if (static_cast<Eigen::Index>(text_valid.size()) != h_text.rows()) {
    throw ShapeMismatch("multimodal_encode: text mask length differs from h_text");
  }
  const auto pos = iota(static_cast<int>(steps));
  FusionTensors f;
  f.h_text = h_text;
  f.h_act = h_act + act_pos_(pos);
  if (with_vision) f.h_vis = h_vis + vis_pos_(pos);
  if (config_.cross_attention) {
    const Mask to_text = nn::key_mask(steps, text_valid);
    if (with_vision) f.h_vis = f.h_vis + ctx.drop(cross_modal_attend(vis_cross_, f.h_vis, h_text, to_text));
    f.h_act = f.h_act + ctx.drop(cross_modal_attend(act_cross_, f.h_act, h_text, to_text));
  }

  std::vector<Tensor> parts = {f.h_text};
  if (with_vision) parts.push_back(f.h_vis);
  parts.push_back(f.h_act);
  Tensor x = nn::concat_rows(parts);
  const Mask mask = multimodal_mask(text_valid, static_cast<int>(steps), with_vision);
  for (const auto& layer : mm_layers_) x = layer(x, mask, ctx);

  const Eigen::Index m = h_text.rows();
  f.z_text = nn::slice_rows(x, 0, m);
  if (with_vision) {
    f.z_vis = nn::slice_rows(x, m, steps);
    f.z_act = nn::slice_rows(x, m + steps, steps);
  } else {
    f.z_act = nn::slice_rows(x, m, steps);
  }
  return f;
}

std::pair<Tensor, Tensor> AgentModel::classify_heads(const Tensor& z) const { return {action_head_(z), object_head_(z)}; }

ModelOutput AgentModel::forward(const ModelInput& input, const nn::Context& ctx) const {
  if (input.actions.empty()) throw ShapeMismatch("forward: no steps");
  const auto steps = static_cast<Eigen::Index>(input.actions.size());
  const std::vector<bool> valid = non_pad(input.text);
  Tensor h_text = encode_text(input.text, ctx);
  Tensor h_vis;
  if (config_.vision != VisionMode::None) {
    if (input.frames.rows() != steps) throw ShapeMismatch("forward: need one frame per step");
    h_vis = config_.vision == VisionMode::Zero ? encode_frames(Matrix::Zero(steps, input.frames.cols()), ctx)
                                               : encode_frames(input.frames, ctx);
  }
  Tensor h_act = ctx.drop(embed_actions(input.actions));
  ModelOutput out;
  out.fusion = multimodal_encode(h_text, valid, h_vis, h_act, ctx);
  auto [a, o] = classify_heads(config_.vision == VisionMode::None ? out.fusion.z_act : out.fusion.z_vis);
  out.action_logits = a;
  out.object_logits = o;
  return out;
}

void AgentModel::load_text_encoder(const nn::Checkpoint& ckpt) {
  ckpt.require_vocab({{"text", vocab_hashes_.at("text")}});
  if (ckpt.restore(params_, "text.") == 0) throw CheckpointError("checkpoint holds no text encoder weights");
  config_.init_mode = InitMode::SyntheticPretrained;
}

nn::Checkpoint AgentModel::checkpoint() const {
  return nn::Checkpoint::capture("agent", config_.to_json(), vocab_hashes_, params_);
}

AgentModel AgentModel::from_checkpoint(const nn::Checkpoint& ckpt, const corpus::Vocabularies& vocab) {
  if (ckpt.kind != "agent") throw CheckpointError("expected an agent checkpoint, got '" + ckpt.kind + "'");
  AgentModel model(ModelConfig::from_json(ckpt.config), vocab);
  ckpt.require_vocab(model.vocab_hashes_);
  ckpt.restore(model.params_);
  return model;
}

Tensor compute_loss(const ModelOutput& out, const Targets& targets, bool include_history, double action_weight,
                    double object_weight) {
  const auto steps = static_cast<std::size_t>(out.action_logits.rows());
  if (targets.actions.size() != steps || targets.objects.size() != steps) {
    throw ShapeMismatch("compute_loss: targets must cover every step");
  }
  auto heads = [&](bool future) {
    std::vector<int> a = targets.actions, o = targets.objects;
    for (std::size_t t = 0; t < steps; ++t) {
      if ((static_cast<int>(t) >= targets.first_future) != future) a[t] = o[t] = -1;
    }
    return nn::affine(nn::cross_entropy(out.action_logits, a), action_weight) +
           nn::affine(nn::cross_entropy(out.object_logits, o), object_weight);
  };
  Tensor loss = heads(true);
  if (include_history && targets.first_future > 0) loss = loss + heads(false);
  return loss;
}

}  // namespace edh::agent
