#pragma once

// Causality probes for the agent, shared by the unit suite and the
// acceptance runner.

#include <cmath>
#include <vector>

#include "edh/agent/model.hpp"
#include "edh/corpus/generate.hpp"
#include "edh/worldsim/catalog.hpp"
#include "gradcheck.hpp"

namespace edh::testing {

inline corpus::Vocabularies small_vocab() {
  std::vector<corpus::GameplaySession> sessions;
  sessions.push_back(corpus::generate_session(0, worldsim::builtin_scenario("kitchen_small"),
                                              worldsim::builtin_task("MakeToast")));
  sessions.push_back(corpus::generate_session(1, worldsim::builtin_scenario("kitchen_wide"),
                                              worldsim::builtin_task("CleanPlate")));
  return corpus::build_vocab(sessions);
}

inline agent::ModelConfig tiny_config(bool cross_attention, std::uint64_t seed = 3) {
  agent::ModelConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.text_layers = 1;
  c.mm_encoder_layers = 2;
  c.dropout = 0.0;
  c.max_dialog_tokens = 16;
  c.max_steps = 8;
  c.conv_channels = 2;
  c.cross_attention = cross_attention;
  c.seed = seed;
  return c;
}

inline agent::ModelInput random_input(const agent::AgentModel& model, int text_len, int steps, Rng& rng) {
  agent::ModelInput in;
  for (int i = 0; i < text_len; ++i) {
    in.text.push_back(4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(model.config().text_vocab - 4))));
  }
  const Eigen::Index width = static_cast<Eigen::Index>(model.config().observation_channels) * 49;
  in.frames = nn::Matrix(steps, width);
  for (Eigen::Index i = 0; i < in.frames.size(); ++i) in.frames.data()[i] = rng.bernoulli(0.2) ? rng.uniform() : 0.0;
  in.actions.push_back(agent::ActionCodec::kStart);
  for (int t = 1; t < steps; ++t) {
    in.actions.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(model.codec().input_count() - 1))));
  }
  return in;
}

struct CausalityResult {
  bool logits_bitwise_stable = true;  // earlier rows unchanged under future perturbation
  double max_masked_analytic = 0.0;   // |d loss_t / d future input|, analytic
  double max_masked_numeric = 0.0;    // same by central differences
  double max_open_rel_error = 0.0;    // analytic vs numeric on visible inputs
  std::size_t perturbations = 0;
};

// Eval-mode probes on a d=16, T=8 model: (1) perturb every future frame and
// action input after step t and compare logits rows <= t bitwise; (2) take a
// random projection of step t's logits as loss and check that its gradient
// with respect to h_vis/h_act rows > t is zero both analytically and by
// finite differences.
inline CausalityResult check_causality(bool cross_attention, std::uint64_t seed) {
  const corpus::Vocabularies vocab = small_vocab();
  agent::AgentModel model(tiny_config(cross_attention, seed), vocab);
  const int steps = 8;
  Rng rng(seed * 7 + 1);
  // Cross blocks start as the identity; give them live output projections.
  for (const char* name : {"cross.vision.out.weight", "cross.actions.out.weight"}) {
    if (nn::Tensor* w = model.params().find(name)) w->mutable_value() = nn::uniform_matrix(w->rows(), w->cols(), 0.5, rng);
  }
  const agent::ModelInput base = random_input(model, 10, steps, rng);
  const nn::Context eval;
  CausalityResult r;

  nn::Matrix base_a, base_o;
  {
    nn::NoGradGuard g;
    const agent::ModelOutput out = model.forward(base, eval);
    base_a = out.action_logits.value();
    base_o = out.object_logits.value();
  }
  for (int t = 0; t + 1 < steps; ++t) {
    agent::ModelInput p = base;
    for (int s = t + 1; s < steps; ++s) {
      for (Eigen::Index k = 0; k < p.frames.cols(); ++k) p.frames(s, k) = rng.uniform();
      p.actions[static_cast<std::size_t>(s)] =
          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(model.codec().input_count() - 1)));
    }
    nn::NoGradGuard g;
    const agent::ModelOutput out = model.forward(p, eval);
    for (int s = 0; s <= t; ++s) {
      if (out.action_logits.value().row(s) != base_a.row(s) || out.object_logits.value().row(s) != base_o.row(s)) {
        r.logits_bitwise_stable = false;
      }
    }
    ++r.perturbations;
  }

  // Gradient form on the fused streams.
  const std::vector<bool> valid = agent::non_pad(base.text);
  nn::Tensor h_text, h_vis0, h_act0;
  {
    nn::NoGradGuard g;
    h_text = nn::constant(model.encode_text(base.text, eval).value());
    h_vis0 = nn::constant(model.encode_frames(base.frames, eval).value());
    h_act0 = nn::constant(model.embed_actions(base.actions).value());
  }
  for (int t : {0, 3, 6}) {
    nn::Tensor h_vis(h_vis0.value(), true), h_act(h_act0.value(), true);
    nn::Matrix proj_a = nn::Matrix::Zero(steps, model.config().action_classes);
    nn::Matrix proj_o = nn::Matrix::Zero(steps, model.config().object_classes);
    for (Eigen::Index j = 0; j < proj_a.cols(); ++j) proj_a(t, j) = rng.uniform(-1.0, 1.0);
    for (Eigen::Index j = 0; j < proj_o.cols(); ++j) proj_o(t, j) = rng.uniform(-1.0, 1.0);
    auto loss = [&] {
      agent::FusionTensors f = model.multimodal_encode(h_text, valid, h_vis, h_act, eval);
      auto [a, o] = model.classify_heads(f.z_vis);
      return nn::sum_all(nn::mul(a, nn::constant(proj_a))) + nn::sum_all(nn::mul(o, nn::constant(proj_o)));
    };
    h_vis.zero_grad();
    h_act.zero_grad();
    loss().backward();
    const nn::Matrix gv = h_vis.grad(), ga = h_act.grad();

    nn::NoGradGuard g;
    const double step = 1e-5;
    for (nn::Tensor* x : {&h_vis, &h_act}) {
      const nn::Matrix& analytic = x == &h_vis ? gv : ga;
      for (Eigen::Index row = 0; row < steps; ++row) {
        for (Eigen::Index col = 0; col < x->cols(); col += 3) {
          double& v = x->mutable_value()(row, col);
          const double orig = v;
          v = orig + step;
          const double up = loss().item();
          v = orig - step;
          const double down = loss().item();
          v = orig;
          const double numeric = (up - down) / (2 * step);
          if (row > t) {
            r.max_masked_analytic = std::max(r.max_masked_analytic, std::abs(analytic(row, col)));
            r.max_masked_numeric = std::max(r.max_masked_numeric, std::abs(numeric));
          } else {
            r.max_open_rel_error = std::max(r.max_open_rel_error, rel_error(analytic(row, col), numeric));
          }
        }
      }
    }
  }
  return r;
}

}  // namespace edh::testing
