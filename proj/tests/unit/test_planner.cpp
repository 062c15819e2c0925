#include <doctest.h>

#include "edh/agent/train.hpp"
#include "edh/metrics/metrics.hpp"
#include "edh/planner/planner.hpp"
#include "edh/util/error.hpp"
#include "fixtures.hpp"

using namespace edh;
using namespace edh::planner;

namespace {

PlannerConfig quick_config(std::uint64_t seed = 0) {
  PlannerConfig c = PlannerConfig::toy();
  c.d_model = 16;
  c.heads = 2;
  c.max_src_len = 96;
  c.seed = seed;
  return c;
}

double corpus_rouge_l(const PlannerModel& model, const std::vector<TextPair>& pairs) {
  std::vector<metrics::PlanScore> scores;
  for (const auto& p : pairs) scores.push_back(metrics::score_plan(p.id, model.generate(p.source), p.target));
  return *metrics::aggregate(scores).rougeL;
}

const testing::ToyCorpus& corpus6() {
  static const testing::ToyCorpus c = testing::toy_corpus(6);
  return c;
}

}  // namespace

TEST_CASE("pairs pair the dialog with the plan text") {
  const auto& c = corpus6();
  const auto pairs = plan_pairs(c.instances);
  REQUIRE(pairs.size() == c.instances.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].id == c.instances[i].instance_id);
    CHECK(pairs[i].source == corpus::dialog_tokens(c.instances[i]));
    CHECK(corpus::parse_plan(pairs[i].target).plan == corpus::extract_plan(c.instances[i]));
    CHECK(pairs[i].target.size() % 2 == 0);
  }
}

TEST_CASE("a single pair is memorised within 200 steps") {
  const auto& c = corpus6();
  const std::vector<TextPair> one = {plan_pairs(c.instances)[0]};
  PlannerConfig cfg = PlannerConfig::toy();
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.lr = 5e-3;
  cfg.warmup_steps = 10;
  const PlannerTraining run = train_planner(one, c.vocab.text, cfg);
  REQUIRE(run.epoch_losses.size() == 200);
  CHECK(run.epoch_losses.back() < 0.01);
  CHECK(predict_plan(run.model, one[0].source).plan == corpus::parse_plan(one[0].target).plan);
}

TEST_CASE("training is deterministic and validated") {
  const auto& c = corpus6();
  const auto pairs = plan_pairs(c.instances);
  PlannerConfig cfg = quick_config(4);
  cfg.epochs = 3;
  cfg.dropout = 0.1;
  const auto a = train_planner(pairs, c.vocab.text, cfg);
  const auto b = train_planner(pairs, c.vocab.text, cfg);
  CHECK(a.epoch_losses == b.epoch_losses);
  cfg.seed = 5;
  CHECK(train_planner(pairs, c.vocab.text, cfg).epoch_losses != a.epoch_losses);

  CHECK_THROWS_AS(train_planner({}, c.vocab.text, cfg), EmptyCorpus);
  std::vector<TextPair> long_plan = {pairs[0]};
  long_plan[0].target.clear();
  for (int i = 0; i < 20; ++i) long_plan[0].target.insert(long_plan[0].target.end(), {"pickup", "knife"});
  CHECK_THROWS_AS(train_planner(long_plan, c.vocab.text, cfg), ConfigError);
  PlannerConfig even = cfg;
  even.max_tgt_len = 10;
  CHECK_THROWS_AS(even.validate(), ConfigError);
}

TEST_CASE("teacher-forced decoder is causal") {
  const auto& c = corpus6();
  const PlannerModel model(quick_config(2), c.vocab.text);
  const auto pair = plan_pairs(c.instances)[1];
  const std::vector<int> src = model.source_ids(pair.source);
  const std::vector<int> tgt = model.target_ids(pair.target);
  const nn::Matrix base = model.logits(src, tgt, nn::Context{}).value();
  Rng rng(3);
  for (std::size_t t = 0; t + 1 < tgt.size(); ++t) {
    std::vector<int> other = tgt;
    for (std::size_t s = t; s + 1 < other.size(); ++s) other[s] = 4 + static_cast<int>(rng.below(20));
    const nn::Matrix changed = model.logits(src, other, nn::Context{}).value();
    // Row r sees inputs BOS, tgt[0..r-1]; rows <= t are untouched.
    CHECK(changed.topRows(static_cast<Eigen::Index>(t) + 1) == base.topRows(static_cast<Eigen::Index>(t) + 1));
  }
}

TEST_CASE("prediction is total and deterministic") {
  const auto& c = corpus6();
  const PlannerModel model(quick_config(7), c.vocab.text);
  const corpus::ParsedPlan empty = predict_plan(model, {});
  CHECK(corpus::is_valid_plan(empty.plan));
  const auto pair = plan_pairs(c.instances)[0];
  CHECK(model.generate(pair.source) == model.generate(pair.source));
  CHECK(model.generate(pair.source).size() < static_cast<std::size_t>(model.config().max_tgt_len));
  const corpus::ParsedPlan dangling = corpus::parse_plan({"pickup", "knife", "slice"});
  CHECK(dangling.malformed);
  CHECK(dangling.plan.steps.size() == 1);
}

TEST_CASE("overfit plans are predicted exactly") {
  const auto& c = corpus6();
  const auto pairs = plan_pairs(c.instances);
  PlannerConfig cfg = quick_config(1);
  cfg.epochs = 150;
  const PlannerTraining run = train_planner(pairs, c.vocab.text, cfg);
  CHECK(corpus_rouge_l(run.model, pairs) >= 0.95);
  for (const auto& p : pairs) CHECK(predict_plan(run.model, p.source).plan == corpus::parse_plan(p.target).plan);
}

TEST_CASE("checkpoint round trip") {
  const auto& c = corpus6();
  const PlannerModel model(quick_config(3), c.vocab.text);
  const nn::Checkpoint ck = nn::Checkpoint::from_json(model.checkpoint().to_json());
  const PlannerModel back = PlannerModel::from_checkpoint(ck, c.vocab.text);
  const auto pair = plan_pairs(c.instances)[2];
  CHECK(back.generate(pair.source) == model.generate(pair.source));
  CHECK(back.kind() == "planner");
  const corpus::TokenVocab other({"<pad>", "<bos>", "<eos>", "<unk>", "x"});
  CHECK_THROWS_AS(PlannerModel::from_checkpoint(ck, other), CheckpointError);
}

TEST_CASE("synthetic simplification initialises the agent text encoder") {
  const auto& c = corpus6();
  const auto pairs = simplification_pairs(corpus::synthetic_simplification_pairs(11, 20));
  REQUIRE(pairs.size() == 20);
  PlannerConfig cfg = PlannerConfig::toy();
  cfg.epochs = 60;
  const PlannerTraining run = train_synthetic_simplification(pairs, c.vocab.text, cfg);
  CHECK(run.model.kind() == "synthetic");
  CHECK(corpus_rouge_l(run.model, pairs) >= 0.95);

  const nn::Checkpoint ck = run.model.checkpoint();
  agent::AgentModel fresh(agent::ModelConfig::toy(), c.vocab);
  agent::AgentModel loaded(agent::ModelConfig::toy(), c.vocab);
  loaded.load_text_encoder(ck);
  CHECK(loaded.config().init_mode == agent::InitMode::SyntheticPretrained);
  const nn::Tensor* w = loaded.params().find("text.tokens");
  REQUIRE(w != nullptr);
  CHECK(w->value() == ck.params.at("text.tokens"));
  CHECK(loaded.params().find("head.action.weight")->value() == fresh.params().find("head.action.weight")->value());

  const agent::AgentExample ex = agent::make_example(c.instances[0], fresh, c.vocab.text);
  CHECK(agent::example_loss(loaded, ex, false) != agent::example_loss(fresh, ex, false));

  // A vocabulary with another hash is refused.
  const auto other = testing::toy_corpus(2);
  agent::AgentModel stranger(agent::ModelConfig::toy(), other.vocab);
  REQUIRE(other.vocab.text.hash() != c.vocab.text.hash());
  CHECK_THROWS_AS(stranger.load_text_encoder(ck), CheckpointError);
}
