#include <doctest.h>

#include <algorithm>

#include "edh/corpus/edh.hpp"
#include "edh/util/error.hpp"
#include "maf_checks.hpp"

using namespace edh;
using namespace edh::maf;
using edh::testing::random_matrix;
using edh::testing::small_vocab;
using edh::testing::tiny_maf_config;
using nn::Matrix;
using nn::Tensor;

TEST_CASE("infusion and fusion match naive arithmetic") {
  const auto r = edh::testing::check_maf_oracles(17, 300);
  CHECK(r.trials == 300);
  CHECK(r.infuse_error < 1e-9);
  CHECK(r.fuse_error < 1e-9);
  CHECK(r.lambda_zero_exact);
  CHECK(r.lambda_one_exact);
  CHECK(r.zero_gates_exact);
  CHECK(r.cancellation_exact);
}

TEST_CASE("half lambda is the midpoint of K and the pooled context") {
  // C = [1; 3] pools to 2, so C U = 8 and K_hat = (2 + 8) / 2.
  MCA2Params p;
  p.lambda_k = p.lambda_v = nn::constant(Matrix::Zero(1, 1));
  p.u_k = p.u_v = nn::constant(Matrix::Constant(1, 1, 4.0));
  Matrix c(2, 1);
  c << 1.0, 3.0;
  const InfusedKV kv = mca2_infuse(nn::constant(Matrix::Constant(1, 1, 2.0)),
                                   nn::constant(Matrix::Constant(1, 1, -2.0)), nn::constant(c), p);
  CHECK(kv.k_hat.item() == doctest::Approx(5.0));
  CHECK(kv.v_hat.item() == doctest::Approx(3.0));
}

TEST_CASE("infusion and fusion reject inconsistent shapes") {
  Rng rng(2);
  MCA2Params p;
  p.lambda_k = p.lambda_v = nn::constant(Matrix::Zero(3, 1));
  p.u_k = p.u_v = nn::constant(random_matrix(5, 4, rng));
  const Tensor k = nn::constant(random_matrix(3, 4, rng));
  CHECK_NOTHROW(mca2_infuse(k, k, nn::constant(random_matrix(2, 5, rng)), p));
  CHECK_THROWS_AS(mca2_infuse(k, k, nn::constant(random_matrix(2, 4, rng)), p), ShapeMismatch);
  CHECK_THROWS_AS(mca2_infuse(k, nn::constant(random_matrix(2, 4, rng)), nn::constant(random_matrix(2, 5, rng)), p),
                  ShapeMismatch);
  MCA2Params bad = p;
  bad.lambda_k = nn::constant(Matrix::Zero(2, 1));
  CHECK_THROWS_AS(mca2_infuse(k, k, nn::constant(random_matrix(2, 5, rng)), bad), ShapeMismatch);

  const Tensor streams[] = {k};
  const Tensor gates[] = {nn::constant(Matrix::Ones(3, 3))};
  CHECK_THROWS_AS(gif_fuse(k, streams, gates), ShapeMismatch);
  CHECK_THROWS_AS(gif_fuse(k, streams, std::span<const Tensor>{}), ShapeMismatch);
}

TEST_CASE("every MAF parameter matches finite differences") {
  const auto r = edh::testing::check_maf_gradients(5);
  CHECK(r.tensors > 20);
  CHECK(r.checked > 1000);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("fused input is n x d for any history length") {
  const auto vocab = small_vocab();
  MAFModel model(tiny_maf_config(), vocab);
  Rng rng(8);
  const nn::Context eval;
  for (int len : {0, 1, 3, 9}) {
    MAFInput in;
    in.text = {4, 5, 6, 7, 8, 9, 10, 11};  // longer than n, keeps the tail
    for (int i = 0; i < len; ++i) in.history.push_back(1 + static_cast<int>(rng.below(5)));
    in.frames = random_matrix(len + 1, 16 * 49, rng);
    const Tensor x = model.fuse_inputs(in, eval);
    CHECK(x.rows() == 6);
    CHECK(x.cols() == 8);
  }
  CHECK(model.padded_text(std::vector<int>{4, 5}) == std::vector<int>{4, 5, 0, 0, 0, 0});
  CHECK(model.padded_text(std::vector<int>{4, 5, 6, 7, 8, 9, 10, 11}) == std::vector<int>{6, 7, 8, 9, 10, 11});
}

TEST_CASE("empty action history is a zero context") {
  const auto vocab = small_vocab();
  MAFModel model(tiny_maf_config(), vocab);
  Rng rng(3);
  MAFInput in;
  in.text = {4, 5, 6};
  in.frames = random_matrix(1, 16 * 49, rng);
  const nn::Context eval;
  const Matrix a = model.fuse_inputs(in, eval).value();
  const Matrix b = model.fuse(in.text, nn::constant(Matrix::Zero(1, 8)), model.vision_context(in.frames), eval).value();
  CHECK(a == b);
  CHECK(model.action_context(std::vector<int>{}).value().isZero(0.0));

  // Only the last max_history rows of a long history reach the context.
  std::vector<int> long_history = {1, 2, 3, 4, 5, 6};
  const std::vector<int> tail = {3, 4, 5, 6};
  CHECK(model.action_context(long_history).value() == model.action_context(tail).value());
}

TEST_CASE("decode step is a causal distribution") {
  const auto vocab = small_vocab();
  MAFModel model(tiny_maf_config(), vocab);
  Rng rng(21);
  MAFInput in;
  in.text = {4, 5, 6, 7};
  in.history = {2, 3};
  in.frames = random_matrix(3, 16 * 49, rng);
  const nn::Context eval;
  const Tensor x = model.fuse_inputs(in, eval);
  const auto valid = model.memory_valid(in);
  std::vector<int> prefix = {model.bos(), 4, 2, 7, 1};
  for (std::size_t t = 1; t <= prefix.size(); ++t) {
    const Matrix p = model.decode_step(x, valid, std::span<const int>(prefix).first(t));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.cols() == model.token_count());
  }
  const Matrix base = model.decoder_logits(x, valid, prefix, eval).value();
  for (std::size_t t = 0; t + 1 < prefix.size(); ++t) {
    std::vector<int> other = prefix;
    for (std::size_t s = t + 1; s < other.size(); ++s) other[s] = 1 + static_cast<int>(rng.below(8));
    const Matrix changed = model.decoder_logits(x, valid, other, eval).value();
    CHECK(changed.topRows(static_cast<Eigen::Index>(t) + 1) == base.topRows(static_cast<Eigen::Index>(t) + 1));
  }
}

TEST_CASE("overfit five sequences and decode them back") {
  const auto vocab = small_vocab();
  MAFConfig cfg = tiny_maf_config(2);
  cfg.d_model = 16;
  cfg.max_dialog_tokens = 8;
  MAFModel model(cfg, vocab);
  Rng rng(6);
  std::vector<MAFExample> examples;
  for (int i = 0; i < 5; ++i) {
    MAFExample ex;
    ex.instance_id = "seq" + std::to_string(i);
    for (int k = 0; k < 5; ++k) ex.input.text.push_back(4 + static_cast<int>(rng.below(20)));
    ex.input.history = {1 + i};
    ex.input.frames = random_matrix(2, 16 * 49, rng);
    const int len = 2 + i % 3;
    for (int k = 0; k < len; ++k) ex.target.push_back(1 + static_cast<int>(rng.below(model.token_count() - 2)));
    ex.target.push_back(model.eos());
    examples.push_back(ex);
  }
  MAFTrainConfig tc = MAFTrainConfig::toy();
  tc.epochs = 150;
  tc.batch_size = 1;
  tc.lr = 5e-3;
  tc.warmup_steps = 0;
  const auto losses = train_maf(model, examples, tc);
  CHECK(losses.back() < losses.front());
  for (const auto& ex : examples) {
    const std::vector<int> want(ex.target.begin(), ex.target.end() - 1);
    CHECK(model.generate(ex.input) == want);
  }
}

TEST_CASE("examples come from the instance split") {
  std::vector<corpus::GameplaySession> sessions = {corpus::generate_session(
      0, worldsim::builtin_scenario("kitchen_small"), worldsim::builtin_task("MakeToast"))};
  const auto vocab = corpus::build_vocab(sessions);
  const auto instances = corpus::build_edh_instances(sessions[0]);
  REQUIRE(!instances.empty());
  MAFModel model(MAFConfig::toy(), vocab);
  for (const auto& inst : instances) {
    const MAFExample ex = make_maf_example(inst, model, vocab.text);
    CHECK(ex.input.history.size() == inst.action_history.size());
    CHECK(ex.input.frames.rows() == static_cast<Eigen::Index>(inst.image_history.size()) + 1);
    REQUIRE(ex.target.size() == inst.future_actions.size() + 1);
    CHECK(ex.target.back() == model.eos());
    for (std::size_t i = 0; i < inst.future_actions.size(); ++i) {
      CHECK(model.codec().input(ex.target[i]) == inst.future_actions[i]);
    }
  }
  MAFConfig small = MAFConfig::toy();
  small.max_actions = 1;
  MAFModel tight(small, vocab);
  CHECK_THROWS_AS(make_maf_example(instances[0], tight, vocab.text), ConfigError);
}

TEST_CASE("checkpoint round trip keeps generations") {
  const auto vocab = small_vocab();
  MAFModel model(tiny_maf_config(9), vocab);
  Rng rng(1);
  MAFInput in;
  in.text = {4, 7};
  in.history = {2};
  in.frames = random_matrix(2, 16 * 49, rng);
  const nn::Checkpoint ck = nn::Checkpoint::from_json(model.checkpoint().to_json());
  MAFModel back = MAFModel::from_checkpoint(ck, vocab);
  CHECK(back.fuse_inputs(in, nn::Context{}).value() == model.fuse_inputs(in, nn::Context{}).value());
  CHECK(back.generate(in) == model.generate(in));
  nn::Checkpoint other = ck;
  other.kind = "agent";
  CHECK_THROWS_AS(MAFModel::from_checkpoint(other, vocab), CheckpointError);
}

TEST_CASE("sequence F1 is micro multiset F1") {
  using V = std::vector<std::string>;
  CHECK(f1_sequence({"Forward", "Pickup Knife"}, {"Forward", "Pickup Knife"}) == 1.0);
  CHECK(f1_sequence({"Forward"}, {"TurnLeft"}) == 0.0);
  CHECK(f1_sequence({"fwd", "fwd", "pickup"}, {"fwd", "pickup", "slice"}) == doctest::Approx(2.0 / 3.0));
  CHECK(f1_sequence({}, {}) == 0.0);
  CHECK(f1_sequence({}, {"fwd"}) == 0.0);

  // Oracle: count matches by deleting from a copy of the reference.
  Rng rng(12);
  const V alphabet = {"a", "b", "c", "d"};
  std::vector<F1Counts> all;
  std::size_t overlap = 0, np = 0, nr = 0;
  for (int t = 0; t < 500; ++t) {
    V p, r;
    for (std::uint64_t i = rng.below(7); i > 0; --i) p.push_back(alphabet[rng.below(4)]);
    for (std::uint64_t i = rng.below(7); i > 0; --i) r.push_back(alphabet[rng.below(4)]);
    V pool = r;
    std::size_t m = 0;
    for (const auto& tok : p) {
      auto it = std::find(pool.begin(), pool.end(), tok);
      if (it != pool.end()) {
        pool.erase(it);
        ++m;
      }
    }
    const F1Counts c = f1_counts(p, r);
    CHECK(c.overlap == m);
    const double expect = m > 0 ? 2.0 * static_cast<double>(m) / static_cast<double>(p.size() + r.size()) : 0.0;
    CHECK(f1_sequence(p, r) == doctest::Approx(expect).epsilon(1e-12));
    all.push_back(c);
    overlap += m;
    np += p.size();
    nr += r.size();
  }
  CHECK(micro_f1(all) == doctest::Approx(2.0 * static_cast<double>(overlap) / static_cast<double>(np + nr)));
}
