#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_runner.hpp"
#include "edh/cli/pipeline.hpp"
#include "edh/corpus/stats.hpp"
#include "edh/util/error.hpp"

using namespace edh;
using namespace edh::cli;
namespace fs = std::filesystem;

namespace {

CorpusSpec small_spec(int sessions = 6) {
  CorpusSpec s;
  s.sessions = sessions;
  return s;
}

}  // namespace

TEST_CASE("corpus spec validates names and round-trips") {
  CorpusSpec s = small_spec();
  s.tasks = {"MakeToast"};
  CHECK(CorpusSpec::from_json(s.to_json()).to_json() == s.to_json());
  s.tasks = {"MakeToastt"};
  CHECK_THROWS_AS(generate_corpus(s), ConfigError);
  s = small_spec();
  s.scenarios = {"ballroom"};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = small_spec();
  s.split_rule = "random";
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("generation assigns splits by seed parity or all train") {
  CorpusSpec s = small_spec(5);
  s.first_seed = 10;
  const Corpus parity = generate_corpus(s);
  REQUIRE(parity.sessions.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(parity.sessions[i].seed == 10 + i);
    CHECK(parity.splits[i] == (i % 2 ? "valid_seen" : "train"));
  }
  s.split_rule = "train";
  for (const auto& split : generate_corpus(s).splits) CHECK(split == "train");
}

TEST_CASE("corpus and EDH directories are reproducible and read back") {
  const fs::path a = testing::scratch_dir("pipe_a"), b = testing::scratch_dir("pipe_b");
  const CorpusSpec spec = small_spec();
  for (const auto& dir : {a, b}) {
    const Corpus c = generate_corpus(spec);
    write_corpus((dir / "corpus").string(), spec, c);
    write_edh((dir / "edh").string(), build_edh(read_corpus((dir / "corpus").string())), (dir / "corpus").string());
  }
  CHECK(tree_hashes(a.string()) == tree_hashes(b.string()));

  const Corpus back = read_corpus((a / "corpus").string());
  const Corpus fresh = generate_corpus(spec);
  CHECK(back.sessions == fresh.sessions);
  CHECK(back.splits == fresh.splits);

  const EDHData data = build_edh(fresh);
  CHECK(read_vocab((a / "edh").string()) == data.vocab);
  for (const auto& [split, instances] : data.splits) {
    const auto read = read_instances((a / "edh").string(), split);
    REQUIRE(read.size() == instances.size());
    for (std::size_t i = 0; i < read.size(); ++i) CHECK(corpus::export_instance(read[i]) == corpus::export_instance(instances[i]));
  }
  CHECK(read_instances((a / "edh").string(), "valid_unseen").empty());

  // A tampered instance file fails schema validation.
  const Json manifest = read_json_file((a / "edh" / "manifest.json").string());
  const std::string rel = manifest["splits"]["train"][0]["file"];
  Json doc = read_json_file((a / "edh" / rel).string());
  doc.erase("future_actions");
  write_json_file((a / "edh" / rel).string(), doc);
  CHECK_THROWS_AS(read_instances((a / "edh").string(), "train"), SchemaError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("emitted task statistics match a streaming second pass") {
  const fs::path dir = testing::scratch_dir("pipe_stats");
  CorpusSpec spec = small_spec(15);
  spec.tasks = {"MakeToast", "ServeTomato", "CleanPlate"};
  write_corpus((dir / "corpus").string(), spec, generate_corpus(spec));
  write_edh((dir / "edh").string(), build_edh(read_corpus((dir / "corpus").string())), (dir / "corpus").string());

  // Welford over the session files, counting non-dialog events.
  struct Running {
    int n = 0;
    double mean_a = 0, m2_a = 0, mean_i = 0, m2_i = 0;
  };
  std::map<std::string, Running> by_task;
  for (const auto& s : read_corpus((dir / "corpus").string()).sessions) {
    double actions = 0, interactions = 0;
    for (const auto& e : s.events) {
      if (e.is_dialog()) continue;
      actions += 1;
      interactions += worldsim::is_interaction(e.action) ? 1 : 0;
    }
    Running& r = by_task[s.task.name];
    ++r.n;
    const double da = actions - r.mean_a, di = interactions - r.mean_i;
    r.mean_a += da / r.n;
    r.mean_i += di / r.n;
    r.m2_a += da * (actions - r.mean_a);
    r.m2_i += di * (interactions - r.mean_i);
  }
  const Json stats = read_json_file((dir / "edh" / "stats.json").string());
  REQUIRE(stats.size() == by_task.size());
  for (const auto& row : stats) {
    const Running& r = by_task.at(row["task"].get<std::string>());
    CHECK(row["sessions"].get<int>() == r.n);
    CHECK(std::abs(row["mean_actions"].get<double>() - r.mean_a) < 1e-9);
    CHECK(std::abs(row["std_actions"].get<double>() - std::sqrt(r.m2_a / (r.n - 1))) < 1e-9);
    CHECK(std::abs(row["mean_interactions"].get<double>() - r.mean_i) < 1e-9);
    CHECK(std::abs(row["std_interactions"].get<double>() - std::sqrt(r.m2_i / (r.n - 1))) < 1e-9);
  }
  fs::remove_all(dir);
}

TEST_CASE("an empty corpus is refused") {
  CHECK_THROWS_AS(build_edh(Corpus{}), EmptyCorpus);
}

TEST_CASE("ablation flags") {
  CHECK(Ablation::parse("").label() == "base");
  CHECK(Ablation::parse("base").label() == "base");
  CHECK(Ablation::parse("h,ca").label() == "+H+CA");
  CHECK(Ablation::parse("CA, s ,h").label() == "+H+S+CA");
  const Ablation a = Ablation::parse("s");
  CHECK((a.synthetic && !a.history && !a.cross_attention));
  CHECK_THROWS_AS(Ablation::parse("h,x"), ConfigError);
}

TEST_CASE("untrained agent evaluates deterministically and the trace agrees") {
  const Corpus corpus = generate_corpus(small_spec(8));
  const EDHData data = build_edh(corpus);
  std::vector<corpus::EDHInstance> instances;
  for (const auto& [_, insts] : data.splits) instances.insert(instances.end(), insts.begin(), insts.end());
  instances.resize(std::min<std::size_t>(instances.size(), 10));
  agent::ModelConfig cfg = agent::ModelConfig::toy();
  cfg.d_model = 16;
  cfg.heads = 2;
  const agent::AgentModel model(cfg, data.vocab);
  const AgentEval a = evaluate_agent(model, data.vocab.text, instances, "train", "untrained");
  const AgentEval b = evaluate_agent(model, data.vocab.text, instances, "train", "untrained");
  CHECK(metrics::to_json(a.report) == metrics::to_json(b.report));
  CHECK(a.report.instances == instances.size());
  CHECK(a.report.model == "untrained");
  REQUIRE(a.scores.size() == instances.size());

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string trace = rollout_trace(model, data.vocab.text, instances[i]);
    const metrics::InstanceScore& s = a.scores[i];
    std::ostringstream last;
    last << "success " << s.success << "  gc " << s.gc << "  tlw_success " << s.tlw_success << "  tlw_gc " << s.tlw_gc
         << "  predicted_length " << s.predicted_length << "  reference_length " << s.reference_length << "\n";
    CHECK(trace.size() >= last.str().size());
    CHECK(trace.substr(trace.size() - last.str().size()) == last.str());
  }
}

TEST_CASE("command-line exit codes") {
  const fs::path root = testing::scratch_dir("pipe_cli");
  CHECK(testing::run_cli(root, "generate --sessions 4 --seed 3") == 0);
  CHECK(testing::run_cli(root, "generate --out bad --tasks NotATask") == 2);
  CHECK(testing::run_cli(root, "generate --out none --sessions 0") == 0);
  CHECK(testing::run_cli(root, "build-edh --corpus none --out none_edh") == 2);
  CHECK(testing::run_cli(root, "frobnicate") == 2);
  CHECK(testing::run_cli(root, "train agent --ablation q") == 2);
  CHECK(testing::run_cli(root, "build-edh") == 0);
  CHECK(testing::run_cli(root, "train agent --ablation s") == 2);
  CHECK(testing::run_cli(root, "train agent --epochs 1 --out a.json") == 0);
  CHECK(testing::run_cli(root, "eval --checkpoint a.json --split valid_seen --out r.json") == 0);
  CHECK(fs::exists(root / "r.json.manifest.json"));
  CHECK(testing::run_cli(root, "report r.json") == 0);

  std::ofstream(root / "broken.json") << "{\"kind\": \"agent\"}";
  CHECK(testing::run_cli(root, "eval --checkpoint broken.json") == 3);
  std::ofstream(root / "config.json") << "{\"corpus\": {\"sessions\": 2, \"nav_skew\": 0.5}}";
  CHECK(testing::run_cli(root, "--config config.json generate --out cfg --sessions 3") == 0);
  const Json m = read_json_file((root / "cfg" / "manifest.json").string());
  CHECK(m["config"]["sessions"] == 3);
  CHECK(m["config"]["nav_skew"] == 0.5);
  CHECK(m["run"]["overrides"]["corpus.sessions"] == 3);
  CHECK(m["run"]["config_file"]["sha1"] == file_hash((root / "config.json").string()));
  fs::remove_all(root);
}
