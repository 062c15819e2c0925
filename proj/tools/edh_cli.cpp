// edh: corpus generation, EDH building, training, evaluation and reports.
//
// Relative paths resolve against --data-root, then $EDH_DATA_ROOT, then the
// working directory. Exit codes: 0 success, 2 usage or config error, 3 data
// validation error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "edh/agent/data.hpp"
#include "edh/cli/pipeline.hpp"
#include "edh/corpus/generate.hpp"
#include "edh/nn/checkpoint.hpp"
#include "edh/util/error.hpp"
#include "edh/util/hash.hpp"

namespace fs = std::filesystem;
using namespace edh;

namespace {

struct Common {
  std::string data_root;
  std::optional<std::uint64_t> seed;
  std::string config;
  bool quiet = false;

  std::string path(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    std::string root = data_root;
    if (root.empty()) {
      if (const char* env = std::getenv("EDH_DATA_ROOT")) root = env;
    }
    return root.empty() ? p : (fs::path(root) / p).string();
  }

  Json config_file() const { return config.empty() ? Json::object() : read_json_file(path(config)); }

  // Records the config file by content hash so the manifest survives moves.
  Json run_record(const Json& overrides) const {
    Json r{{"overrides", overrides}};
    if (!config.empty()) r["config_file"] = Json{{"path", config}, {"sha1", cli::file_hash(path(config))}};
    return r;
  }
};

void patch(Json& target, const Json& file, const char* section) {
  if (file.contains(section)) {
    if (!file.at(section).is_object()) throw ConfigError(std::string("config: '") + section + "' must be an object");
    target.merge_patch(file.at(section));
  }
}

void set_override(Json& section, Json& overrides, const std::string& scope, const std::string& key, const Json& value) {
  section[key] = value;
  overrides[scope + "." + key] = value;
}

std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

void ensure_parent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::function<void(int, double)> progress(const Common& c) {
  if (c.quiet) return {};
  return [](int epoch, double loss) { std::cerr << "epoch " << epoch + 1 << " loss " << loss << "\n"; };
}

// ---- generate ----

struct GenerateArgs {
  std::string out = "corpus";
  std::optional<int> sessions;
  std::vector<std::string> scenarios, tasks;
  std::optional<double> nav_skew;
  std::optional<std::string> split_rule;
};

int cmd_generate(const Common& c, const GenerateArgs& a) {
  Json spec = cli::CorpusSpec{}.to_json();
  spec["tasks"] = Json::array();
  const Json file = c.config_file();
  patch(spec, file, "corpus");
  Json overrides = Json::object();
  if (c.seed) set_override(spec, overrides, "corpus", "first_seed", *c.seed);
  if (a.sessions) set_override(spec, overrides, "corpus", "sessions", *a.sessions);
  if (!a.scenarios.empty()) set_override(spec, overrides, "corpus", "scenarios", a.scenarios);
  if (!a.tasks.empty()) set_override(spec, overrides, "corpus", "tasks", a.tasks);
  if (a.nav_skew) set_override(spec, overrides, "corpus", "nav_skew", *a.nav_skew);
  if (a.split_rule) set_override(spec, overrides, "corpus", "split_rule", *a.split_rule);
  const cli::CorpusSpec resolved = cli::CorpusSpec::from_json(spec);

  const cli::Corpus corpus = cli::generate_corpus(resolved);
  const std::string dir = c.path(a.out);
  cli::write_corpus(dir, resolved, corpus, c.run_record(overrides));
  std::cout << "wrote " << corpus.sessions.size() << " sessions to " << dir << "\n";
  if (!corpus.sessions.empty()) std::cout << "navigation share " << corpus::navigation_share(corpus.sessions) << "\n";
  return 0;
}

// ---- build-edh ----

struct BuildArgs {
  std::string corpus = "corpus";
  std::string out = "edh";
};

int cmd_build_edh(const Common& c, const BuildArgs& a) {
  const std::string corpus_dir = c.path(a.corpus);
  const cli::EDHData data = cli::build_edh(cli::read_corpus(corpus_dir));
  const std::string dir = c.path(a.out);
  cli::write_edh(dir, data, corpus_dir, c.run_record(Json::object()));
  for (const auto& [split, instances] : data.splits) std::cout << split << ": " << instances.size() << " instances\n";
  std::cout << corpus::format_task_stats(data.stats);
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string kind;
  std::string edh = "edh";
  std::string out;
  std::string split = "train";
  std::string ablation;
  std::string vision;
  std::string synthetic;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> pairs;
};

Json input_hashes(const Common& c, const TrainArgs& a) {
  const std::string edh = c.path(a.edh);
  Json h{{"edh_manifest", cli::file_hash((fs::path(edh) / "manifest.json").string())},
         {"vocab", cli::file_hash((fs::path(edh) / "vocab.json").string())}};
  if (!a.synthetic.empty()) h["synthetic_checkpoint"] = cli::file_hash(c.path(a.synthetic));
  return h;
}

void write_train_manifest(const Common& c, const TrainArgs& a, const std::string& out, Json resolved, Json overrides,
                          const std::vector<double>& losses) {
  Json m{{"kind", a.kind},
         {"split", a.split},
         {"config", std::move(resolved)},
         {"run", c.run_record(std::move(overrides))},
         {"inputs", input_hashes(c, a)},
         {"checkpoint_sha1", cli::file_hash(out)},
         {"epoch_losses", losses}};
  if (!a.ablation.empty()) m["ablation"] = cli::Ablation::parse(a.ablation).label();
  write_json_file(manifest_path(out), m);
}

std::vector<corpus::EDHInstance> training_instances(const Common& c, const TrainArgs& a) {
  auto instances = cli::read_instances(c.path(a.edh), a.split);
  if (instances.empty()) throw EmptyCorpus("no instances in split '" + a.split + "'");
  return instances;
}

int train_agent(const Common& c, const TrainArgs& a, const std::string& out) {
  const corpus::Vocabularies vocab = cli::read_vocab(c.path(a.edh));
  const cli::Ablation ablation = cli::Ablation::parse(a.ablation);
  Json model_j = agent::ModelConfig::toy().to_json();
  Json train_j = agent::TrainConfig::toy().to_json();
  const Json file = c.config_file();
  patch(model_j, file, "model");
  patch(train_j, file, "train");
  Json overrides = Json::object();
  if (c.seed) {
    set_override(model_j, overrides, "model", "seed", *c.seed);
    set_override(train_j, overrides, "train", "seed", *c.seed);
  }
  if (!a.ablation.empty()) {
    set_override(model_j, overrides, "model", "cross_attention", ablation.cross_attention);
    set_override(train_j, overrides, "train", "include_history", ablation.history);
  }
  if (!a.vision.empty()) set_override(model_j, overrides, "model", "vision", a.vision);
  if (a.epochs) set_override(train_j, overrides, "train", "epochs", *a.epochs);
  if (a.lr) set_override(train_j, overrides, "train", "lr", *a.lr);
  if (ablation.synthetic && a.synthetic.empty()) throw ConfigError("ablation 's' needs --synthetic <checkpoint>");

  const agent::ModelConfig model_cfg = agent::ModelConfig::from_json(model_j);
  const agent::TrainConfig train_cfg = agent::TrainConfig::from_json(train_j);
  agent::AgentModel model(model_cfg, vocab);
  if (ablation.synthetic) model.load_text_encoder(nn::Checkpoint::load(c.path(a.synthetic)));

  std::vector<agent::AgentExample> examples;
  for (const auto& inst : training_instances(c, a)) examples.push_back(agent::make_example(inst, model, vocab.text));
  const agent::TrainResult result = agent::train_agent(model, examples, train_cfg, progress(c));

  nn::Checkpoint ck = model.checkpoint();
  ck.extra = Json{{"ablation", ablation.label()}};
  ck.save(out);
  write_train_manifest(c, a, out, Json{{"model", model.config().to_json()}, {"train", train_cfg.to_json()}}, overrides,
                       result.epoch_losses);
  return 0;
}

int train_maf(const Common& c, const TrainArgs& a, const std::string& out) {
  const corpus::Vocabularies vocab = cli::read_vocab(c.path(a.edh));
  Json model_j = maf::MAFConfig::toy().to_json();
  Json train_j = maf::MAFTrainConfig::toy().to_json();
  const Json file = c.config_file();
  patch(model_j, file, "model");
  patch(train_j, file, "train");
  Json overrides = Json::object();
  if (c.seed) {
    set_override(model_j, overrides, "model", "seed", *c.seed);
    set_override(train_j, overrides, "train", "seed", *c.seed);
  }
  if (a.epochs) set_override(train_j, overrides, "train", "epochs", *a.epochs);
  if (a.lr) set_override(train_j, overrides, "train", "lr", *a.lr);

  const maf::MAFTrainConfig train_cfg = maf::MAFTrainConfig::from_json(train_j);
  maf::MAFModel model(maf::MAFConfig::from_json(model_j), vocab);
  std::vector<maf::MAFExample> examples;
  for (const auto& inst : training_instances(c, a)) examples.push_back(maf::make_maf_example(inst, model, vocab.text));
  const std::vector<double> losses = maf::train_maf(model, examples, train_cfg, progress(c));

  model.checkpoint().save(out);
  write_train_manifest(c, a, out, Json{{"model", model.config().to_json()}, {"train", train_cfg.to_json()}}, overrides,
                       losses);
  return 0;
}

int train_planner(const Common& c, const TrainArgs& a, const std::string& out) {
  const corpus::Vocabularies vocab = cli::read_vocab(c.path(a.edh));
  Json cfg_j = planner::PlannerConfig::toy().to_json();
  const Json file = c.config_file();
  patch(cfg_j, file, "model");
  patch(cfg_j, file, "train");
  Json overrides = Json::object();
  if (c.seed) set_override(cfg_j, overrides, "planner", "seed", *c.seed);
  if (a.epochs) set_override(cfg_j, overrides, "planner", "epochs", *a.epochs);
  if (a.lr) set_override(cfg_j, overrides, "planner", "lr", *a.lr);
  const planner::PlannerConfig cfg = planner::PlannerConfig::from_json(cfg_j);

  Json resolved{{"planner", cfg.to_json()}};
  const planner::PlannerTraining run = [&] {
    if (a.kind == "planner") return planner::train_planner(planner::plan_pairs(training_instances(c, a)), vocab.text, cfg, progress(c));
    const std::size_t count = a.pairs.value_or(200);
    resolved["synthetic_pairs"] = Json{{"seed", cfg.seed}, {"count", count}};
    return planner::train_synthetic_simplification(
        planner::simplification_pairs(corpus::synthetic_simplification_pairs(cfg.seed, count)), vocab.text, cfg,
        progress(c));
  }();
  run.model.checkpoint().save(out);
  write_train_manifest(c, a, out, resolved, overrides, run.epoch_losses);
  return 0;
}

int cmd_train(const Common& c, const TrainArgs& a) {
  const std::string out = c.path(a.out.empty() ? a.kind + ".ckpt.json" : a.out);
  ensure_parent(out);
  if (a.kind == "agent") return train_agent(c, a, out);
  if (a.kind == "maf") return train_maf(c, a, out);
  return train_planner(c, a, out);
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  std::string edh = "edh";
  std::string split = "valid_seen";
  std::string out;
  std::string name;
  int max_steps = cli::default_rollout().max_steps;
  std::size_t pairs = 200;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  const std::string ck_path = c.path(a.checkpoint);
  const nn::Checkpoint ck = nn::Checkpoint::load(ck_path);
  const corpus::Vocabularies vocab = cli::read_vocab(c.path(a.edh));
  const auto instances = cli::read_instances(c.path(a.edh), a.split);
  std::string name = a.name;
  metrics::MetricsReport report;
  std::vector<metrics::InstanceScore> scores;
  if (ck.kind == "agent") {
    if (name.empty()) name = "agent " + ck.extra.value("ablation", std::string("base"));
    agent::RolloutOptions opts = cli::default_rollout();
    opts.max_steps = a.max_steps;
    const cli::AgentEval e = cli::evaluate_agent(agent::AgentModel::from_checkpoint(ck, vocab), vocab.text, instances,
                                                 a.split, name, opts);
    report = e.report;
    scores = e.scores;
  } else if (ck.kind == "maf") {
    if (name.empty()) name = "maf";
    report = cli::evaluate_maf(maf::MAFModel::from_checkpoint(ck, vocab), vocab.text, instances, a.split, name);
  } else if (ck.kind == "planner") {
    if (name.empty()) name = "planner";
    report = cli::evaluate_planner(planner::PlannerModel::from_checkpoint(ck, vocab.text), instances, a.split, name);
  } else if (ck.kind == "synthetic") {
    if (name.empty()) name = "synthetic";
    const planner::PlannerModel model = planner::PlannerModel::from_checkpoint(ck, vocab.text);
    std::vector<metrics::PlanScore> plan_scores;
    for (const auto& p :
         planner::simplification_pairs(corpus::synthetic_simplification_pairs(model.config().seed, a.pairs))) {
      plan_scores.push_back(metrics::score_plan(p.id, model.generate(p.source), p.target));
    }
    report = metrics::aggregate(plan_scores);
    report.split = "synthetic";
    report.model = name;
  } else {
    throw CheckpointError("unknown checkpoint kind '" + ck.kind + "'");
  }

  std::cout << metrics::format_table({report});
  if (!a.out.empty()) {
    const std::string out = c.path(a.out);
    ensure_parent(out);
    write_json_file(out, metrics::to_json(report));
    Json per_instance = Json::array();
    for (const auto& s : scores) {
      per_instance.push_back(Json{{"instance_id", s.instance_id},
                                  {"success", s.success},
                                  {"gc", s.gc},
                                  {"tlw_success", s.tlw_success},
                                  {"tlw_gc", s.tlw_gc},
                                  {"predicted_length", s.predicted_length},
                                  {"reference_length", s.reference_length}});
    }
    const std::string edh = c.path(a.edh);
    write_json_file(manifest_path(out),
                    Json{{"kind", ck.kind},
                         {"split", a.split},
                         {"max_steps", a.max_steps},
                         {"inputs", Json{{"checkpoint", cli::file_hash(ck_path)},
                                         {"edh_manifest", cli::file_hash((fs::path(edh) / "manifest.json").string())}}},
                         {"report_sha1", cli::file_hash(out)},
                         {"instances", per_instance}});
  }
  return 0;
}

// ---- rollout-trace ----

struct TraceArgs {
  std::string checkpoint;
  std::string edh = "edh";
  std::string instance;
  int max_steps = cli::default_rollout().max_steps;
};

int cmd_trace(const Common& c, const TraceArgs& a) {
  const corpus::Vocabularies vocab = cli::read_vocab(c.path(a.edh));
  const agent::AgentModel model = agent::AgentModel::from_checkpoint(nn::Checkpoint::load(c.path(a.checkpoint)), vocab);
  const Json manifest = read_json_file((fs::path(c.path(a.edh)) / "manifest.json").string());
  agent::RolloutOptions opts = cli::default_rollout();
  opts.max_steps = a.max_steps;
  for (const auto& [split, _] : require(manifest, "splits", "manifest").items()) {
    for (const auto& inst : cli::read_instances(c.path(a.edh), split)) {
      if (inst.instance_id == a.instance) {
        std::cout << cli::rollout_trace(model, vocab.text, inst, opts);
        return 0;
      }
    }
  }
  throw ConfigError("no instance '" + a.instance + "'");
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out;
};

int cmd_report(const Common& c, const ReportArgs& a) {
  std::vector<metrics::MetricsReport> reports;
  for (const auto& r : a.reports) reports.push_back(metrics::report_from_json(read_json_file(c.path(r))));
  const std::string table = metrics::format_table(reports);
  std::cout << table;
  if (!a.out.empty()) {
    const std::string out = c.path(a.out);
    ensure_parent(out);
    std::ofstream(out) << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EDH pipeline: generate, build-edh, train, eval, rollout-trace, report"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--data-root", common.data_root, "Base for relative paths (default $EDH_DATA_ROOT)");
  app.add_option("--seed", common.seed, "Seed for generation or training");
  app.add_option("--config", common.config, "JSON config file; flags override its values");
  app.add_flag("--quiet", common.quiet, "No per-epoch progress");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate gameplay sessions");
  generate->add_option("--out", gen.out, "Corpus directory");
  generate->add_option("--sessions", gen.sessions, "Number of sessions");
  generate->add_option("--scenarios", gen.scenarios, "Scenario names")->delimiter(',');
  generate->add_option("--tasks", gen.tasks, "Task names (default all)")->delimiter(',');
  generate->add_option("--nav-skew", gen.nav_skew, "Navigation bias in [0, 1)");
  generate->add_option("--split-rule", gen.split_rule, "parity or train");

  BuildArgs build;
  auto* build_edh = app.add_subcommand("build-edh", "Cut sessions into EDH instances");
  build_edh->add_option("--corpus", build.corpus, "Corpus directory");
  build_edh->add_option("--out", build.out, "EDH directory");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("kind", train.kind, "agent, maf, planner or synthetic")
      ->required()
      ->check(CLI::IsMember({"agent", "maf", "planner", "synthetic"}));
  train_cmd->add_option("--edh", train.edh, "EDH directory");
  train_cmd->add_option("--out", train.out, "Checkpoint path");
  train_cmd->add_option("--split", train.split, "Training split");
  train_cmd->add_option("--ablation", train.ablation, "Agent switches: h, s, ca (comma separated)");
  train_cmd->add_option("--vision", train.vision, "Agent vision: frames, zero or none")
      ->check(CLI::IsMember({"frames", "zero", "none"}));
  train_cmd->add_option("--synthetic", train.synthetic, "Synthetic checkpoint for ablation s");
  train_cmd->add_option("--epochs", train.epochs, "Override epochs");
  train_cmd->add_option("--lr", train.lr, "Override learning rate");
  train_cmd->add_option("--pairs", train.pairs, "Synthetic pair count");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; kind comes from the checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--edh", eval.edh, "EDH directory");
  eval_cmd->add_option("--split", eval.split, "Split to evaluate");
  eval_cmd->add_option("--out", eval.out, "Report path");
  eval_cmd->add_option("--name", eval.name, "Model name in the report");
  eval_cmd->add_option("--max-steps", eval.max_steps, "Rollout step limit");
  eval_cmd->add_option("--pairs", eval.pairs, "Synthetic pair count");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("rollout-trace", "Step-by-step rollout of one instance");
  trace_cmd->add_option("--checkpoint", trace.checkpoint, "Agent checkpoint")->required();
  trace_cmd->add_option("--edh", trace.edh, "EDH directory");
  trace_cmd->add_option("--instance", trace.instance, "Instance id")->required();
  trace_cmd->add_option("--max-steps", trace.max_steps, "Rollout step limit");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Tabulate report files");
  report->add_option("reports", rep.reports, "Report JSON files")->required();
  report->add_option("--out", rep.out, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return cmd_generate(common, gen);
    if (*build_edh) return cmd_build_edh(common, build);
    if (*train_cmd) return cmd_train(common, train);
    if (*eval_cmd) return cmd_eval(common, eval);
    if (*trace_cmd) return cmd_trace(common, trace);
    if (*report) return cmd_report(common, rep);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ReplayMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
