#include "edh/cli/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "edh/agent/data.hpp"
#include "edh/corpus/generate.hpp"
#include "edh/util/error.hpp"
#include "edh/util/hash.hpp"
#include "edh/worldsim/catalog.hpp"

namespace edh::cli {

namespace fs = std::filesystem;

namespace {

bool contains(const std::vector<std::string>& names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::string> resolved_tasks(const CorpusSpec& spec) {
  return spec.tasks.empty() ? worldsim::builtin_task_names() : spec.tasks;
}

}  // namespace

void CorpusSpec::validate() const {
  if (sessions < 0) throw ConfigError("corpus: sessions must be non-negative");
  if (scenarios.empty()) throw ConfigError("corpus: at least one scenario is required");
  for (const auto& s : scenarios) {
    if (!contains(worldsim::builtin_scenario_names(), s)) throw ConfigError("corpus: unknown scenario '" + s + "'");
  }
  for (const auto& t : tasks) {
    if (!contains(worldsim::builtin_task_names(), t)) throw ConfigError("corpus: unknown task '" + t + "'");
  }
  if (nav_skew < 0.0 || nav_skew >= 1.0) throw ConfigError("corpus: nav_skew must be in [0, 1)");
  if (clarify_probability < 0.0 || clarify_probability > 1.0) {
    throw ConfigError("corpus: clarify_probability must be in [0, 1]");
  }
  if (split_rule != "parity" && split_rule != "train") throw ConfigError("corpus: split_rule is 'parity' or 'train'");
}

Json CorpusSpec::to_json() const {
  return Json{{"first_seed", first_seed},         {"sessions", sessions},
              {"scenarios", scenarios},           {"tasks", resolved_tasks(*this)},
              {"nav_skew", nav_skew},             {"clarify_probability", clarify_probability},
              {"split_rule", split_rule}};
}

CorpusSpec CorpusSpec::from_json(const Json& j) {
  CorpusSpec c;
  try {
    c.first_seed = j.value("first_seed", c.first_seed);
    c.sessions = j.value("sessions", c.sessions);
    c.scenarios = j.value("scenarios", c.scenarios);
    c.tasks = j.value("tasks", c.tasks);
    c.nav_skew = j.value("nav_skew", c.nav_skew);
    c.clarify_probability = j.value("clarify_probability", c.clarify_probability);
    c.split_rule = j.value("split_rule", c.split_rule);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("corpus config: ") + e.what());
  }
  c.validate();
  return c;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const std::vector<std::string> tasks = resolved_tasks(spec);
  Corpus out;
  for (int i = 0; i < spec.sessions; ++i) {
    const std::uint64_t seed = spec.first_seed + static_cast<std::uint64_t>(i);
    const auto& scenario = spec.scenarios[static_cast<std::size_t>(i) % spec.scenarios.size()];
    const auto& task = tasks[static_cast<std::size_t>(i) % tasks.size()];
    out.sessions.push_back(corpus::generate_session(seed, worldsim::builtin_scenario(scenario),
                                                    worldsim::builtin_task(task),
                                                    corpus::GenerationOptions{spec.nav_skew, spec.clarify_probability}));
    out.splits.push_back(spec.split_rule == "train" ? "train" : corpus::split_for_seed(seed));
  }
  return out;
}

Json file_hash(const std::string& path) { return git_blob_sha1(read_file(path)); }

Json tree_hashes(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir).generic_string());
  }
  std::sort(files.begin(), files.end());
  Json out = Json::object();
  for (const auto& f : files) out[f] = file_hash((fs::path(dir) / f).string());
  return out;
}

void write_corpus(const std::string& dir, const CorpusSpec& spec, const Corpus& corpus, const Json& run) {
  fs::create_directories(fs::path(dir) / "sessions");
  Json listing = Json::array();
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    const auto& s = corpus.sessions[i];
    const std::string rel = "sessions/" + s.session_id + ".json";
    const std::string path = (fs::path(dir) / rel).string();
    write_json_file(path, corpus::export_session(s));
    listing.push_back(Json{{"session_id", s.session_id},
                           {"seed", s.seed},
                           {"split", corpus.splits[i]},
                           {"file", rel},
                           {"sha1", file_hash(path)}});
  }
  write_json_file((fs::path(dir) / "manifest.json").string(),
                  Json{{"kind", "corpus"},
                       {"config", spec.to_json()},
                       {"run", run},
                       {"split_rule", spec.split_rule == "train" ? "all sessions train"
                                                                 : "even seed train, odd seed valid_seen"},
                       {"navigation_share", corpus.sessions.empty() ? 0.0 : corpus::navigation_share(corpus.sessions)},
                       {"sessions", listing}});
}

Corpus read_corpus(const std::string& dir) {
  const Json manifest = read_json_file((fs::path(dir) / "manifest.json").string());
  Corpus out;
  for (const auto& entry : require(manifest, "sessions", "manifest")) {
    const std::string rel = require(entry, "file", "manifest.sessions").get<std::string>();
    out.sessions.push_back(corpus::ingest_session(read_json_file((fs::path(dir) / rel).string())));
    out.splits.push_back(require(entry, "split", "manifest.sessions").get<std::string>());
  }
  return out;
}

EDHData build_edh(const Corpus& corpus) {
  if (corpus.sessions.empty()) throw EmptyCorpus("corpus has no sessions");
  std::vector<corpus::GameplaySession> train;
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    if (corpus.splits[i] == "train") train.push_back(corpus.sessions[i]);
  }
  EDHData data;
  data.vocab = corpus::build_vocab(train.empty() ? corpus.sessions : train);
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    auto& bucket = data.splits[corpus.splits[i]];
    for (auto& inst : corpus::build_edh_instances(corpus.sessions[i])) bucket.push_back(std::move(inst));
  }
  data.stats = corpus::task_stats(corpus.sessions);
  return data;
}

void write_edh(const std::string& dir, const EDHData& data, const std::string& corpus_dir, const Json& run) {
  fs::create_directories(dir);
  write_json_file((fs::path(dir) / "vocab.json").string(), data.vocab.to_json());
  write_json_file((fs::path(dir) / "stats.json").string(), corpus::to_json(data.stats));
  Json splits = Json::object();
  for (const auto& [split, instances] : data.splits) {
    fs::create_directories(fs::path(dir) / "instances" / split);
    Json listing = Json::array();
    for (const auto& inst : instances) {
      const std::string rel = "instances/" + split + "/" + inst.instance_id + ".json";
      const std::string path = (fs::path(dir) / rel).string();
      write_json_file(path, corpus::export_instance(inst));
      listing.push_back(Json{{"instance_id", inst.instance_id}, {"file", rel}, {"sha1", file_hash(path)}});
    }
    splits[split] = listing;
  }
  write_json_file((fs::path(dir) / "manifest.json").string(),
                  Json{{"kind", "edh"},
                       {"run", run},
                       {"corpus_manifest_sha1", file_hash((fs::path(corpus_dir) / "manifest.json").string())},
                       {"vocab_sha1", file_hash((fs::path(dir) / "vocab.json").string())},
                       {"stats_sha1", file_hash((fs::path(dir) / "stats.json").string())},
                       {"splits", splits}});
}

corpus::Vocabularies read_vocab(const std::string& edh_dir) {
  return corpus::Vocabularies::from_json(read_json_file((fs::path(edh_dir) / "vocab.json").string()));
}

std::vector<corpus::EDHInstance> read_instances(const std::string& edh_dir, const std::string& split) {
  const Json manifest = read_json_file((fs::path(edh_dir) / "manifest.json").string());
  const Json& splits = require(manifest, "splits", "manifest");
  std::vector<corpus::EDHInstance> out;
  if (!splits.contains(split)) return out;
  for (const auto& entry : splits.at(split)) {
    const std::string rel = require(entry, "file", "manifest.splits." + split).get<std::string>();
    out.push_back(corpus::ingest_instance(read_json_file((fs::path(edh_dir) / rel).string())));
  }
  return out;
}

Ablation Ablation::parse(const std::string& flags) {
  Ablation a;
  std::stringstream in(flags);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
    if (item.empty() || item == "base") continue;
    if (item == "h") {
      a.history = true;
    } else if (item == "s") {
      a.synthetic = true;
    } else if (item == "ca") {
      a.cross_attention = true;
    } else {
      throw ConfigError("unknown ablation flag '" + item + "' (expected h, s, ca)");
    }
  }
  return a;
}

std::string Ablation::label() const {
  std::string s;
  if (history) s += "+H";
  if (synthetic) s += "+S";
  if (cross_attention) s += "+CA";
  return s.empty() ? "base" : s;
}

agent::RolloutOptions default_rollout() { return agent::RolloutOptions{60, 10}; }

AgentEval evaluate_agent(const agent::AgentModel& model, const corpus::TokenVocab& text_vocab,
                         const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                         const std::string& model_name, const agent::RolloutOptions& options) {
  AgentEval out;
  for (const auto& inst : instances) {
    const agent::Trajectory traj = agent::rollout(model, text_vocab, inst, options);
    out.scores.push_back(metrics::score_instance(inst.instance_id, traj.actions, inst.reference_actions));
  }
  out.report = metrics::aggregate(out.scores);
  out.report.split = split;
  out.report.model = model_name;
  return out;
}

metrics::MetricsReport evaluate_maf(const maf::MAFModel& model, const corpus::TokenVocab& text_vocab,
                                    const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                                    const std::string& model_name) {
  std::vector<maf::F1Counts> counts;
  for (const auto& inst : instances) {
    const maf::MAFExample ex = maf::make_maf_example(inst, model, text_vocab);
    std::vector<std::string> predicted, reference;
    for (const auto& a : model.generate_actions(ex.input)) predicted.push_back(worldsim::to_string(a));
    for (const auto& a : inst.future_actions) reference.push_back(worldsim::to_string(a));
    counts.push_back(maf::f1_counts(predicted, reference));
  }
  metrics::MetricsReport r;
  r.split = split;
  r.model = model_name;
  r.instances = instances.size();
  r.f1 = maf::micro_f1(counts);
  return r;
}

metrics::MetricsReport evaluate_planner(const planner::PlannerModel& model,
                                        const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                                        const std::string& model_name) {
  std::vector<metrics::PlanScore> scores;
  for (const auto& pair : planner::plan_pairs(instances)) {
    const corpus::ParsedPlan predicted = planner::predict_plan(model, pair.source);
    scores.push_back(metrics::score_plan(pair.id, corpus::plan_to_text(predicted.plan), pair.target));
  }
  metrics::MetricsReport r = metrics::aggregate(scores);
  r.split = split;
  r.model = model_name;
  return r;
}

std::string rollout_trace(const agent::AgentModel& model, const corpus::TokenVocab& text_vocab,
                          const corpus::EDHInstance& instance, const agent::RolloutOptions& options) {
  const agent::Trajectory traj = agent::rollout(model, text_vocab, instance, options);
  std::ostringstream out;
  out << "instance " << instance.instance_id << " (" << instance.task_name << ")\n";
  out << "history " << instance.action_history.size() << " actions, reference " << instance.reference_actions.size()
      << " interactions\n";
  std::vector<worldsim::ActionRef> prefix;
  for (std::size_t i = 0; i < traj.actions.size(); ++i) {
    const auto& a = traj.actions[i];
    prefix.push_back(a);
    const std::size_t matched = metrics::matched_count(prefix, instance.reference_actions);
    out << "step " << i + 1 << "  " << a.action << "  " << a.object.value_or("-") << "  "
        << worldsim::to_string(traj.outcomes[i]) << "  gc " << matched << "/" << instance.reference_actions.size()
        << "\n";
  }
  const metrics::InstanceScore s = metrics::score_instance(instance.instance_id, traj.actions, instance.reference_actions);
  out << "stop " << agent::to_string(traj.stop_reason) << "\n";
  out << "success " << s.success << "  gc " << s.gc << "  tlw_success " << s.tlw_success << "  tlw_gc " << s.tlw_gc
      << "  predicted_length " << s.predicted_length << "  reference_length " << s.reference_length << "\n";
  return out.str();
}

}  // namespace edh::cli
