#pragma once

#include <map>
#include <string>
#include <vector>

#include "edh/agent/rollout.hpp"
#include "edh/agent/train.hpp"
#include "edh/corpus/edh.hpp"
#include "edh/corpus/session.hpp"
#include "edh/corpus/stats.hpp"
#include "edh/maf/maf.hpp"
#include "edh/metrics/metrics.hpp"
#include "edh/planner/planner.hpp"

// Library half of the command-line tool: every step the subcommands run,
// with on-disk layout and manifests, so tests can drive the same code.
namespace edh::cli {

struct CorpusSpec {
  std::uint64_t first_seed = 0;
  int sessions = 20;
  std::vector<std::string> scenarios = {"kitchen_small", "kitchen_wide"};
  std::vector<std::string> tasks;  // empty means every built-in task
  double nav_skew = 0.8;
  double clarify_probability = 0.3;
  // "parity": even seeds train, odd seeds valid_seen. "train": all train.
  std::string split_rule = "parity";

  void validate() const;
  Json to_json() const;
  static CorpusSpec from_json(const Json& j);
};

struct Corpus {
  std::vector<corpus::GameplaySession> sessions;
  std::vector<std::string> splits;  // parallel to sessions
};

// Session i uses seed first_seed + i, scenario i mod |scenarios| and task
// i mod |tasks|. Throws ConfigError for unknown names.
Corpus generate_corpus(const CorpusSpec& spec);

// <dir>/sessions/<session_id>.json plus <dir>/manifest.json. `run` is copied
// into the manifest (flag overrides, config file hash).
void write_corpus(const std::string& dir, const CorpusSpec& spec, const Corpus& corpus, const Json& run = Json::object());
Corpus read_corpus(const std::string& dir);

struct EDHData {
  corpus::Vocabularies vocab;
  std::map<std::string, std::vector<corpus::EDHInstance>> splits;
  std::vector<corpus::TaskStats> stats;
};

// Vocabulary over the train sessions (all sessions when none are train).
// Throws EmptyCorpus when there are no sessions.
EDHData build_edh(const Corpus& corpus);

// <dir>/vocab.json, <dir>/stats.json, <dir>/instances/<split>/<id>.json and
// <dir>/manifest.json.
void write_edh(const std::string& dir, const EDHData& data, const std::string& corpus_dir,
               const Json& run = Json::object());
corpus::Vocabularies read_vocab(const std::string& edh_dir);
// In manifest order. An unknown split gives an empty list.
std::vector<corpus::EDHInstance> read_instances(const std::string& edh_dir, const std::string& split);

// Table 1 style ablation switches: history loss, synthetic-pretrained text
// encoder, cross-modal attention.
struct Ablation {
  bool history = false;
  bool synthetic = false;
  bool cross_attention = false;

  static Ablation parse(const std::string& flags);  // "h,s,ca", "", "base"
  std::string label() const;                        // "base", "+H+CA", ...
};

struct AgentEval {
  metrics::MetricsReport report;
  std::vector<metrics::InstanceScore> scores;
};

agent::RolloutOptions default_rollout();

// Closed-loop rollouts in the simulator, scored against A^I_R.
AgentEval evaluate_agent(const agent::AgentModel& model, const corpus::TokenVocab& text_vocab,
                         const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                         const std::string& model_name, const agent::RolloutOptions& options = default_rollout());

// Micro F1 of generated against recorded future actions.
metrics::MetricsReport evaluate_maf(const maf::MAFModel& model, const corpus::TokenVocab& text_vocab,
                                    const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                                    const std::string& model_name);

// ROUGE of predicted against extracted plans.
metrics::MetricsReport evaluate_planner(const planner::PlannerModel& model,
                                        const std::vector<corpus::EDHInstance>& instances, const std::string& split,
                                        const std::string& model_name);

// Per-step action, object, outcome and goal conditions matched so far, then
// the instance score.
std::string rollout_trace(const agent::AgentModel& model, const corpus::TokenVocab& text_vocab,
                          const corpus::EDHInstance& instance, const agent::RolloutOptions& options = default_rollout());

// Relative path -> git blob id of every regular file under dir, sorted.
Json tree_hashes(const std::string& dir);
Json file_hash(const std::string& path);

}  // namespace edh::cli
