#pragma once

// Small generated corpora shared by the model suites and the acceptance runner.

#include <vector>

#include "edh/corpus/edh.hpp"
#include "edh/corpus/generate.hpp"
#include "edh/corpus/vocab.hpp"
#include "edh/worldsim/catalog.hpp"

namespace edh::testing {

struct ToyCorpus {
  std::vector<corpus::GameplaySession> sessions;
  corpus::Vocabularies vocab;
  std::vector<corpus::EDHInstance> instances;
};

// Seeds 0..n-1, alternating the two kitchens and cycling through the tasks.
inline ToyCorpus toy_corpus(std::size_t sessions, double nav_skew = 0.8) {
  ToyCorpus c;
  const auto& tasks = worldsim::builtin_task_names();
  for (std::size_t s = 0; s < sessions; ++s) {
    c.sessions.push_back(corpus::generate_session(
        s, worldsim::builtin_scenario(s % 2 ? "kitchen_wide" : "kitchen_small"),
        worldsim::builtin_task(tasks[s % tasks.size()]), corpus::GenerationOptions{nav_skew, 0.3}));
  }
  c.vocab = corpus::build_vocab(c.sessions);
  for (const auto& s : c.sessions) {
    for (auto& inst : corpus::build_edh_instances(s)) c.instances.push_back(std::move(inst));
  }
  return c;
}

}  // namespace edh::testing
