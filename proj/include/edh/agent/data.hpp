#pragma once

#include <string>
#include <vector>

#include "edh/agent/model.hpp"
#include "edh/corpus/edh.hpp"

namespace edh::agent {

// One instance laid out as model steps. Step t pairs observation o_t with the
// action that produced it (START at t=0) and is supervised with the next
// action; the final step's target is Stop.
struct AgentExample {
  std::string instance_id;
  ModelInput input;
  Targets targets;
};

// Observation features as one model row.
nn::Matrix frame_row(const worldsim::Observation& obs);

// Dialog ids, keeping the most recent `max_tokens` tokens.
std::vector<int> dialog_ids(const corpus::EDHInstance& instance, const corpus::TokenVocab& vocab, int max_tokens);

// Steps beyond the model's window are dropped from the front.
AgentExample make_example(const corpus::EDHInstance& instance, const AgentModel& model,
                          const corpus::TokenVocab& text_vocab);

}  // namespace edh::agent
