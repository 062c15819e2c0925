#pragma once

#include <map>
#include <string>

#include "edh/nn/layers.hpp"
#include "edh/util/json_io.hpp"

namespace edh::nn {

inline constexpr int kCheckpointSchemaVersion = 1;

// Self-describing model container: kind tag, resolved config, hashes of the
// vocabularies the weights were trained against, and every named parameter.
struct Checkpoint {
  std::string kind;
  Json config;
  std::map<std::string, std::string> vocab_hashes;
  std::map<std::string, Matrix> params;
  Json extra = Json::object();

  static Checkpoint capture(std::string kind, Json config, std::map<std::string, std::string> vocab_hashes,
                            const ParamSet& params);

  Json to_json() const;
  static Checkpoint from_json(const Json& doc);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  // Throws CheckpointError naming the first vocabulary whose hash differs.
  void require_vocab(const std::map<std::string, std::string>& expected) const;

  // Copies every stored array whose name starts with `prefix` into the
  // matching parameter; shapes must agree. Returns the number copied.
  std::size_t restore(ParamSet& params, const std::string& prefix = "") const;
};

}  // namespace edh::nn
