#include "edh/nn/checkpoint.hpp"

#include "edh/util/error.hpp"

namespace edh::nn {

Checkpoint Checkpoint::capture(std::string kind, Json config, std::map<std::string, std::string> vocab_hashes,
                               const ParamSet& params) {
  Checkpoint c;
  c.kind = std::move(kind);
  c.config = std::move(config);
  c.vocab_hashes = std::move(vocab_hashes);
  for (const auto& [name, t] : params.items()) c.params[name] = t.value();
  return c;
}

Json Checkpoint::to_json() const {
  Json doc;
  doc["schema_version"] = kCheckpointSchemaVersion;
  doc["kind"] = kind;
  doc["config"] = config;
  doc["vocab_hashes"] = vocab_hashes;
  doc["extra"] = extra;
  Json ps = Json::object();
  for (const auto& [name, m] : params) {
    Json entry;
    entry["shape"] = {m.rows(), m.cols()};
    entry["data"] = std::vector<double>(m.data(), m.data() + m.size());
    ps[name] = std::move(entry);
  }
  doc["params"] = std::move(ps);
  return doc;
}

Checkpoint Checkpoint::from_json(const Json& doc) {
  const int version = require(doc, "schema_version", "").get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw CheckpointError("unsupported checkpoint schema_version " + std::to_string(version));
  }
  Checkpoint c;
  c.kind = require(doc, "kind", "").get<std::string>();
  c.config = require(doc, "config", "");
  c.vocab_hashes = require(doc, "vocab_hashes", "").get<std::map<std::string, std::string>>();
  if (doc.contains("extra")) c.extra = doc.at("extra");
  for (const auto& [name, entry] : require(doc, "params", "").items()) {
    const auto shape = require(entry, "shape", "params." + name).get<std::vector<Eigen::Index>>();
    const auto data = require(entry, "data", "params." + name).get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Eigen::Index>(data.size())) {
      throw SchemaError("params." + name, "shape does not match data length");
    }
    c.params[name] = Eigen::Map<const Matrix>(data.data(), shape[0], shape[1]);
  }
  return c;
}

void Checkpoint::save(const std::string& path) const { write_json_file(path, to_json()); }

Checkpoint Checkpoint::load(const std::string& path) { return from_json(read_json_file(path)); }

void Checkpoint::require_vocab(const std::map<std::string, std::string>& expected) const {
  for (const auto& [name, hash] : expected) {
    auto it = vocab_hashes.find(name);
    if (it == vocab_hashes.end()) throw CheckpointError("checkpoint has no hash for vocabulary '" + name + "'");
    if (it->second != hash) {
      throw CheckpointError("vocabulary '" + name + "' hash mismatch: checkpoint " + it->second + ", expected " + hash);
    }
  }
}

std::size_t Checkpoint::restore(ParamSet& params, const std::string& prefix) const {
  std::size_t copied = 0;
  for (const auto& [name, m] : this->params) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    Tensor* t = params.find(name);
    if (t == nullptr) throw CheckpointError("checkpoint parameter '" + name + "' not present in model");
    if (t->rows() != m.rows() || t->cols() != m.cols()) {
      throw CheckpointError("checkpoint parameter '" + name + "' has a different shape");
    }
    t->mutable_value() = m;
    ++copied;
  }
  if (prefix.empty() && copied != params.items().size()) {
    throw CheckpointError("checkpoint is missing parameters for this model");
  }
  return copied;
}

}  // namespace edh::nn
