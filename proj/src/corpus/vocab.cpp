#include "edh/corpus/vocab.hpp"

#include <algorithm>
#include <cctype>

#include "edh/corpus/plan.hpp"
#include "edh/corpus/session.hpp"
#include "edh/util/error.hpp"
#include "edh/util/hash.hpp"

namespace edh::corpus {

namespace {

const std::vector<std::string> kReserved = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::string joined_hash(const std::vector<std::string>& items) {
  std::string all;
  for (const auto& t : items) {
    all += t;
    all.push_back('\n');
  }
  return to_hex(fnv1a64(all));
}

// Frequency-descending, then lexicographic.
std::vector<std::string> ranked(const std::map<std::string, int>& counts) {
  std::vector<std::pair<std::string, int>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [t, n] : items) out.push_back(t);
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || ch == '_' || ch == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

TokenVocab::TokenVocab() : TokenVocab(kReserved) {}

TokenVocab::TokenVocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < kReserved.size() || !std::equal(kReserved.begin(), kReserved.end(), tokens_.begin())) {
    throw ConfigError("token vocabulary must start with the reserved tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) throw ConfigError("duplicate token '" + tokens_[i] + "'");
  }
}

int TokenVocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& TokenVocab::token(int id) const {
  if (id < 0 || id >= size()) throw IndexError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> TokenVocab::encode(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

std::vector<std::string> TokenVocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(token(id));
  }
  return out;
}

std::string TokenVocab::hash() const { return joined_hash(tokens_); }

Json TokenVocab::to_json() const { return Json{{"tokens", tokens_}}; }

TokenVocab TokenVocab::from_json(const Json& j, const std::string& path) {
  try {
    return TokenVocab(require(j, "tokens", path).get<std::vector<std::string>>());
  } catch (const ConfigError& e) {
    throw SchemaError(path + ".tokens", e.what());
  } catch (const Json::exception& e) {
    throw SchemaError(path + ".tokens", e.what());
  }
}

int SymbolVocab::index(const std::string& s) const {
  auto it = std::find(symbols.begin(), symbols.end(), s);
  return it == symbols.end() ? -1 : static_cast<int>(it - symbols.begin());
}

std::string SymbolVocab::hash() const { return joined_hash(symbols); }

Json Vocabularies::to_json() const {
  return Json{{"text", text.to_json()}, {"actions", actions.symbols}, {"objects", objects.symbols}};
}

Vocabularies Vocabularies::from_json(const Json& j) {
  Vocabularies v;
  v.text = TokenVocab::from_json(require(j, "text", ""), "text");
  v.actions.symbols = require(j, "actions", "").get<std::vector<std::string>>();
  v.objects.symbols = require(j, "objects", "").get<std::vector<std::string>>();
  return v;
}

Vocabularies build_vocab(const std::vector<GameplaySession>& sessions) {
  if (sessions.empty()) throw EmptyCorpus("cannot build a vocabulary from an empty corpus");
  std::map<std::string, int> words;
  std::map<std::string, int> actions;
  std::map<std::string, int> objects;
  for (const auto& def : worldsim::action_catalog()) {
    if (def.kind == worldsim::ActionKind::Interaction) words[worldsim::to_token(def.name)] += 0;
    if (def.kind != worldsim::ActionKind::Dialog) actions[def.name] += 0;
  }
  for (const auto& t : worldsim::object_types()) {
    words[worldsim::to_token(t)] += 0;
    objects[t] += 0;
  }
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      if (e.utterance) {
        // speaker tag, as emitted by dialog_tokens()
        ++words[e.actor == Actor::Commander ? "commander" : "follower"];
        ++words[":"];
        for (auto& w : tokenize(*e.utterance)) ++words[w];
      }
      if (e.action.action != "Text") ++actions[e.action.action];
      if (e.action.object) ++objects[*e.action.object];
    }
  }
  for (const auto& r : kReserved) words.erase(r);

  Vocabularies v;
  std::vector<std::string> tokens = kReserved;
  for (auto& w : ranked(words)) tokens.push_back(std::move(w));
  v.text = TokenVocab(std::move(tokens));
  v.actions.symbols = ranked(actions);
  v.objects.symbols = ranked(objects);
  return v;
}

}  // namespace edh::corpus
