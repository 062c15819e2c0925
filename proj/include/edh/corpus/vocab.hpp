#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "edh/util/json_io.hpp"

namespace edh::corpus {

struct GameplaySession;

// Lowercases and splits on whitespace; punctuation marks become tokens of
// their own.
std::vector<std::string> tokenize(std::string_view text);

class TokenVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  TokenVocab();
  // `tokens` must start with the four reserved tokens.
  explicit TokenVocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& words) const;
  // Drops PAD/BOS/EOS; stops at the first EOS.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  std::string hash() const;
  Json to_json() const;
  static TokenVocab from_json(const Json& j, const std::string& path);

  bool operator==(const TokenVocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// Symbol list with a stable index, used for the action and object heads.
struct SymbolVocab {
  std::vector<std::string> symbols;

  int size() const { return static_cast<int>(symbols.size()); }
  int index(const std::string& s) const;  // -1 when absent
  std::string hash() const;
  bool operator==(const SymbolVocab&) const = default;
};

struct Vocabularies {
  TokenVocab text;
  SymbolVocab actions;  // navigation + interaction actions + Stop
  SymbolVocab objects;  // object types

  Json to_json() const;
  static Vocabularies from_json(const Json& j);
  bool operator==(const Vocabularies&) const = default;
};

// Orders every vocabulary by corpus frequency (descending) then
// lexicographically. Plan tokens for every interaction action and object
// type are always present, and so is every action/object symbol, so that
// any plan or action can be encoded. Throws EmptyCorpus for no sessions.
Vocabularies build_vocab(const std::vector<GameplaySession>& sessions);

}  // namespace edh::corpus
