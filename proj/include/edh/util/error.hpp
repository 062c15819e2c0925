#pragma once

#include <stdexcept>
#include <string>

namespace edh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

class UnknownAction : public Error {
 public:
  using Error::Error;
};

class MissingObjectArgument : public Error {
 public:
  using Error::Error;
};

class UnachievableTask : public Error {
 public:
  using Error::Error;
};

class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Document failed validation; `field()` names the offending path, e.g.
/// "events[3].utterance".
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& detail)
      : Error("schema error at '" + field + "': " + detail), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace edh
