#pragma once

#include <stdexcept>
#include <string>

namespace filmctl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Film height left the admissible range. `node` is the first offending grid
/// index, or -1 when the violation is not tied to one node.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, int node) : Error(what), node_(node) {}
  int node() const noexcept { return node_; }

 private:
  int node_;
};

/// A matrix that was required to be Hurwitz is not.
class StabilityError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  enum class Kind {
    NotStabilisable,
    FailToStart,
    FailToConverge,
    SingularObservation,
    Uncontrollable,
    Unobservable,
    Precondition,
  };

  SynthesisError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(SynthesisError::Kind kind) noexcept;

/// Adaptive step size fell below the floor.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace filmctl
