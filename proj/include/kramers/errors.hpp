#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kramers {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can map it to a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error("divergence", what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class InsufficientHorizonError : public Error {
 public:
  explicit InsufficientHorizonError(const std::string& what)
      : Error("insufficient_horizon", what) {}
};

class AmbiguousStabilityError : public Error {
 public:
  explicit AmbiguousStabilityError(const std::string& what)
      : Error("ambiguous_stability", what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class DegenerateExitError : public Error {
 public:
  explicit DegenerateExitError(const std::string& what)
      : Error("degenerate_exit", what) {}
};

class InfiniteMassError : public Error {
 public:
  explicit InfiniteMassError(const std::string& what)
      : Error("infinite_mass", what) {}
};

class LengthMismatchError : public Error {
 public:
  explicit LengthMismatchError(const std::string& what)
      : Error("length_mismatch", what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error("empty_input", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace kramers
