#pragma once

#include <stdexcept>
#include <string>

namespace riskd {

/// Invalid model, configuration or argument. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Chain is reducible or periodic.
class ErgodicityError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Requested enumeration exceeds a configured limit. Never truncated silently.
class EnumerationLimitError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Configuration file problem; `field` is a JSON-pointer-like path.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : InvalidInput(field.empty() ? what : field + ": " + what), field_(field), detail_(what) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

/// Numerical failure: singular system, divergence, iteration cap, violated
/// contraction precondition. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double last_residual = 0.0)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace riskd
