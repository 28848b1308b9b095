#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socrates {

/// Malformed input: task JSON, literals, formulas, shapes. Carries the JSON
/// path (or character offset) of the offending element when known.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& message, std::string location = {})
      : std::runtime_error(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

/// Failure while running a network or evaluating a term on concrete values.
class EvaluationError : public std::runtime_error {
 public:
  static constexpr std::size_t kNoLayer = static_cast<std::size_t>(-1);

  explicit EvaluationError(const std::string& message, std::size_t layer = kNoLayer)
      : std::runtime_error(layer == kNoLayer ? message
                                             : "layer " + std::to_string(layer) + ": " + message),
        layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// Engine configuration outside its valid domain.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The precondition sampler gave up (rejection budget spent or empty region).
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace socrates
