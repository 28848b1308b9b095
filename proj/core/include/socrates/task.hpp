#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "socrates/assertion.hpp"
#include "socrates/error.hpp"
#include "socrates/network.hpp"
#include "socrates/tensor.hpp"

namespace socrates::task {

// ---------------------------------------------------------------------------
// Python-style literals: "(1,784)", "[(0,1)]", "[[1.0, -2e-1],[3,4]]".

struct PyLiteral {
  enum class Kind { Number, Tuple, List };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::vector<PyLiteral> items;

  bool is_sequence() const { return kind != Kind::Number; }
  friend bool operator==(const PyLiteral&, const PyLiteral&) = default;
};

/// Throws FormatError("offset N: ...") on syntax errors. Trailing commas are
/// rejected.
PyLiteral parse_py_literal(std::string_view text);

/// Rectangular nesting to a tensor (a bare number gives a scalar).
Tensor literal_to_tensor(const PyLiteral& lit);

// ---------------------------------------------------------------------------
// Tasks.

struct SolverConfig {
  std::string algorithm;                  // "optimize" | "sprt"
  std::map<std::string, double> params;   // numeric engine parameters
};

struct DisplayConfig {
  std::optional<Shape> resolution;
  std::optional<std::string> path;
};

struct VerificationTask {
  nn::Network network;
  logic::Assertion assertion;
  std::optional<logic::Template> sugar;  // set when the assertion came from a template
  SolverConfig solver;
  DisplayConfig display;
  std::vector<std::string> warnings;     // unknown keys and similar
};

/// Parses a task document. Relative "file:" references resolve against
/// `base_dir`. Throws FormatError naming the JSON path of the offending
/// element, or IllFormedNetwork when the network fails check_wellformed.
VerificationTask parse_task(std::string_view json_text, const std::filesystem::path& base_dir = {});
VerificationTask load_task(const std::filesystem::path& file);

/// JSON text of the task with every tensor inlined as a native array.
std::string serialize_task(const VerificationTask& task);

// ---------------------------------------------------------------------------
// Well-formedness.

enum class Violation {
  InputShape,                // empty or zero-sized input shape
  SequenceLength,            // sequence length > 1 without a leading recurrent layer
  BoundsDivisibility,        // feature count not a multiple of the bound pairs
  BoundsOrder,               // lower > upper
  WeightsShape,              // weights not a matrix
  WeightsInputMismatch,      // weights dim 0 != previous width
  BiasLengthMismatch,        // bias length != output width
  FilterShape,               // filters rank does not fit the layer kind
  FilterChannelMismatch,     // filters dim 1 != input channels
  FilterBiasMismatch,        // bias length != number of filters
  InvalidStride,             // stride 0
  PoolPadding,               // 2 * padding > window
  NonPositiveOutput,         // window larger than the padded input
  ShortcutShapeMismatch,     // residual branch vs shortcut
  RecurrentWeightsMismatch,  // recurrent weights vs (input + hidden, gates * hidden)
  HiddenStateMismatch,       // h0 length != hidden width
  CellStateMismatch,         // c0 length != hidden width
  ReshapeSizeMismatch,
  TransposeAxes,
  InputRank,                 // layer cannot consume the incoming shape
};

std::string_view violation_name(Violation v);

struct WellformednessIssue {
  static constexpr std::size_t kNetwork = static_cast<std::size_t>(-1);

  std::size_t layer = kNetwork;  // kNetwork for input shape and bounds
  Violation kind = Violation::InputShape;
  std::string message;
};

/// Every violation found; empty when the network is well formed. Shape
/// inference continues past a bad layer using its declared output width so
/// one mistake is reported once.
std::vector<WellformednessIssue> check_wellformed(const nn::Network& net);

class IllFormedNetwork : public FormatError {
 public:
  explicit IllFormedNetwork(std::vector<WellformednessIssue> issues);
  const std::vector<WellformednessIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<WellformednessIssue> issues_;
};

}  // namespace socrates::task
