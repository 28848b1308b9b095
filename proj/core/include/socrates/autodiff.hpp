#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "socrates/numeric.hpp"
#include "socrates/tensor.hpp"

// Reverse-mode differentiation over tensor-valued operations.
//
// A Var is either a constant (no tape) or a value recorded on a Tape. Every
// operation below computes its result eagerly; when at least one operand lives
// on a tape the result is appended to that tape together with a closure that
// propagates the output gradient back to the operands. Tape::backward walks
// the records in reverse creation order.
namespace socrates::ad {

class Tape;

struct Node {
  Tensor value;
  Tensor grad;
  bool tracked = false;
  std::function<void(const Node&)> backward;
};

class Var {
 public:
  Var() = default;

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  Tape* tape() const noexcept { return tape_; }
  bool tracked() const noexcept { return tape_ != nullptr; }

  // Used by operation implementations to wire up backward closures.
  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  friend class Tape;
  template <class Backward>
  friend Var record(Tensor value, std::initializer_list<const Var*> inputs, Backward&& backward);

  Var(std::shared_ptr<Node> node, Tape* tape) : node_(std::move(node)), tape_(tape) {}

  std::shared_ptr<Node> node_;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is wanted.
  Var variable(Tensor value);
  static Var constant(Tensor value);
  static Var constant(double value) { return constant(Tensor::scalar(value)); }

  /// Vector-Jacobian product: seeds `output` with `seed` (same shape) and
  /// accumulates gradients into every recorded node. Previous gradients are
  /// discarded.
  void backward(const Var& output, const Tensor& seed);
  void backward(const Var& scalar_output) { backward(scalar_output, Tensor::filled(scalar_output.shape(), 1.0)); }

  /// Gradient of the last backward pass with respect to `v` (zeros if `v`
  /// did not influence the output).
  Tensor grad(const Var& v) const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  template <class Backward>
  friend Var record(Tensor value, std::initializer_list<const Var*> inputs, Backward&& backward);

  std::vector<std::shared_ptr<Node>> nodes_;
};

// Element-wise arithmetic. Operands must have equal shapes, except that a
// one-element operand broadcasts against the other.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
Var abs(const Var& a);

Var activation(numeric::Activation kind, const Var& a);
inline Var relu(const Var& a) { return activation(numeric::Activation::ReLU, a); }

/// Row vector (flattened `x`, length in) times matrix `w` of shape [in, out].
Var vecmat(const Var& x, const Var& w);

Var reshape(const Var& a, Shape shape);
Var flatten(const Var& a);
Var transpose(const Var& a, const std::vector<std::size_t>& axes);
/// Concatenation of the flattened operands.
Var concat(const Var& a, const Var& b);
/// `length` consecutive entries of the flattened operand starting at `offset`.
Var slice(const Var& a, std::size_t offset, std::size_t length);

/// Entries at `indices` of the flattened operand, in that order.
Var gather(const Var& a, const std::vector<std::size_t>& indices);

/// N-d cross-correlation. x: [C, S1..Sd], filters: [F, C, K1..Kd], bias: [F].
/// Symmetric zero padding, uniform stride. Output [F, O1..Od].
Var conv(const Var& x, const Var& filters, const Var& bias, std::size_t stride,
         std::size_t padding);

/// N-d max pooling over x: [C, S1..Sd] with window == stride. Padded cells never
/// win. Gradient goes to the first maximal entry of each window.
Var maxpool(const Var& x, std::size_t dims, std::size_t stride, std::size_t padding);

Var index(const Var& a, std::size_t i);
Var sum(const Var& a);
/// Largest (smallest) entry; ties resolved to the lowest index.
Var max_all(const Var& a);
Var min_all(const Var& a);
/// Largest (smallest) entry excluding position `skip`. Needs size >= 2.
Var max_except(const Var& a, std::size_t skip);
Var min_except(const Var& a, std::size_t skip);

/// Distance with subgradients: d2 -> (a-b)/d2 (zero at a == b), di -> sign at
/// the first maximizing coordinate, d0 -> zero.
Var distance(numeric::Distance kind, const Var& a, const Var& b);

}  // namespace socrates::ad
