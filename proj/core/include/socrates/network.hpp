#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "socrates/autodiff.hpp"
#include "socrates/numeric.hpp"
#include "socrates/tensor.hpp"

namespace socrates::nn {

enum class LayerKind {
  Linear,
  MaxPool1d,
  MaxPool2d,
  MaxPool3d,
  Conv1d,
  Conv2d,
  Conv3d,
  ResNet2l,
  ResNet3l,
  RNN,
  LSTM,
  GRU,
  Function,
};

LayerKind layer_kind_from_name(std::string_view name);  // case-insensitive
std::string_view layer_kind_name(LayerKind kind);
bool is_recurrent(LayerKind kind);

/// One convolution: filters [F, C, K...], bias [F].
struct ConvStage {
  Tensor filters;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t dims() const { return filters.rank() >= 2 ? filters.rank() - 2 : 0; }
};

/// y = func(x . weights + bias), weights [in, out].
struct LinearParams {
  Tensor weights;
  Tensor bias;
  std::optional<numeric::Activation> func;
};

/// Non-overlapping windows: the window extent equals the stride.
struct MaxPoolParams {
  std::size_t dims = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

struct ConvParams {
  ConvStage stage;
};

/// Residual block: ReLU after every stage but the last; the last stage is
/// added to the shortcut (identity, or a 1x1-style conv when present) and the
/// sum goes through ReLU.
struct ResNetParams {
  std::vector<ConvStage> stages;
  std::optional<ConvStage> shortcut;
};

/// Recurrent layers read concat(x_t, h_{t-1}) and return the final hidden state.
///   RNN : weights [(in+H), H], func default tanh.
///   LSTM: weights [(in+H), 4H], gate order (input, forget, cell, output).
///   GRU : weights [(in+H), 2H] for (update, reset), weights2 [(in+H), H] for
///         the candidate computed from concat(x_t, r * h). c0 is accepted and
///         ignored.
struct RecurrentParams {
  Tensor weights;
  Tensor bias;
  Tensor weights2;
  Tensor bias2;
  Tensor h0;
  std::optional<Tensor> c0;
  numeric::Activation func = numeric::Activation::Tanh;

  std::size_t hidden() const { return h0.size(); }
};

enum class FunctionKind { ReLU, Sigmoid, Tanh, Softmax, Reshape, Transpose };

FunctionKind function_kind_from_name(std::string_view name);
std::string_view function_kind_name(FunctionKind kind);

struct FunctionParams {
  FunctionKind func = FunctionKind::ReLU;
  Shape new_shape;                 // Reshape
  std::vector<std::size_t> axes;   // Transpose
};

using LayerParams =
    std::variant<LinearParams, MaxPoolParams, ConvParams, ResNetParams, RecurrentParams, FunctionParams>;

struct Layer {
  LayerKind kind = LayerKind::Linear;
  LayerParams params;
};

struct Bound {
  double lower = 0.0;
  double upper = 0.0;
  friend bool operator==(const Bound&, const Bound&) = default;
};

/// Per-feature box in flat feature order.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
  bool contains(const Tensor& x) const;
};

struct Network {
  /// (sequence length, element dims...). A single entry is an element shape
  /// with sequence length 1.
  Shape input_shape;
  std::vector<Bound> bounds;
  std::vector<Layer> layers;

  std::size_t sequence_length() const;
  Shape element_shape() const;
  /// n: number of input features (product of the input shape).
  std::size_t feature_count() const;
  /// Expands the m bound pairs over the n features, pair i covering features
  /// [i*n/m, (i+1)*n/m).
  Box feature_box() const;
};

/// Evaluates a layer on the tape. `sequence` marks the input of a leading
/// recurrent layer as [seq_len, element_size]. Errors carry `layer_index`.
ad::Var layer_forward(const Layer& layer, const ad::Var& input, std::size_t layer_index = 0,
                      bool sequence = false);

/// Forward pass on a tape-aware value: x holds the n input features.
ad::Var network_forward(const Network& net, const ad::Var& x);

/// M(x), flattened to a vector.
Tensor network_forward(const Network& net, const Tensor& x);

/// J(x)^T seed for the network output at x, shaped like x.
Tensor network_gradient(const Network& net, const Tensor& x, const Tensor& seed);

enum class LabelMode { ArgMax, ArgMin };

/// Index of the max (min) entry, lowest index on ties.
std::size_t label_of(const Tensor& output, LabelMode mode = LabelMode::ArgMax);
std::size_t label(const Network& net, const Tensor& x, LabelMode mode = LabelMode::ArgMax);

}  // namespace socrates::nn
