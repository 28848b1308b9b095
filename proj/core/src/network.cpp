#include "socrates/network.hpp"

#include <cctype>
#include <string>

#include "socrates/error.hpp"

namespace socrates::nn {
namespace {

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || std::isspace(static_cast<unsigned char>(c))) continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ad::Var constant(const Tensor& t) { return ad::Tape::constant(t); }

ad::Var apply_stage(const ConvStage& s, const ad::Var& x) {
  return ad::conv(x, constant(s.filters), constant(s.bias), s.stride, s.padding);
}

ad::Var linear_forward(const LinearParams& p, const ad::Var& x) {
  auto y = ad::add(ad::vecmat(ad::flatten(x), constant(p.weights)), constant(p.bias.flattened()));
  return p.func ? ad::activation(*p.func, y) : y;
}

ad::Var resnet_forward(const ResNetParams& p, const ad::Var& x) {
  ad::Var y = x;
  for (std::size_t i = 0; i + 1 < p.stages.size(); ++i) y = ad::relu(apply_stage(p.stages[i], y));
  y = apply_stage(p.stages.back(), y);
  ad::Var shortcut = p.shortcut ? apply_stage(*p.shortcut, x) : x;
  if (shortcut.size() != y.size()) {
    throw EvaluationError("residual branch " + shape_to_string(y.shape()) +
                          " does not match shortcut " + shape_to_string(shortcut.shape()));
  }
  return ad::relu(ad::add(y, ad::reshape(shortcut, y.shape())));
}

ad::Var recurrent_forward(LayerKind kind, const RecurrentParams& p, const ad::Var& input,
                          bool sequence) {
  using numeric::Activation;
  const std::size_t hidden = p.hidden();
  const std::size_t steps = sequence ? input.shape().front() : 1;
  const std::size_t width = input.size() / steps;

  const auto w = constant(p.weights);
  const auto b = constant(p.bias.flattened());
  ad::Var h = constant(p.h0.flattened());
  ad::Var c = constant(p.c0 && kind == LayerKind::LSTM ? p.c0->flattened()
                                                       : Tensor::filled({hidden}, 0.0));
  const ad::Var flat = ad::flatten(input);

  for (std::size_t t = 0; t < steps; ++t) {
    const auto xt = ad::slice(flat, t * width, width);
    switch (kind) {
      case LayerKind::RNN:
        h = ad::activation(p.func, ad::add(ad::vecmat(ad::concat(xt, h), w), b));
        break;
      case LayerKind::LSTM: {
        const auto gates = ad::add(ad::vecmat(ad::concat(xt, h), w), b);
        const auto in_gate = ad::activation(Activation::Sigmoid, ad::slice(gates, 0, hidden));
        const auto forget = ad::activation(Activation::Sigmoid, ad::slice(gates, hidden, hidden));
        const auto cell = ad::activation(Activation::Tanh, ad::slice(gates, 2 * hidden, hidden));
        const auto out_gate = ad::activation(Activation::Sigmoid, ad::slice(gates, 3 * hidden, hidden));
        c = ad::add(ad::mul(forget, c), ad::mul(in_gate, cell));
        h = ad::mul(out_gate, ad::activation(Activation::Tanh, c));
        break;
      }
      case LayerKind::GRU: {
        const auto zr = ad::activation(
            Activation::Sigmoid, ad::add(ad::vecmat(ad::concat(xt, h), w), b));
        const auto update = ad::slice(zr, 0, hidden);
        const auto reset = ad::slice(zr, hidden, hidden);
        const auto candidate = ad::activation(
            Activation::Tanh,
            ad::add(ad::vecmat(ad::concat(xt, ad::mul(reset, h)), constant(p.weights2)),
                    constant(p.bias2.flattened())));
        h = ad::add(candidate, ad::mul(update, ad::sub(h, candidate)));
        break;
      }
      default:
        throw std::logic_error("not a recurrent layer");
    }
  }
  return h;
}

ad::Var function_forward(const FunctionParams& p, const ad::Var& x) {
  switch (p.func) {
    case FunctionKind::ReLU: return ad::activation(numeric::Activation::ReLU, x);
    case FunctionKind::Sigmoid: return ad::activation(numeric::Activation::Sigmoid, x);
    case FunctionKind::Tanh: return ad::activation(numeric::Activation::Tanh, x);
    case FunctionKind::Softmax: return ad::activation(numeric::Activation::Softmax, x);
    case FunctionKind::Reshape: return ad::reshape(x, p.new_shape);
    case FunctionKind::Transpose: return ad::transpose(x, p.axes);
  }
  throw std::logic_error("unhandled function kind");
}

std::size_t pool_dims(LayerKind kind) {
  switch (kind) {
    case LayerKind::MaxPool1d:
    case LayerKind::Conv1d: return 1;
    case LayerKind::MaxPool2d:
    case LayerKind::Conv2d: return 2;
    default: return 3;
  }
}

}  // namespace

LayerKind layer_kind_from_name(std::string_view name) {
  static const std::pair<const char*, LayerKind> table[] = {
      {"linear", LayerKind::Linear},       {"maxpool1d", LayerKind::MaxPool1d},
      {"maxpool2d", LayerKind::MaxPool2d}, {"maxpool3d", LayerKind::MaxPool3d},
      {"conv1d", LayerKind::Conv1d},       {"conv2d", LayerKind::Conv2d},
      {"conv3d", LayerKind::Conv3d},       {"resnet2l", LayerKind::ResNet2l},
      {"resnet3l", LayerKind::ResNet3l},   {"rnn", LayerKind::RNN},
      {"lstm", LayerKind::LSTM},           {"gru", LayerKind::GRU},
      {"function", LayerKind::Function},
  };
  const auto key = lower(name);
  for (const auto& [n, k] : table) {
    if (key == n) return k;
  }
  throw FormatError("unknown layer type '" + std::string(name) + "'");
}

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return "linear";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::MaxPool3d: return "maxpool3d";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Conv3d: return "conv3d";
    case LayerKind::ResNet2l: return "resnet2l";
    case LayerKind::ResNet3l: return "resnet3l";
    case LayerKind::RNN: return "rnn";
    case LayerKind::LSTM: return "lstm";
    case LayerKind::GRU: return "gru";
    case LayerKind::Function: return "function";
  }
  return "?";
}

bool is_recurrent(LayerKind kind) {
  return kind == LayerKind::RNN || kind == LayerKind::LSTM || kind == LayerKind::GRU;
}

FunctionKind function_kind_from_name(std::string_view name) {
  const auto key = lower(name);
  if (key == "relu") return FunctionKind::ReLU;
  if (key == "sigmoid") return FunctionKind::Sigmoid;
  if (key == "tanh") return FunctionKind::Tanh;
  if (key == "softmax") return FunctionKind::Softmax;
  if (key == "reshape") return FunctionKind::Reshape;
  if (key == "transpose") return FunctionKind::Transpose;
  throw FormatError("unknown function '" + std::string(name) + "'");
}

std::string_view function_kind_name(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::ReLU: return "relu";
    case FunctionKind::Sigmoid: return "sigmoid";
    case FunctionKind::Tanh: return "tanh";
    case FunctionKind::Softmax: return "softmax";
    case FunctionKind::Reshape: return "reshape";
    case FunctionKind::Transpose: return "transpose";
  }
  return "?";
}

bool Box::contains(const Tensor& x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

std::size_t Network::sequence_length() const {
  return input_shape.size() >= 2 ? input_shape.front() : 1;
}

Shape Network::element_shape() const {
  if (input_shape.size() >= 2) return Shape(input_shape.begin() + 1, input_shape.end());
  return input_shape;
}

std::size_t Network::feature_count() const { return shape_size(input_shape); }

Box Network::feature_box() const {
  const std::size_t n = feature_count();
  const std::size_t m = bounds.size();
  if (m == 0 || n % m != 0) {
    throw FormatError(std::to_string(m) + " bound pairs cannot cover " + std::to_string(n) +
                      " features");
  }
  Box box{std::vector<double>(n), std::vector<double>(n)};
  const std::size_t span = n / m;
  for (std::size_t i = 0; i < n; ++i) {
    box.lower[i] = bounds[i / span].lower;
    box.upper[i] = bounds[i / span].upper;
  }
  return box;
}

ad::Var layer_forward(const Layer& layer, const ad::Var& input, std::size_t layer_index,
                      bool sequence) {
  try {
    return std::visit(
        overloaded{
            [&](const LinearParams& p) { return linear_forward(p, input); },
            [&](const MaxPoolParams& p) { return ad::maxpool(input, p.dims, p.stride, p.padding); },
            [&](const ConvParams& p) {
              if (p.stage.dims() != pool_dims(layer.kind)) {
                throw EvaluationError("filters of rank " + std::to_string(p.stage.filters.rank()) +
                                      " do not fit " + std::string(layer_kind_name(layer.kind)));
              }
              return apply_stage(p.stage, input);
            },
            [&](const ResNetParams& p) { return resnet_forward(p, input); },
            [&](const RecurrentParams& p) {
              return recurrent_forward(layer.kind, p, input, sequence);
            },
            [&](const FunctionParams& p) { return function_forward(p, input); },
        },
        layer.params);
  } catch (const EvaluationError& e) {
    if (e.layer() != EvaluationError::kNoLayer) throw;
    throw EvaluationError(e.what(), layer_index);
  } catch (const FormatError& e) {
    throw EvaluationError(e.what(), layer_index);
  }
}

ad::Var network_forward(const Network& net, const ad::Var& x) {
  if (x.size() != net.feature_count()) {
    throw EvaluationError("input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(net.feature_count()));
  }
  if (net.layers.empty()) return ad::flatten(x);

  const bool leading_recurrent = is_recurrent(net.layers.front().kind);
  ad::Var h = leading_recurrent
                  ? ad::reshape(x, Shape{net.sequence_length(), shape_size(net.element_shape())})
                  : ad::reshape(x, net.element_shape());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    h = layer_forward(net.layers[i], h, i, i == 0 && leading_recurrent);
  }
  return ad::flatten(h);
}

Tensor network_forward(const Network& net, const Tensor& x) {
  return network_forward(net, ad::Tape::constant(x)).value();
}

Tensor network_gradient(const Network& net, const Tensor& x, const Tensor& seed) {
  ad::Tape tape;
  auto input = tape.variable(x);
  auto output = network_forward(net, input);
  if (seed.size() != output.size()) {
    throw EvaluationError("seed has " + std::to_string(seed.size()) + " entries, output has " +
                          std::to_string(output.size()));
  }
  tape.backward(output, seed);
  return tape.grad(input);
}

std::size_t label_of(const Tensor& output, LabelMode mode) {
  if (output.empty()) throw EvaluationError("label of an empty output");
  std::size_t best = 0;
  for (std::size_t i = 1; i < output.size(); ++i) {
    const bool better = mode == LabelMode::ArgMax ? output[i] > output[best] : output[i] < output[best];
    if (better) best = i;
  }
  return best;
}

std::size_t label(const Network& net, const Tensor& x, LabelMode mode) {
  return label_of(network_forward(net, x), mode);
}

}  // namespace socrates::nn
