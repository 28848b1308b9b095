#include <algorithm>
#include <cmath>

#include "socrates/task.hpp"

namespace socrates::task {

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::InputShape: return "input shape";
    case Violation::SequenceLength: return "sequence length";
    case Violation::BoundsDivisibility: return "bounds divisibility";
    case Violation::BoundsOrder: return "bounds order";
    case Violation::WeightsShape: return "weights shape";
    case Violation::WeightsInputMismatch: return "weights input mismatch";
    case Violation::BiasLengthMismatch: return "bias length mismatch";
    case Violation::FilterShape: return "filter shape";
    case Violation::FilterChannelMismatch: return "filter channel mismatch";
    case Violation::FilterBiasMismatch: return "filter bias mismatch";
    case Violation::InvalidStride: return "invalid stride";
    case Violation::PoolPadding: return "pool padding";
    case Violation::NonPositiveOutput: return "non-positive output";
    case Violation::ShortcutShapeMismatch: return "shortcut shape mismatch";
    case Violation::RecurrentWeightsMismatch: return "recurrent weights mismatch";
    case Violation::HiddenStateMismatch: return "hidden state mismatch";
    case Violation::CellStateMismatch: return "cell state mismatch";
    case Violation::ReshapeSizeMismatch: return "reshape size mismatch";
    case Violation::TransposeAxes: return "transpose axes";
    case Violation::InputRank: return "input rank";
  }
  return "?";
}

namespace {

std::string n2s(std::size_t v) { return std::to_string(v); }

class Checker {
 public:
  explicit Checker(const nn::Network& net) : net_(net) {}

  std::vector<WellformednessIssue> run() {
    check_input();
    std::optional<Shape> cur = net_.element_shape();
    if (shape_size(net_.input_shape) == 0) cur.reset();
    for (std::size_t i = 0; i < net_.layers.size(); ++i) {
      layer_ = i;
      cur = check_layer(net_.layers[i], cur);
    }
    return std::move(issues_);
  }

 private:
  void report(Violation kind, std::string message) { issues_.push_back({layer_, kind, std::move(message)}); }

  void check_input() {
    layer_ = WellformednessIssue::kNetwork;
    const auto& shape = net_.input_shape;
    if (shape.empty() || std::find(shape.begin(), shape.end(), 0) != shape.end()) {
      report(Violation::InputShape, "input shape " + shape_to_string(shape) + " is empty");
      return;
    }
    if (net_.sequence_length() > 1 && (net_.layers.empty() || !nn::is_recurrent(net_.layers.front().kind))) {
      report(Violation::SequenceLength,
             "sequence length " + n2s(net_.sequence_length()) + " needs a leading recurrent layer");
    }
    const std::size_t n = net_.feature_count();
    const std::size_t m = net_.bounds.size();
    if (m == 0 || n % m != 0) {
      report(Violation::BoundsDivisibility, n2s(m) + " bound pairs do not divide " + n2s(n) + " features");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto& b = net_.bounds[i];
      if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower > b.upper) {
        report(Violation::BoundsOrder, "bound pair " + n2s(i) + " is not an ordered finite interval");
      }
    }
  }

  // Spatial part of a [C, S...] (or channel-less [S...]) input for a d-dim op.
  struct Spatial {
    std::size_t channels;
    Shape extent;
    bool has_channel;
  };

  std::optional<Spatial> spatial(const std::optional<Shape>& in, std::size_t dims, const char* what) {
    if (!in) return std::nullopt;
    if (in->size() == dims + 1) return Spatial{in->front(), Shape(in->begin() + 1, in->end()), true};
    if (in->size() == dims) return Spatial{1, *in, false};
    report(Violation::InputRank, std::string(what) + " cannot take input of shape " + shape_to_string(*in));
    return std::nullopt;
  }

  // Output shape of one convolution, or nullopt when it cannot be inferred.
  std::optional<Shape> conv_stage(const nn::ConvStage& s, std::size_t dims, const std::optional<Shape>& in,
                                  const std::string& label) {
    const auto& fs = s.filters.shape();
    if (fs.size() != dims + 2) {
      report(Violation::FilterShape, label + "filters " + shape_to_string(fs) + " should have rank " + n2s(dims + 2));
      return std::nullopt;
    }
    const std::size_t nf = fs[0];
    if (s.bias.size() != nf) {
      report(Violation::FilterBiasMismatch, label + "bias length " + n2s(s.bias.size()) + " != " + n2s(nf) + " filters");
    }
    if (s.stride == 0) {
      report(Violation::InvalidStride, label + "stride must be positive");
      return std::nullopt;
    }
    auto sp = spatial(in, dims, "convolution");
    if (!sp) return std::nullopt;
    if (sp->channels != fs[1]) {
      report(Violation::FilterChannelMismatch,
             label + "filters expect " + n2s(fs[1]) + " channels, input has " + n2s(sp->channels));
    }
    Shape out{nf};
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t padded = sp->extent[d] + 2 * s.padding;
      const std::size_t k = fs[d + 2];
      if (padded < k) {
        report(Violation::NonPositiveOutput,
               label + "kernel " + n2s(k) + " larger than padded input " + n2s(padded));
        return std::nullopt;
      }
      out.push_back((padded - k) / s.stride + 1);
    }
    return out;
  }

  std::optional<Shape> check_layer(const nn::Layer& layer, const std::optional<Shape>& in) {
    using nn::LayerKind;
    switch (layer.kind) {
      case LayerKind::Linear: return linear(std::get<nn::LinearParams>(layer.params), in);
      case LayerKind::MaxPool1d:
      case LayerKind::MaxPool2d:
      case LayerKind::MaxPool3d: return maxpool(std::get<nn::MaxPoolParams>(layer.params), in);
      case LayerKind::Conv1d:
      case LayerKind::Conv2d:
      case LayerKind::Conv3d: {
        const std::size_t dims = layer.kind == LayerKind::Conv1d ? 1 : layer.kind == LayerKind::Conv2d ? 2 : 3;
        return conv_stage(std::get<nn::ConvParams>(layer.params).stage, dims, in, "");
      }
      case LayerKind::ResNet2l:
      case LayerKind::ResNet3l: return resnet(std::get<nn::ResNetParams>(layer.params), in);
      case LayerKind::RNN:
      case LayerKind::LSTM:
      case LayerKind::GRU: return recurrent(layer.kind, std::get<nn::RecurrentParams>(layer.params), in);
      case LayerKind::Function: return function(std::get<nn::FunctionParams>(layer.params), in);
    }
    return std::nullopt;
  }

  std::optional<Shape> linear(const nn::LinearParams& p, const std::optional<Shape>& in) {
    if (p.weights.rank() != 2) {
      report(Violation::WeightsShape, "weights " + shape_to_string(p.weights.shape()) + " must be a matrix");
      return p.bias.empty() ? std::nullopt : std::optional<Shape>(Shape{p.bias.size()});
    }
    const std::size_t rows = p.weights.shape()[0];
    const std::size_t cols = p.weights.shape()[1];
    if (in && shape_size(*in) != rows) {
      report(Violation::WeightsInputMismatch,
             "weights have " + n2s(rows) + " rows, previous layer width is " + n2s(shape_size(*in)));
    }
    if (p.bias.size() != cols) {
      report(Violation::BiasLengthMismatch, "bias length " + n2s(p.bias.size()) + " != output width " + n2s(cols));
    }
    return Shape{cols};
  }

  std::optional<Shape> maxpool(const nn::MaxPoolParams& p, const std::optional<Shape>& in) {
    if (p.stride == 0) {
      report(Violation::InvalidStride, "stride must be positive");
      return std::nullopt;
    }
    if (2 * p.padding > p.stride) {
      report(Violation::PoolPadding, "padding " + n2s(p.padding) + " exceeds half the window " + n2s(p.stride));
    }
    auto sp = spatial(in, p.dims, "max pooling");
    if (!sp) return std::nullopt;
    Shape out;
    if (sp->has_channel) out.push_back(sp->channels);
    for (auto e : sp->extent) {
      const std::size_t padded = e + 2 * p.padding;
      if (padded < p.stride) {
        report(Violation::NonPositiveOutput, "window " + n2s(p.stride) + " larger than padded input " + n2s(padded));
        return std::nullopt;
      }
      out.push_back((padded - p.stride) / p.stride + 1);
    }
    return out;
  }

  std::optional<Shape> resnet(const nn::ResNetParams& p, const std::optional<Shape>& in) {
    std::optional<Shape> y = in;
    std::size_t dims = 0;
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
      dims = p.stages[i].dims();
      if (dims == 0) dims = in && !in->empty() ? in->size() - 1 : 1;
      y = conv_stage(p.stages[i], dims, y, "stage " + n2s(i + 1) + ": ");
    }
    std::optional<Shape> shortcut = in;
    if (p.shortcut) shortcut = conv_stage(*p.shortcut, dims, in, "shortcut: ");
    if (y && shortcut && shape_size(*y) != shape_size(*shortcut)) {
      report(Violation::ShortcutShapeMismatch,
             "residual branch " + shape_to_string(*y) + " does not match shortcut " + shape_to_string(*shortcut));
    }
    return y;
  }

  std::optional<Shape> recurrent(nn::LayerKind kind, const nn::RecurrentParams& p, const std::optional<Shape>& in) {
    // For a leading layer `in` is the element shape: one time step.
    std::optional<std::size_t> width;
    if (in) width = shape_size(*in);

    const Tensor& w = kind == nn::LayerKind::GRU ? p.weights2 : p.weights;
    const std::size_t gates = kind == nn::LayerKind::LSTM ? 4 : 1;
    if (w.rank() != 2) {
      report(Violation::WeightsShape, std::string(kind == nn::LayerKind::GRU ? "weights2 " : "weights ") +
                                          shape_to_string(w.shape()) + " must be a matrix");
      return p.h0.empty() ? std::nullopt : std::optional<Shape>(Shape{p.h0.size()});
    }
    if (w.shape()[1] % gates != 0) {
      report(Violation::RecurrentWeightsMismatch,
             "weights have " + n2s(w.shape()[1]) + " columns, expected a multiple of " + n2s(gates));
      return std::nullopt;
    }
    const std::size_t hidden = w.shape()[1] / gates;
    auto expect_rows = [&](const Tensor& m, const char* name) {
      if (width && m.shape()[0] != *width + hidden) {
        report(Violation::RecurrentWeightsMismatch, std::string(name) + " have " + n2s(m.shape()[0]) +
                                                        " rows, expected input + hidden = " +
                                                        n2s(*width + hidden));
      }
    };
    expect_rows(w, kind == nn::LayerKind::GRU ? "weights2" : "weights");
    if (kind == nn::LayerKind::GRU) {
      if (p.weights.rank() != 2) {
        report(Violation::WeightsShape, "weights1 " + shape_to_string(p.weights.shape()) + " must be a matrix");
      } else {
        expect_rows(p.weights, "weights1");
        if (p.weights.shape()[1] != 2 * hidden) {
          report(Violation::RecurrentWeightsMismatch,
                 "weights1 have " + n2s(p.weights.shape()[1]) + " columns, expected " + n2s(2 * hidden));
        }
      }
      if (p.bias.size() != 2 * hidden) {
        report(Violation::BiasLengthMismatch, "bias1 length " + n2s(p.bias.size()) + " != " + n2s(2 * hidden));
      }
      if (p.bias2.size() != hidden) {
        report(Violation::BiasLengthMismatch, "bias2 length " + n2s(p.bias2.size()) + " != " + n2s(hidden));
      }
    } else if (p.bias.size() != gates * hidden) {
      report(Violation::BiasLengthMismatch, "bias length " + n2s(p.bias.size()) + " != " + n2s(gates * hidden));
    }
    if (p.h0.size() != hidden) {
      report(Violation::HiddenStateMismatch, "h0 length " + n2s(p.h0.size()) + " != hidden width " + n2s(hidden));
    }
    if (p.c0 && p.c0->size() != hidden) {
      report(Violation::CellStateMismatch, "c0 length " + n2s(p.c0->size()) + " != hidden width " + n2s(hidden));
    }
    return Shape{hidden};
  }

  std::optional<Shape> function(const nn::FunctionParams& p, const std::optional<Shape>& in) {
    switch (p.func) {
      case nn::FunctionKind::Reshape:
        if (p.new_shape.empty() || shape_size(p.new_shape) == 0) {
          report(Violation::ReshapeSizeMismatch, "new shape " + shape_to_string(p.new_shape) + " is empty");
          return std::nullopt;
        }
        if (in && shape_size(*in) != shape_size(p.new_shape)) {
          report(Violation::ReshapeSizeMismatch, "cannot reshape " + shape_to_string(*in) + " to " +
                                                     shape_to_string(p.new_shape));
        }
        return p.new_shape;
      case nn::FunctionKind::Transpose: {
        std::vector<std::size_t> sorted = p.axes;
        std::sort(sorted.begin(), sorted.end());
        bool perm = true;
        for (std::size_t i = 0; i < sorted.size(); ++i) perm = perm && sorted[i] == i;
        if (!perm || (in && p.axes.size() != in->size())) {
          report(Violation::TransposeAxes,
                 "axes " + shape_to_string(p.axes) + " are not a permutation of " +
                     (in ? n2s(in->size()) : std::string("the input")) + " axes");
          return std::nullopt;
        }
        if (!in) return std::nullopt;
        Shape out;
        for (auto a : p.axes) out.push_back((*in)[a]);
        return out;
      }
      default: return in;
    }
  }

  const nn::Network& net_;
  std::size_t layer_ = WellformednessIssue::kNetwork;
  std::vector<WellformednessIssue> issues_;
};

}  // namespace

std::vector<WellformednessIssue> check_wellformed(const nn::Network& net) { return Checker(net).run(); }

}  // namespace socrates::task
