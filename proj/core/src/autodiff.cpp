#include "socrates/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "socrates/error.hpp"

namespace socrates::ad {

template <class Backward>
Var record(Tensor value, std::initializer_list<const Var*> inputs, Backward&& backward) {
  Tape* tape = nullptr;
  for (const Var* in : inputs) {
    if (!in->tape_) continue;
    if (tape && tape != in->tape_) throw std::logic_error("operands recorded on different tapes");
    tape = in->tape_;
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!tape) return Var(std::move(node), nullptr);
  node->tracked = true;
  node->backward = std::forward<Backward>(backward);
  tape->nodes_.push_back(node);
  return Var(std::move(node), tape);
}

namespace {

using NodePtr = std::shared_ptr<Node>;

// Adds `g` into the gradient of `n` when `n` is on a tape.
inline void push(Node& n, std::size_t i, double g) {
  if (n.tracked) n.grad[i] += g;
}

enum class Broadcast { None, Left, Right };

Broadcast broadcast_mode(const Var& a, const Var& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (a.size() == b.size() && a.size() == 1) return Broadcast::None;
  if (a.size() == 1) return Broadcast::Left;
  if (b.size() == 1) return Broadcast::Right;
  throw EvaluationError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                        " vs " + shape_to_string(b.shape()));
}

// Result shape and per-element operand indices for a binary element-wise op.
struct Binary {
  Shape shape;
  std::size_t size;
  Broadcast mode;
  std::size_t ia(std::size_t i) const { return mode == Broadcast::Left ? 0 : i; }
  std::size_t ib(std::size_t i) const { return mode == Broadcast::Right ? 0 : i; }
};

Binary binary(const Var& a, const Var& b, const char* op) {
  auto mode = broadcast_mode(a, b, op);
  const Var& big = mode == Broadcast::Left ? b : a;
  return {big.shape(), big.size(), mode};
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Advances a multi-index in row-major order; false once it wraps around.
bool advance(std::vector<std::size_t>& idx, const Shape& extent) {
  for (std::size_t i = extent.size(); i-- > 0;) {
    if (++idx[i] < extent[i]) return true;
    idx[i] = 0;
  }
  return false;
}

std::size_t pooled_extent(std::size_t n, std::size_t window, std::size_t stride,
                          std::size_t padding, const char* op) {
  if (stride == 0) throw EvaluationError(std::string(op) + ": stride must be positive");
  if (n + 2 * padding < window) {
    throw EvaluationError(std::string(op) + ": window " + std::to_string(window) +
                          " larger than padded input " + std::to_string(n + 2 * padding));
  }
  return (n + 2 * padding - window) / stride + 1;
}

}  // namespace

Var Tape::variable(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->tracked = true;
  nodes_.push_back(node);
  return Var(std::move(node), this);
}

Var Tape::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node), nullptr);
}

void Tape::backward(const Var& output, const Tensor& seed) {
  if (seed.size() != output.size()) {
    throw EvaluationError("gradient seed of shape " + shape_to_string(seed.shape()) +
                          " does not match output shape " + shape_to_string(output.shape()));
  }
  for (auto& n : nodes_) n->grad = Tensor::filled(n->value.shape(), 0.0);
  if (!output.tracked()) return;
  if (output.tape() != this) throw std::logic_error("backward called on a foreign tape");

  auto it = std::find(nodes_.rbegin(), nodes_.rend(), output.node());
  std::copy(seed.data().begin(), seed.data().end(), (*it)->grad.data().begin());
  for (; it != nodes_.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor Tape::grad(const Var& v) const {
  if (!v.tracked() || v.node()->grad.size() != v.size()) return Tensor::filled(v.shape(), 0.0);
  return v.node()->grad;
}

Var add(const Var& a, const Var& b) {
  auto info = binary(a, b, "add");
  Tensor out(info.shape);
  for (std::size_t i = 0; i < info.size; ++i) out[i] = a.value()[info.ia(i)] + b.value()[info.ib(i)];
  return record(std::move(out), {&a, &b}, [pa = a.node(), pb = b.node(), info](const Node& self) {
    for (std::size_t i = 0; i < info.size; ++i) {
      push(*pa, info.ia(i), self.grad[i]);
      push(*pb, info.ib(i), self.grad[i]);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  auto info = binary(a, b, "sub");
  Tensor out(info.shape);
  for (std::size_t i = 0; i < info.size; ++i) out[i] = a.value()[info.ia(i)] - b.value()[info.ib(i)];
  return record(std::move(out), {&a, &b}, [pa = a.node(), pb = b.node(), info](const Node& self) {
    for (std::size_t i = 0; i < info.size; ++i) {
      push(*pa, info.ia(i), self.grad[i]);
      push(*pb, info.ib(i), -self.grad[i]);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  auto info = binary(a, b, "mul");
  Tensor out(info.shape);
  for (std::size_t i = 0; i < info.size; ++i) out[i] = a.value()[info.ia(i)] * b.value()[info.ib(i)];
  return record(std::move(out), {&a, &b}, [pa = a.node(), pb = b.node(), info](const Node& self) {
    for (std::size_t i = 0; i < info.size; ++i) {
      push(*pa, info.ia(i), self.grad[i] * pb->value[info.ib(i)]);
      push(*pb, info.ib(i), self.grad[i] * pa->value[info.ia(i)]);
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  return record(std::move(out), {&a}, [pa = a.node(), factor](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) push(*pa, i, self.grad[i] * factor);
  });
}

Var abs(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::abs(v);
  return record(std::move(out), {&a}, [pa = a.node()](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = pa->value[i];
      push(*pa, i, v > 0 ? self.grad[i] : (v < 0 ? -self.grad[i] : 0.0));
    }
  });
}

Var activation(numeric::Activation kind, const Var& a) {
  Tensor out = numeric::apply_activation(kind, a.value());
  return record(std::move(out), {&a}, [pa = a.node(), kind](const Node& self) {
    const auto& y = self.value;
    const auto& g = self.grad;
    switch (kind) {
      case numeric::Activation::ReLU:
        for (std::size_t i = 0; i < g.size(); ++i) push(*pa, i, pa->value[i] > 0 ? g[i] : 0.0);
        break;
      case numeric::Activation::Sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) push(*pa, i, g[i] * y[i] * (1.0 - y[i]));
        break;
      case numeric::Activation::Tanh:
        for (std::size_t i = 0; i < g.size(); ++i) push(*pa, i, g[i] * (1.0 - y[i] * y[i]));
        break;
      case numeric::Activation::Softmax: {
        const std::size_t row = y.rank() == 0 ? 1 : y.shape().back();
        for (std::size_t start = 0; start < y.size(); start += row) {
          double dot = 0.0;
          for (std::size_t j = start; j < start + row; ++j) dot += g[j] * y[j];
          for (std::size_t j = start; j < start + row; ++j) push(*pa, j, y[j] * (g[j] - dot));
        }
        break;
      }
    }
  });
}

Var vecmat(const Var& x, const Var& w) {
  if (w.value().rank() != 2) {
    throw EvaluationError("weights must be a matrix, got shape " + shape_to_string(w.shape()));
  }
  const std::size_t in = w.shape()[0];
  const std::size_t out_n = w.shape()[1];
  if (x.size() != in) {
    throw EvaluationError("input width " + std::to_string(x.size()) +
                          " does not match weights " + shape_to_string(w.shape()));
  }
  Tensor out({out_n});
  const auto& xv = x.value();
  const auto& wv = w.value();
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = xv[i];
    if (xi == 0.0) continue;
    const double* row = wv.data().data() + i * out_n;
    for (std::size_t j = 0; j < out_n; ++j) out[j] += xi * row[j];
  }
  return record(std::move(out), {&x, &w}, [px = x.node(), pw = w.node(), in, out_n](const Node& self) {
    const auto& g = self.grad;
    if (px->tracked) {
      for (std::size_t i = 0; i < in; ++i) {
        const double* row = pw->value.data().data() + i * out_n;
        double acc = 0.0;
        for (std::size_t j = 0; j < out_n; ++j) acc += row[j] * g[j];
        px->grad[i] += acc;
      }
    }
    if (pw->tracked) {
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t j = 0; j < out_n; ++j) pw->grad[i * out_n + j] += px->value[i] * g[j];
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = numeric::reshape(a.value(), shape);
  return record(std::move(out), {&a}, [pa = a.node()](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) push(*pa, i, self.grad[i]);
  });
}

Var flatten(const Var& a) { return reshape(a, Shape{a.size()}); }

Var transpose(const Var& a, const std::vector<std::size_t>& axes) {
  Tensor out = numeric::transpose(a.value(), axes);
  auto inverse = numeric::inverse_permutation(axes);
  return record(std::move(out), {&a}, [pa = a.node(), inverse](const Node& self) {
    if (!pa->tracked) return;
    Tensor back = numeric::transpose(self.grad, inverse);
    for (std::size_t i = 0; i < back.size(); ++i) pa->grad[i] += back[i];
  });
}

Var concat(const Var& a, const Var& b) {
  std::vector<double> data(a.value().values());
  data.insert(data.end(), b.value().values().begin(), b.value().values().end());
  const std::size_t na = a.size();
  return record(Tensor::vector(std::move(data)), {&a, &b},
                [pa = a.node(), pb = b.node(), na](const Node& self) {
                  for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    if (i < na) push(*pa, i, self.grad[i]);
                    else push(*pb, i - na, self.grad[i]);
                  }
                });
}

Var slice(const Var& a, std::size_t offset, std::size_t length) {
  if (offset + length > a.size() || length == 0) {
    throw EvaluationError("slice [" + std::to_string(offset) + ", " +
                          std::to_string(offset + length) + ") out of range for size " +
                          std::to_string(a.size()));
  }
  std::vector<double> data(a.value().values().begin() + static_cast<std::ptrdiff_t>(offset),
                           a.value().values().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return record(Tensor::vector(std::move(data)), {&a}, [pa = a.node(), offset](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) push(*pa, offset + i, self.grad[i]);
  });
}

Var gather(const Var& a, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw EvaluationError("gather of no entries");
  std::vector<double> data;
  data.reserve(indices.size());
  for (auto i : indices) {
    if (i >= a.size()) {
      throw EvaluationError("index " + std::to_string(i) + " out of range for size " + std::to_string(a.size()));
    }
    data.push_back(a.value()[i]);
  }
  return record(Tensor::vector(std::move(data)), {&a}, [pa = a.node(), indices](const Node& self) {
    for (std::size_t k = 0; k < indices.size(); ++k) push(*pa, indices[k], self.grad[k]);
  });
}

namespace {

// Geometry shared by convolution and pooling: for every output cell the list
// of (input offset, kernel offset) pairs inside the unpadded input.
struct Window {
  std::size_t channels = 0;
  Shape in_extent;   // spatial
  Shape out_extent;  // spatial
  Shape kernel;      // spatial
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::vector<std::size_t> in_strides;

  void finalize() { in_strides = strides_of(in_extent); }

  std::size_t in_spatial() const { return shape_size(in_extent); }
  std::size_t out_spatial() const { return shape_size(out_extent); }
  std::size_t kernel_size() const { return shape_size(kernel); }

  // Calls fn(input_spatial_index, kernel_index) for each in-bounds tap.
  template <class Fn>
  void taps(const std::vector<std::size_t>& out_idx, Fn&& fn) const {
    std::vector<std::size_t> k(kernel.size(), 0);
    std::size_t kflat = 0;
    do {
      std::size_t flat = 0;
      bool inside = true;
      for (std::size_t d = 0; d < kernel.size(); ++d) {
        const auto pos = static_cast<long long>(out_idx[d] * stride + k[d]) -
                         static_cast<long long>(padding);
        if (pos < 0 || pos >= static_cast<long long>(in_extent[d])) {
          inside = false;
          break;
        }
        flat += static_cast<std::size_t>(pos) * in_strides[d];
      }
      if (inside) fn(flat, kflat);
      ++kflat;
    } while (advance(k, kernel));
  }
};

}  // namespace

Var conv(const Var& x, const Var& filters, const Var& bias, std::size_t stride,
         std::size_t padding) {
  const auto& fs = filters.shape();
  if (fs.size() < 3) {
    throw EvaluationError("filters must have shape [F, C, K...], got " + shape_to_string(fs));
  }
  const std::size_t dims = fs.size() - 2;
  const std::size_t nf = fs[0];
  Window win;
  win.channels = fs[1];
  win.kernel.assign(fs.begin() + 2, fs.end());
  win.stride = stride;
  win.padding = padding;

  const auto& xs = x.shape();
  if (xs.size() == dims + 1) {
    win.in_extent.assign(xs.begin() + 1, xs.end());
    if (xs[0] != win.channels) {
      throw EvaluationError("input has " + std::to_string(xs[0]) + " channels, filters expect " +
                            std::to_string(win.channels));
    }
  } else if (xs.size() == dims && win.channels == 1) {
    win.in_extent = xs;
  } else {
    throw EvaluationError("conv" + std::to_string(dims) + "d input of shape " +
                          shape_to_string(xs) + " incompatible with filters " + shape_to_string(fs));
  }
  if (bias.size() != nf) {
    throw EvaluationError("bias length " + std::to_string(bias.size()) + " != filter count " +
                          std::to_string(nf));
  }
  for (std::size_t d = 0; d < dims; ++d) {
    win.out_extent.push_back(pooled_extent(win.in_extent[d], win.kernel[d], stride, padding, "conv"));
  }
  win.finalize();

  Shape out_shape{nf};
  out_shape.insert(out_shape.end(), win.out_extent.begin(), win.out_extent.end());
  Tensor out(out_shape);

  const std::size_t in_sp = win.in_spatial();
  const std::size_t out_sp = win.out_spatial();
  const std::size_t ksz = win.kernel_size();
  const auto& xv = x.value();
  const auto& fv = filters.value();
  const auto& bv = bias.value();

  std::vector<std::size_t> o(dims, 0);
  std::size_t oflat = 0;
  do {
    win.taps(o, [&](std::size_t in_flat, std::size_t k_flat) {
      for (std::size_t f = 0; f < nf; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < win.channels; ++c) {
          acc += xv[c * in_sp + in_flat] * fv[(f * win.channels + c) * ksz + k_flat];
        }
        out[f * out_sp + oflat] += acc;
      }
    });
    ++oflat;
  } while (advance(o, win.out_extent));
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t j = 0; j < out_sp; ++j) out[f * out_sp + j] += bv[f];

  return record(std::move(out), {&x, &filters, &bias},
                [px = x.node(), pf = filters.node(), pb = bias.node(), win, nf](const Node& self) {
                  const std::size_t in_sp = win.in_spatial();
                  const std::size_t out_sp = win.out_spatial();
                  const std::size_t ksz = win.kernel_size();
                  const auto& g = self.grad;
                  std::vector<std::size_t> o(win.out_extent.size(), 0);
                  std::size_t oflat = 0;
                  do {
                    win.taps(o, [&](std::size_t in_flat, std::size_t k_flat) {
                      for (std::size_t f = 0; f < nf; ++f) {
                        const double go = g[f * out_sp + oflat];
                        if (go == 0.0) continue;
                        for (std::size_t c = 0; c < win.channels; ++c) {
                          const std::size_t wi = (f * win.channels + c) * ksz + k_flat;
                          const std::size_t xi = c * in_sp + in_flat;
                          push(*px, xi, go * pf->value[wi]);
                          push(*pf, wi, go * px->value[xi]);
                        }
                      }
                    });
                    ++oflat;
                  } while (advance(o, win.out_extent));
                  if (pb->tracked) {
                    for (std::size_t f = 0; f < nf; ++f)
                      for (std::size_t j = 0; j < out_sp; ++j) pb->grad[f] += g[f * out_sp + j];
                  }
                });
}

Var maxpool(const Var& x, std::size_t dims, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw EvaluationError("maxpool: stride must be positive");
  if (2 * padding > stride) {
    throw EvaluationError("maxpool: padding " + std::to_string(padding) +
                          " exceeds half the window " + std::to_string(stride));
  }
  const auto& xs = x.shape();
  Window win;
  if (xs.size() == dims + 1) {
    win.channels = xs[0];
    win.in_extent.assign(xs.begin() + 1, xs.end());
  } else if (xs.size() == dims) {
    win.channels = 1;
    win.in_extent = xs;
  } else {
    throw EvaluationError("maxpool" + std::to_string(dims) + "d input of shape " +
                          shape_to_string(xs) + " has wrong rank");
  }
  win.kernel.assign(dims, stride);
  win.stride = stride;
  win.padding = padding;
  for (std::size_t d = 0; d < dims; ++d) {
    win.out_extent.push_back(pooled_extent(win.in_extent[d], stride, stride, padding, "maxpool"));
  }
  win.finalize();

  Shape out_shape;
  if (xs.size() == dims + 1) out_shape.push_back(win.channels);
  out_shape.insert(out_shape.end(), win.out_extent.begin(), win.out_extent.end());
  Tensor out(out_shape);

  const std::size_t in_sp = win.in_spatial();
  const std::size_t out_sp = win.out_spatial();
  std::vector<std::size_t> argmax(win.channels * out_sp, 0);
  const auto& xv = x.value();
  for (std::size_t c = 0; c < win.channels; ++c) {
    std::vector<std::size_t> o(dims, 0);
    std::size_t oflat = 0;
    do {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_at = c * in_sp;
      bool any = false;
      win.taps(o, [&](std::size_t in_flat, std::size_t) {
        const double v = xv[c * in_sp + in_flat];
        if (!any || v > best) {
          best = v;
          best_at = c * in_sp + in_flat;
          any = true;
        }
      });
      out[c * out_sp + oflat] = best;
      argmax[c * out_sp + oflat] = best_at;
      ++oflat;
    } while (advance(o, win.out_extent));
  }
  return record(std::move(out), {&x}, [px = x.node(), argmax = std::move(argmax)](const Node& self) {
    for (std::size_t i = 0; i < argmax.size(); ++i) push(*px, argmax[i], self.grad[i]);
  });
}

Var index(const Var& a, std::size_t i) {
  if (i >= a.size()) {
    throw EvaluationError("index " + std::to_string(i) + " out of range for size " +
                          std::to_string(a.size()));
  }
  return record(Tensor::scalar(a.value()[i]), {&a}, [pa = a.node(), i](const Node& self) {
    push(*pa, i, self.grad[0]);
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return record(Tensor::scalar(total), {&a}, [pa = a.node()](const Node& self) {
    for (std::size_t i = 0; i < pa->value.size(); ++i) push(*pa, i, self.grad[0]);
  });
}

namespace {

Var extremum(const Var& a, bool want_max, std::size_t skip) {
  const auto& v = a.value();
  std::size_t best = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == skip) continue;
    if (best == v.size() || (want_max ? v[i] > v[best] : v[i] < v[best])) best = i;
  }
  if (best == v.size()) throw EvaluationError("extremum of an empty selection");
  return record(Tensor::scalar(v[best]), {&a}, [pa = a.node(), best](const Node& self) {
    push(*pa, best, self.grad[0]);
  });
}

}  // namespace

Var max_all(const Var& a) { return extremum(a, true, a.size()); }
Var min_all(const Var& a) { return extremum(a, false, a.size()); }
Var max_except(const Var& a, std::size_t skip) { return extremum(a, true, skip); }
Var min_except(const Var& a, std::size_t skip) { return extremum(a, false, skip); }

Var distance(numeric::Distance kind, const Var& a, const Var& b) {
  const double d = numeric::distance(kind, a.value(), b.value());
  return record(Tensor::scalar(d), {&a, &b}, [pa = a.node(), pb = b.node(), kind, d](const Node& self) {
    const double g = self.grad[0];
    const auto& av = pa->value;
    const auto& bv = pb->value;
    switch (kind) {
      case numeric::Distance::L0:
        break;
      case numeric::Distance::L2:
        if (d == 0.0) break;
        for (std::size_t i = 0; i < av.size(); ++i) {
          const double t = g * (av[i] - bv[i]) / d;
          push(*pa, i, t);
          push(*pb, i, -t);
        }
        break;
      case numeric::Distance::Linf: {
        std::size_t best = 0;
        for (std::size_t i = 1; i < av.size(); ++i) {
          if (std::abs(av[i] - bv[i]) > std::abs(av[best] - bv[best])) best = i;
        }
        const double diff = av[best] - bv[best];
        const double s = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        push(*pa, best, g * s);
        push(*pb, best, -g * s);
        break;
      }
    }
  });
}

}  // namespace socrates::ad
