#include "socrates/numeric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "socrates/error.hpp"

namespace socrates::numeric {
namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '-' || c == '_') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw FormatError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                      " vs " + shape_to_string(b.shape()));
  }
}

}  // namespace

Activation activation_from_name(std::string_view name) {
  auto n = normalize(name);
  if (n == "relu") return Activation::ReLU;
  if (n == "sigmoid") return Activation::Sigmoid;
  if (n == "tanh") return Activation::Tanh;
  if (n == "softmax") return Activation::Softmax;
  throw FormatError("unknown activation function '" + std::string(name) + "'");
}

std::string_view activation_name(Activation kind) {
  switch (kind) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

Tensor apply_activation(Activation kind, const Tensor& t) {
  if (t.empty()) throw FormatError("activation applied to an empty tensor");
  Tensor out = t;
  auto data = out.data();
  switch (kind) {
    case Activation::ReLU:
      for (auto& v : data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (auto& v : data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::Tanh:
      for (auto& v : data) v = std::tanh(v);
      break;
    case Activation::Softmax: {
      const std::size_t row = t.rank() == 0 ? 1 : t.shape().back();
      for (std::size_t start = 0; start < data.size(); start += row) {
        auto seg = data.subspan(start, row);
        const double hi = *std::max_element(seg.begin(), seg.end());
        double total = 0.0;
        for (auto& v : seg) total += (v = std::exp(v - hi));
        for (auto& v : seg) v /= total;
      }
      break;
    }
  }
  return out;
}

Tensor reshape(const Tensor& t, const Shape& new_shape) {
  if (shape_size(new_shape) != t.size()) {
    throw FormatError("cannot reshape " + shape_to_string(t.shape()) + " into " +
                      shape_to_string(new_shape));
  }
  return Tensor(new_shape, t.values());
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& axes) {
  std::vector<std::size_t> inv(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) inv.at(axes[i]) = i;
  return inv;
}

Tensor transpose(const Tensor& t, const std::vector<std::size_t>& axes) {
  const auto rank = t.rank();
  if (axes.size() != rank) {
    throw FormatError("transpose axes " + shape_to_string(axes) + " do not match rank " +
                      std::to_string(rank));
  }
  std::vector<bool> seen(rank, false);
  for (auto a : axes) {
    if (a >= rank || seen[a]) {
      throw FormatError("transpose axes " + shape_to_string(axes) + " are not a permutation");
    }
    seen[a] = true;
  }

  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = t.shape()[axes[i]];

  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * t.shape()[i];

  Tensor out(out_shape);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += idx[i] * in_strides[axes[i]];
    out[flat] = t[src];
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

Distance distance_from_name(std::string_view name) {
  auto n = normalize(name);
  if (n == "d0" || n == "l0" || n == "0norm" || n == "zeronorm") return Distance::L0;
  if (n == "d2" || n == "l2" || n == "2norm" || n == "euclidean") return Distance::L2;
  if (n == "di" || n == "linf" || n == "infinitenorm" || n == "infinitynorm" || n == "infnorm" ||
      n == "dinf") {
    return Distance::Linf;
  }
  throw FormatError("unknown distance '" + std::string(name) + "' (expected d0, d2 or di)");
}

std::string_view distance_name(Distance kind) {
  switch (kind) {
    case Distance::L0: return "d0";
    case Distance::L2: return "d2";
    case Distance::Linf: return "di";
  }
  return "?";
}

double distance(Distance kind, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, distance_name(kind));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    switch (kind) {
      case Distance::L0: acc += (a[i] != b[i]) ? 1.0 : 0.0; break;
      case Distance::L2: acc += diff * diff; break;
      case Distance::Linf: acc = std::max(acc, std::abs(diff)); break;
    }
  }
  return kind == Distance::L2 ? std::sqrt(acc) : acc;
}

}  // namespace socrates::numeric
