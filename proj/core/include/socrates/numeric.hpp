#pragma once

#include <string_view>

#include "socrates/tensor.hpp"

namespace socrates::numeric {

enum class Activation { ReLU, Sigmoid, Tanh, Softmax };

/// Case-insensitive lookup ("relu", "ReLU", "softmax", ...). Throws FormatError.
Activation activation_from_name(std::string_view name);
std::string_view activation_name(Activation kind);

/// Element-wise, except Softmax which normalizes over the last axis.
Tensor apply_activation(Activation kind, const Tensor& t);

Tensor reshape(const Tensor& t, const Shape& new_shape);
Tensor transpose(const Tensor& t, const std::vector<std::size_t>& axes);

/// Inverse of a permutation given as axes list.
std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& axes);

enum class Distance { L0, L2, Linf };

/// Accepts "d0"/"d2"/"di" plus descriptive aliases such as "infinite norm".
Distance distance_from_name(std::string_view name);
std::string_view distance_name(Distance kind);  // "d0" | "d2" | "di"

/// d0 counts entries that differ under exact comparison; d2 is Euclidean;
/// di is the maximum absolute difference.
double distance(Distance kind, const Tensor& a, const Tensor& b);

}  // namespace socrates::numeric
