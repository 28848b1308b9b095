#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "socrates/assertion.hpp"
#include "socrates/network.hpp"

namespace socrates {

/// The box the optimizer works in. Every (variable, feature) slot belongs to
/// a class; slots tied by top-level precondition atoms "v[i] = w[j]" share a
/// class, and atoms "v[i] op c" or "dK(v, c) <= eps" (K = 2 or i) shrink the
/// class interval. The remaining precondition stays in the loss.
struct SearchSpace {
  std::vector<std::string> variables;
  std::size_t features = 0;
  std::vector<std::size_t> slot_class;  // variables.size() * features
  std::vector<double> lower;            // per class
  std::vector<double> upper;
  bool feasible = true;                 // false when some interval is empty

  std::size_t dimension() const { return lower.size(); }
  logic::Env expand(std::span<const double> z) const;
  /// Class values read from an environment (first slot of each class),
  /// clamped into the box.
  std::vector<double> restrict(const logic::Env& env) const;
};

SearchSpace build_search_space(const logic::Assertion& a, const nn::Network& net);

/// Closed interval [c - eps, c + eps] shrunk until every point of it keeps
/// |x - c| <= eps under floating-point subtraction.
std::pair<double, double> inner_interval(double c, double eps);

}  // namespace socrates
