#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace socrates::falsify {

/// f(x), writing the gradient into `grad` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeConfig {
  std::size_t memory = 10;            // stored correction pairs
  std::size_t max_iterations = 15000;
  double gtol = 1e-5;                 // projected-gradient infinity norm
  double ftol = 1e-9;                 // relative objective decrease
  double target = -std::numeric_limits<double>::infinity();  // stop once f <= target
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

enum class MinimizeStatus {
  ReachedTarget,
  GradientConverged,
  ObjectiveConverged,
  MaxIterations,
  LineSearchFailed,
  Timeout,
};

const char* minimize_status_name(MinimizeStatus s);

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  MinimizeStatus status = MinimizeStatus::MaxIterations;
};

/// Projected limited-memory BFGS on the box [lower, upper]: quasi-Newton
/// steps on the variables not held at a bound, projected backtracking line
/// search with an Armijo condition. Iterates stay inside the box and the
/// objective never increases. Throws EvaluationError if f(init) is not finite.
MinimizeResult minimize_bounded(const Objective& objective, std::span<const double> lower,
                                std::span<const double> upper, std::vector<double> init,
                                const MinimizeConfig& config = {});

}  // namespace socrates::falsify
