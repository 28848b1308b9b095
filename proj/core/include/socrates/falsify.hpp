#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socrates/assertion.hpp"
#include "socrates/loss.hpp"
#include "socrates/optimizer.hpp"
#include "socrates/search_space.hpp"
#include "socrates/task.hpp"

namespace socrates::falsify {

enum class Verdict { Falsified, NotFalsified, Timeout };

const char* verdict_name(Verdict v);

struct FalsifyConfig {
  std::size_t restarts = 10;
  double timeout_seconds = 60.0;
  std::uint64_t seed = 0;
  double margin = kDefaultMargin;  // k
  std::size_t workers = 1;         // restarts run concurrently in groups of this size
  MinimizeConfig minimize;

  /// Reads restarts, timeout, seed, k, max_iterations, gtol, ftol, memory and
  /// workers. Throws ConfigError on out-of-range values.
  static FalsifyConfig from_params(const std::map<std::string, double>& params);
};

struct FalsifyResult {
  Verdict verdict = Verdict::NotFalsified;
  std::optional<logic::Env> witness;
  std::size_t restarts_run = 0;
  std::size_t witness_restart = 0;
  std::size_t iterations = 0;
  double best_loss = 0.0;
  std::vector<std::string> notes;
};

/// Minimizes loss(pre && not post) from several starting points and reports
/// a counterexample only after validate_counterexample accepts it. Restart 0
/// starts from x0 when the task came from a local template; the others start
/// uniformly in the search box. The outcome depends only on the seed unless
/// the timeout cuts the search short.
FalsifyResult falsify(const task::VerificationTask& task, const FalsifyConfig& config);

/// Exact check: every variable bound to a finite vector inside the input
/// bounds, pre true and post false.
bool validate_counterexample(const task::VerificationTask& task, const logic::Env& env);

/// Deterministic seed for stream `index` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace socrates::falsify
