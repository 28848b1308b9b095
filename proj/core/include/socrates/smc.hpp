#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "socrates/assertion.hpp"
#include "socrates/search_space.hpp"
#include "socrates/task.hpp"

// Wald's sequential probability ratio test between
//   H0: P(post | pre) >= p0 = theta + delta   and   H1: P(post | pre) <= p1 = theta - delta.
// The ratio pr starts at 1 and is multiplied by p1/p0 for every satisfying
// sample and by (1-p1)/(1-p0) for every violating one; H0 is accepted once
// pr <= beta/(1-alpha), H1 once pr >= (1-beta)/alpha. Accepting H0 is
// statistical evidence, not a proof.
namespace socrates::smc {

struct SprtConfig {
  double theta = 0.95;
  double alpha = 0.05;
  double beta = 0.05;
  double delta = 0.005;
  std::size_t max_samples = 1'000'000;
  std::size_t max_rejections = 1'000'000;  // per accepted sample
  std::uint64_t seed = 0;
  double timeout_seconds = 0.0;            // 0: none

  double p0() const { return theta + delta; }
  double p1() const { return theta - delta; }
  /// Throws ConfigError unless 0 < p1 < p0 < 1, alpha, beta in (0, 1),
  /// alpha + beta < 1 and max_samples > 0.
  void validate() const;
  static SprtConfig from_params(const std::map<std::string, double>& params);
};

enum class Decision { Continue, AcceptH0, AcceptH1 };

/// The ratio kept as log(pr) = n_sat * log(p1/p0) + n_viol * log((1-p1)/(1-p0)),
/// recomputed from the counts so no rounding accumulates.
class SprtState {
 public:
  explicit SprtState(const SprtConfig& config);

  Decision update(bool satisfied);
  Decision decision() const;

  std::size_t samples() const { return satisfied_ + violated_; }
  std::size_t satisfied() const { return satisfied_; }
  std::size_t violated() const { return violated_; }
  double log_ratio() const;
  double log_lower() const { return log_lower_; }  // log(beta / (1 - alpha))
  double log_upper() const { return log_upper_; }  // log((1 - beta) / alpha)

 private:
  double log_sat_;
  double log_viol_;
  double log_lower_;
  double log_upper_;
  std::size_t satisfied_ = 0;
  std::size_t violated_ = 0;
};

enum class SprtVerdict { AcceptH0, AcceptH1, BudgetExhausted };

const char* sprt_verdict_name(SprtVerdict v);

struct SprtResult {
  SprtVerdict verdict = SprtVerdict::BudgetExhausted;
  std::size_t samples_used = 0;
  std::size_t satisfied = 0;
  std::size_t rejected_candidates = 0;
  double log_ratio = 0.0;
  double final_ratio = 1.0;  // exp(log_ratio); may under/overflow, log_ratio does not
  std::optional<logic::Env> violation;  // first sample that violated post
  std::string note;
};

/// Runs the test on an arbitrary Bernoulli source: `trial` returns whether
/// one fresh sample satisfied the property.
SprtResult run_sprt(const SprtConfig& config, const std::function<bool(std::mt19937_64&)>& trial);

/// Draws inputs satisfying the precondition of a task. Templates get
/// constructive samplers (ball around x0, sensitive-feature resampling);
/// general formulas are sampled uniformly in the box tightened by the simple
/// precondition atoms. Every draw is checked against pre exactly and redrawn
/// on failure.
class PreconditionSampler {
 public:
  explicit PreconditionSampler(const task::VerificationTask& task);

  /// Throws SamplingError after `max_rejections` consecutive rejected draws
  /// or when the feasible region is empty.
  logic::Env draw(std::mt19937_64& rng, std::size_t max_rejections, std::size_t* rejected = nullptr) const;

  /// One unchecked candidate.
  logic::Env candidate(std::mt19937_64& rng) const;
  bool accepts(const logic::Env& env) const;

 private:
  Tensor ball_sample(const Tensor& centre, std::mt19937_64& rng) const;
  Tensor uniform_box(std::mt19937_64& rng) const;

  const task::VerificationTask& task_;
  nn::Box box_;
  SearchSpace space_;
};

logic::Env sample_precondition(const task::VerificationTask& task, std::mt19937_64& rng,
                               std::size_t max_rejections = 1'000'000);

SprtResult sprt_run(const task::VerificationTask& task, const SprtConfig& config);

}  // namespace socrates::smc
