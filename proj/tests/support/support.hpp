#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "socrates/falsify.hpp"
#include "socrates/network.hpp"
#include "socrates/task.hpp"
#include "socrates/tensor.hpp"

namespace socrates::test {

std::filesystem::path fixture(const std::string& relative);
std::string read_file(const std::filesystem::path& p);

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0);

nn::Layer linear_layer(Tensor w, Tensor b, std::optional<numeric::Activation> func = std::nullopt);
nn::Network random_mlp(std::mt19937_64& rng, const std::vector<std::size_t>& sizes, double lo = 0.0,
                       double hi = 1.0);

/// Central differences of f at x with step h.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-5);

/// True when one-sided differences disagree, i.e. a kink sits within h of x
/// along some coordinate.
bool near_kink(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
               double h = 1e-5);

/// |a - n| / max(|a|, |n|), with differences below `floor` counted as zero.
double relative_error(double a, double n, double floor = 1e-8);

/// Re-checks a witness without the assertion evaluator when the task came
/// from a template (own distance, argmax and box code); otherwise defers to
/// validate_counterexample.
bool independent_witness_check(const task::VerificationTask& task, const logic::Env& env);

/// Grid enumeration of the local-robustness ball of a 2-feature task. Returns
/// the number of grid points (inside the input box) whose label differs
/// from the label at x0.
std::size_t grid_flips(const task::VerificationTask& task, double step);

struct LayerInstance {
  nn::Layer layer;
  Shape input;
  bool sequence = false;  // leading recurrent layer: input is [steps, width]
};

const std::vector<nn::LayerKind>& all_layer_kinds();

/// Small random layer of the given kind with a compatible input shape.
LayerInstance random_layer_instance(nn::LayerKind kind, std::mt19937_64& rng);

struct GradientCheck {
  bool skipped = false;  // a kink lies within the finite-difference step
  double max_error = 0.0;
  double max_abs_diff = 0.0;
};

/// Tape vector-Jacobian product against central differences of
/// seed . layer(x) at a random x.
GradientCheck gradient_check(const LayerInstance& inst, std::mt19937_64& rng, double h = 1e-5);

/// Random clause over variable x with `features` entries: relations between
/// x[i], constants, M(x)[j], L(x)/Lmin(x) and d0/d2/di distances to vector
/// constants, combined with && and ||. Constants come from a 0.25 grid.
std::string random_clause_text(std::mt19937_64& rng, std::size_t features, std::size_t outputs, int depth);

/// The loss table computed directly from term values.
double oracle_loss(const logic::ClausePtr& c, const logic::Env& env, const nn::Network& net, double k);

/// Counts every Falsified verdict checked through `audit`; a witness failing
/// either check is a soundness violation.
struct SoundnessAudit {
  std::size_t falsified = 0;
  std::size_t violations = 0;

  void audit(const task::VerificationTask& task, const falsify::FalsifyResult& r);
};

SoundnessAudit& global_audit();

}  // namespace socrates::test
