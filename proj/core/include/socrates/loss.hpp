#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "socrates/assertion.hpp"
#include "socrates/autodiff.hpp"
#include "socrates/network.hpp"

// Loss functions over clauses: zero exactly when the clause holds (up to the
// margin k on strict relations), positive otherwise.
//   a && b -> loss(a) + loss(b)        a || b -> loss(a) * loss(b)
//   v1 >  v2 -> max(0, v2 - v1 + k)    v1 >= v2 -> max(0, v2 - v1)
//   v1 <  v2 -> max(0, v1 - v2 + k)    v1 <= v2 -> max(0, v1 - v2)
//   v1 =  v2 -> |v1 - v2|              v1 != v2 -> k if v1 == v2 else 0
namespace socrates::falsify {

constexpr double kDefaultMargin = 1e-9;

struct LossNode;
using LossExpr = std::shared_ptr<const LossNode>;

/// How a relation is scored.
enum class LeafMode {
  Exact,        // the table above
  LabelMargin,  // label(x) op c, scored on the output scores of x
  LabelPair,    // label(x) op label(y), one side frozen per evaluation
};

struct LossLeaf {
  logic::Prop prop;
  LeafMode mode = LeafMode::Exact;
  // Label leaves, normalised so that the label is on the left.
  logic::RelOp op = logic::RelOp::Eq;
  logic::TermPtr left_arg;
  nn::LabelMode left_mode = nn::LabelMode::ArgMax;
  double target = 0.0;  // LabelMargin
  logic::TermPtr right_arg;  // LabelPair
  nn::LabelMode right_mode = nn::LabelMode::ArgMax;
  std::size_t id = 0;        // LabelPair state slot
};

struct LossNode {
  enum class Kind { Sum, Product, Leaf };
  Kind kind = Kind::Leaf;
  std::vector<LossExpr> parts;
  LossLeaf leaf;
};

/// The loss of the table above, used as a satisfaction oracle.
LossExpr compile_exact_loss(const logic::ClausePtr& clause);

/// Same structure, but relations on labels are scored by score margins so
/// that gradients exist:
///   L(x) op c          -> max(0, max_{i not allowed} z_i - max_{j allowed} z_j + k)
///   Lmin(x) op c       -> max(0, min_{j allowed} z_j - min_{i not allowed} z_i + k)
/// where "allowed" are the labels j with (j op c). Between two labels, the
/// side whose input moved less since the previous evaluation is frozen at
/// its current label. Constant sides are evaluated here, so the network and
/// affine maps are needed.
LossExpr compile_surrogate_loss(const logic::ClausePtr& clause, const nn::Network& net,
                                const std::map<std::string, logic::Affine>& affine);

/// Evaluates a loss. Stateful only for LabelPair leaves; use one evaluator
/// per optimisation run.
class LossEvaluator {
 public:
  LossEvaluator(LossExpr expr, double margin = kDefaultMargin) : expr_(std::move(expr)), margin_(margin) {}

  ad::Var operator()(const logic::Bindings& env, logic::EvalContext& ctx);
  double value(const logic::Env& env, const nn::Network& net,
               const std::map<std::string, logic::Affine>& affine = {});

 private:
  ad::Var eval(const LossNode& node, const logic::Bindings& env, logic::EvalContext& ctx);
  ad::Var leaf(const LossLeaf& leaf, const logic::Bindings& env, logic::EvalContext& ctx);

  LossExpr expr_;
  double margin_;
  std::map<std::size_t, std::pair<Tensor, Tensor>> last_args_;
};

}  // namespace socrates::falsify
