#include "socrates/loss.hpp"

#include <cmath>

#include "socrates/error.hpp"

namespace socrates::falsify {

using logic::RelOp;

namespace {

LossExpr make_node(LossNode::Kind kind, std::vector<LossExpr> parts) {
  auto n = std::make_shared<LossNode>();
  n->kind = kind;
  n->parts = std::move(parts);
  return n;
}

LossExpr make_leaf(LossLeaf leaf) {
  auto n = std::make_shared<LossNode>();
  n->leaf = std::move(leaf);
  return n;
}

RelOp mirror(RelOp op) {
  switch (op) {
    case RelOp::Gt: return RelOp::Lt;
    case RelOp::Ge: return RelOp::Le;
    case RelOp::Lt: return RelOp::Gt;
    case RelOp::Le: return RelOp::Ge;
    default: return op;
  }
}

struct LabelOf {
  logic::TermPtr arg;
  nn::LabelMode mode;
};

std::optional<LabelOf> as_label(const logic::TermPtr& t) {
  const auto* app = std::get_if<logic::ApplyTerm>(&t->node);
  if (!app) return std::nullopt;
  if (app->fn == logic::Builtin::Id) return as_label(app->args[0]);
  if (app->fn == logic::Builtin::Label) return LabelOf{app->args[0], nn::LabelMode::ArgMax};
  if (app->fn == logic::Builtin::LabelMin) return LabelOf{app->args[0], nn::LabelMode::ArgMin};
  return std::nullopt;
}

bool has_vars(const logic::TermPtr& t) {
  return !logic::free_variables(logic::make_prop(t, RelOp::Eq, t)).empty();
}

template <class LeafFn>
LossExpr compile(const logic::ClausePtr& c, LeafFn&& leaf_fn) {
  return std::visit(
      [&](const auto& x) -> LossExpr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, logic::Prop>) {
          return make_leaf(leaf_fn(x));
        } else {
          const auto kind = std::is_same_v<T, logic::AndClause> ? LossNode::Kind::Sum : LossNode::Kind::Product;
          return make_node(kind, {compile(x.lhs, leaf_fn), compile(x.rhs, leaf_fn)});
        }
      },
      c->node);
}

ad::Var scalar_term(const logic::TermPtr& t, const logic::Bindings& env, logic::EvalContext& ctx) {
  auto v = logic::evaluate_term(t, env, ctx);
  if (v.size() != 1) {
    throw EvaluationError("'" + logic::to_string(t) + "' has " + std::to_string(v.size()) +
                          " entries, expected a scalar");
  }
  return ad::reshape(v, {});
}

ad::Var exact_leaf(const logic::Prop& p, double k, const logic::Bindings& env, logic::EvalContext& ctx) {
  const auto v1 = scalar_term(p.lhs, env, ctx);
  const auto v2 = scalar_term(p.rhs, env, ctx);
  const auto margin = ad::Tape::constant(k);
  switch (p.op) {
    case RelOp::Gt: return ad::relu(ad::add(ad::sub(v2, v1), margin));
    case RelOp::Ge: return ad::relu(ad::sub(v2, v1));
    case RelOp::Lt: return ad::relu(ad::add(ad::sub(v1, v2), margin));
    case RelOp::Le: return ad::relu(ad::sub(v1, v2));
    case RelOp::Eq: return ad::abs(ad::sub(v1, v2));
    case RelOp::Ne: return ad::Tape::constant(v1.value().item() == v2.value().item() ? k : 0.0);
  }
  throw std::logic_error("unhandled relation");
}

// Margin loss for "label(z) op target".
std::optional<ad::Var> label_margin(const ad::Var& z, nn::LabelMode mode, RelOp op, double target, double k) {
  std::vector<std::size_t> allowed, other;
  for (std::size_t j = 0; j < z.size(); ++j) {
    (logic::compare(static_cast<double>(j), op, target) ? allowed : other).push_back(j);
  }
  if (allowed.empty()) return std::nullopt;
  if (other.empty()) return ad::Tape::constant(0.0);
  const auto margin = ad::Tape::constant(k);
  if (mode == nn::LabelMode::ArgMax) {
    return ad::relu(ad::add(ad::sub(ad::max_all(ad::gather(z, other)), ad::max_all(ad::gather(z, allowed))), margin));
  }
  return ad::relu(ad::add(ad::sub(ad::min_all(ad::gather(z, allowed)), ad::min_all(ad::gather(z, other))), margin));
}

}  // namespace

LossExpr compile_exact_loss(const logic::ClausePtr& clause) {
  return compile(clause, [](const logic::Prop& p) {
    LossLeaf leaf;
    leaf.prop = p;
    return leaf;
  });
}

LossExpr compile_surrogate_loss(const logic::ClausePtr& clause, const nn::Network& net,
                                const std::map<std::string, logic::Affine>& affine) {
  std::size_t next_id = 0;
  return compile(clause, [&](const logic::Prop& p) {
    LossLeaf leaf;
    leaf.prop = p;
    const auto l = as_label(p.lhs);
    const auto r = as_label(p.rhs);
    auto constant_value = [&](const logic::TermPtr& t) -> std::optional<double> {
      if (has_vars(t)) return std::nullopt;
      logic::EvalContext ctx(net, affine);
      auto v = logic::evaluate_term(t, {}, ctx);
      if (v.size() != 1) return std::nullopt;
      return v.value()[0];
    };
    if (l && r) {
      leaf.mode = LeafMode::LabelPair;
      leaf.op = p.op;
      leaf.left_arg = l->arg;
      leaf.left_mode = l->mode;
      leaf.right_arg = r->arg;
      leaf.right_mode = r->mode;
      leaf.id = next_id++;
    } else if (auto c = l ? constant_value(p.rhs) : std::nullopt; l && c) {
      leaf.mode = LeafMode::LabelMargin;
      leaf.op = p.op;
      leaf.left_arg = l->arg;
      leaf.left_mode = l->mode;
      leaf.target = *c;
    } else if (auto c2 = r ? constant_value(p.lhs) : std::nullopt; r && c2) {
      leaf.mode = LeafMode::LabelMargin;
      leaf.op = mirror(p.op);
      leaf.left_arg = r->arg;
      leaf.left_mode = r->mode;
      leaf.target = *c2;
    }
    return leaf;
  });
}

ad::Var LossEvaluator::operator()(const logic::Bindings& env, logic::EvalContext& ctx) {
  return eval(*expr_, env, ctx);
}

double LossEvaluator::value(const logic::Env& env, const nn::Network& net,
                            const std::map<std::string, logic::Affine>& affine) {
  logic::Bindings b;
  for (const auto& [name, v] : env) b.emplace(name, ad::Tape::constant(v));
  logic::EvalContext ctx(net, affine);
  return eval(*expr_, b, ctx).value().item();
}

ad::Var LossEvaluator::eval(const LossNode& node, const logic::Bindings& env, logic::EvalContext& ctx) {
  if (node.kind == LossNode::Kind::Leaf) return leaf(node.leaf, env, ctx);
  ad::Var acc = eval(*node.parts.front(), env, ctx);
  for (std::size_t i = 1; i < node.parts.size(); ++i) {
    auto v = eval(*node.parts[i], env, ctx);
    acc = node.kind == LossNode::Kind::Sum ? ad::add(acc, v) : ad::mul(acc, v);
  }
  return acc;
}

ad::Var LossEvaluator::leaf(const LossLeaf& leaf, const logic::Bindings& env, logic::EvalContext& ctx) {
  switch (leaf.mode) {
    case LeafMode::Exact: return exact_leaf(leaf.prop, margin_, env, ctx);
    case LeafMode::LabelMargin: {
      auto z = ad::flatten(ctx.model_output(leaf.left_arg, env));
      if (auto m = label_margin(z, leaf.left_mode, leaf.op, leaf.target, margin_)) return *m;
      return exact_leaf(leaf.prop, margin_, env, ctx);
    }
    case LeafMode::LabelPair: {
      const auto left_in = logic::evaluate_term(leaf.left_arg, env, ctx).value().flattened();
      const auto right_in = logic::evaluate_term(leaf.right_arg, env, ctx).value().flattened();
      bool freeze_left = false;
      if (auto it = last_args_.find(leaf.id); it != last_args_.end() &&
                                              it->second.first.size() == left_in.size() &&
                                              it->second.second.size() == right_in.size()) {
        const double moved_left = numeric::distance(numeric::Distance::Linf, left_in, it->second.first);
        const double moved_right = numeric::distance(numeric::Distance::Linf, right_in, it->second.second);
        freeze_left = moved_left < moved_right;
      }
      last_args_[leaf.id] = {left_in, right_in};

      const auto zl = ad::flatten(ctx.model_output(leaf.left_arg, env));
      const auto zr = ad::flatten(ctx.model_output(leaf.right_arg, env));
      std::optional<ad::Var> m;
      if (freeze_left) {
        const auto c = static_cast<double>(nn::label_of(zl.value(), leaf.left_mode));
        m = label_margin(zr, leaf.right_mode, mirror(leaf.op), c, margin_);
      } else {
        const auto c = static_cast<double>(nn::label_of(zr.value(), leaf.right_mode));
        m = label_margin(zl, leaf.left_mode, leaf.op, c, margin_);
      }
      if (m) return *m;
      return exact_leaf(leaf.prop, margin_, env, ctx);
    }
  }
  throw std::logic_error("unhandled leaf mode");
}

}  // namespace socrates::falsify
