#include "socrates/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "socrates/error.hpp"

namespace socrates {

using logic::RelOp;

std::pair<double, double> inner_interval(double c, double eps) {
  double lo = c - eps;
  double hi = c + eps;
  while (std::abs(lo - c) > eps) lo = std::nextafter(lo, c);
  while (std::abs(hi - c) > eps) hi = std::nextafter(hi, c);
  return {lo, hi};
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void conjuncts(const logic::ClausePtr& c, std::vector<const logic::Prop*>& out) {
  if (const auto* a = std::get_if<logic::AndClause>(&c->node)) {
    conjuncts(a->lhs, out);
    conjuncts(a->rhs, out);
  } else if (const auto* p = std::get_if<logic::Prop>(&c->node)) {
    out.push_back(p);
  }
}

logic::TermPtr unwrap_id(logic::TermPtr t) {
  while (const auto* app = std::get_if<logic::ApplyTerm>(&t->node)) {
    if (app->fn != logic::Builtin::Id) break;
    t = app->args[0];
  }
  return t;
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

struct Tightening {
  std::size_t slot;
  double lo;
  double hi;
};

class SpaceBuilder {
 public:
  SpaceBuilder(const logic::Assertion& a, const nn::Network& net) : a_(a), net_(net) {}

  SearchSpace build() {
    SearchSpace s;
    s.variables = a_.variables;
    s.features = net_.feature_count();
    const std::size_t slots = s.variables.size() * s.features;
    UnionFind uf(slots);
    std::vector<Tightening> tight;

    std::vector<const logic::Prop*> props;
    conjuncts(a_.pre, props);
    for (const auto* p : props) {
      try {
        analyse(*p, s, uf, tight);
      } catch (const EvaluationError&) {
        // Left to the loss; the exact evaluator will report it.
      }
    }

    const auto box = net_.feature_box();
    std::vector<std::size_t> root_class(slots, SIZE_MAX);
    s.slot_class.resize(slots);
    for (std::size_t slot = 0; slot < slots; ++slot) {
      const std::size_t root = uf.find(slot);
      const std::size_t f = slot % s.features;
      if (root_class[root] == SIZE_MAX) {
        root_class[root] = s.lower.size();
        s.lower.push_back(box.lower[f]);
        s.upper.push_back(box.upper[f]);
      }
      const std::size_t c = root_class[root];
      s.slot_class[slot] = c;
      s.lower[c] = std::max(s.lower[c], box.lower[f]);
      s.upper[c] = std::min(s.upper[c], box.upper[f]);
    }
    for (const auto& t : tight) {
      const std::size_t c = s.slot_class[t.slot];
      s.lower[c] = std::max(s.lower[c], t.lo);
      s.upper[c] = std::min(s.upper[c], t.hi);
    }
    for (std::size_t c = 0; c < s.dimension(); ++c) {
      if (!(s.lower[c] <= s.upper[c])) s.feasible = false;
    }
    return s;
  }

 private:
  std::optional<std::size_t> slot_of(const logic::TermPtr& term, const SearchSpace& s) const {
    const auto t = unwrap_id(term);
    const auto* idx = std::get_if<logic::IndexTerm>(&t->node);
    if (!idx) return std::nullopt;
    const auto base = unwrap_id(idx->base);
    const auto* v = std::get_if<logic::VarTerm>(&base->node);
    if (!v || idx->index >= s.features) return std::nullopt;
    auto it = std::find(s.variables.begin(), s.variables.end(), v->name);
    if (it == s.variables.end()) return std::nullopt;
    return static_cast<std::size_t>(it - s.variables.begin()) * s.features + idx->index;
  }

  std::optional<std::size_t> var_of(const logic::TermPtr& term, const SearchSpace& s) const {
    const auto t = unwrap_id(term);
    const auto* v = std::get_if<logic::VarTerm>(&t->node);
    if (!v) return std::nullopt;
    auto it = std::find(s.variables.begin(), s.variables.end(), v->name);
    if (it == s.variables.end()) return std::nullopt;
    return static_cast<std::size_t>(it - s.variables.begin());
  }

  std::optional<Tensor> constant(const logic::TermPtr& t) const {
    if (!logic::free_variables(logic::make_prop(t, RelOp::Eq, t)).empty()) return std::nullopt;
    logic::EvalContext ctx(net_, a_.affine);
    return logic::evaluate_term(t, {}, ctx).value();
  }

  static void bound(std::vector<Tightening>& out, std::size_t slot, RelOp op, double c) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (op) {
      case RelOp::Gt: out.push_back({slot, std::nextafter(c, inf), inf}); break;
      case RelOp::Ge: out.push_back({slot, c, inf}); break;
      case RelOp::Lt: out.push_back({slot, -inf, std::nextafter(c, -inf)}); break;
      case RelOp::Le: out.push_back({slot, -inf, c}); break;
      case RelOp::Eq: out.push_back({slot, c, c}); break;
      case RelOp::Ne: break;
    }
  }

  void analyse(const logic::Prop& p, const SearchSpace& s, UnionFind& uf, std::vector<Tightening>& tight) const {
    const auto ls = slot_of(p.lhs, s);
    const auto rs = slot_of(p.rhs, s);
    if (ls && rs) {
      if (p.op == RelOp::Eq) uf.unite(*ls, *rs);
      return;
    }
    if (ls || rs) {
      const auto c = constant(ls ? p.rhs : p.lhs);
      if (c && c->size() == 1) bound(tight, ls ? *ls : *rs, ls ? p.op : mirror(p.op), (*c)[0]);
      return;
    }
    // dK(v, c) <= eps with K in {2, i}, either orientation.
    auto ball = [&](const logic::TermPtr& dist, RelOp op, const logic::TermPtr& radius) {
      if (op != RelOp::Le && op != RelOp::Lt) return;
      const auto d = unwrap_id(dist);
      const auto* app = std::get_if<logic::ApplyTerm>(&d->node);
      if (!app || (app->fn != logic::Builtin::D2 && app->fn != logic::Builtin::Di)) return;
      auto v = var_of(app->args[0], s);
      auto centre = constant(app->args[1]);
      if (!v) {
        v = var_of(app->args[1], s);
        centre = constant(app->args[0]);
      }
      const auto eps = constant(radius);
      if (!v || !centre || !eps || eps->size() != 1 || centre->size() != s.features) return;
      double r = (*eps)[0];
      if (op == RelOp::Lt) r = std::nextafter(r, -std::numeric_limits<double>::infinity());
      if (r < 0) {
        tight.push_back({*v * s.features, 1.0, 0.0});  // empty
        return;
      }
      for (std::size_t i = 0; i < s.features; ++i) {
        const auto [lo, hi] = inner_interval((*centre)[i], r);
        tight.push_back({*v * s.features + i, lo, hi});
      }
    };
    ball(p.lhs, p.op, p.rhs);
    ball(p.rhs, mirror(p.op), p.lhs);
  }

  const logic::Assertion& a_;
  const nn::Network& net_;
};

}  // namespace

SearchSpace build_search_space(const logic::Assertion& a, const nn::Network& net) {
  return SpaceBuilder(a, net).build();
}

logic::Env SearchSpace::expand(std::span<const double> z) const {
  logic::Env env;
  for (std::size_t v = 0; v < variables.size(); ++v) {
    std::vector<double> x(features);
    for (std::size_t i = 0; i < features; ++i) x[i] = z[slot_class[v * features + i]];
    env.emplace(variables[v], Tensor::vector(std::move(x)));
  }
  return env;
}

std::vector<double> SearchSpace::restrict(const logic::Env& env) const {
  std::vector<double> z(dimension());
  std::vector<char> seen(dimension(), 0);
  for (std::size_t v = 0; v < variables.size(); ++v) {
    auto it = env.find(variables[v]);
    for (std::size_t i = 0; i < features; ++i) {
      const std::size_t c = slot_class[v * features + i];
      if (seen[c]) continue;
      seen[c] = 1;
      const double value = it != env.end() && i < it->second.size() ? it->second[i] : lower[c];
      z[c] = std::clamp(value, lower[c], upper[c]);
    }
  }
  return z;
}

}  // namespace socrates
