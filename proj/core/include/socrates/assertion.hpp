#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "socrates/autodiff.hpp"
#include "socrates/network.hpp"
#include "socrates/numeric.hpp"
#include "socrates/tensor.hpp"

// Properties of the form  forall vars. pre => post  over a small set of
// built-in functions of network inputs.
//
// Concrete syntax (both clauses):
//   clause := conj ('||' conj)*
//   conj   := group ('&&' group)*
//   group  := '(' clause ')' | term relop term
//   relop  := '>' | '>=' | '<' | '<=' | '=' | '==' | '!='
//   term   := primary ('[' int ']')*
//   primary:= number | '[' number (',' number)* ']' | ident
//           | 'id' '(' term ')' | 'M' '(' term ')' | 'L' '(' term ')'
//           | 'Lmin' '(' term ')' | 'N' '(' name ',' term ')'
//           | ('d0' | 'd2' | 'di') '(' term ',' term ')'
// '&&' binds tighter than '||'. Free identifiers are the input variables.
namespace socrates::logic {

enum class RelOp { Gt, Ge, Lt, Le, Eq, Ne };

std::string_view relop_symbol(RelOp op);
/// Negation of a relation: > <-> <=, >= <-> <, = <-> !=.
RelOp complement(RelOp op);
bool compare(double lhs, RelOp op, double rhs);

enum class Builtin { Id, Model, Label, LabelMin, Linear, D0, D2, Di };

std::string_view builtin_name(Builtin fn);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct ConstTerm {
  Tensor value;  // rank 0 for numbers, rank 1 for vector literals
};
struct VarTerm {
  std::string name;
};
struct IndexTerm {
  TermPtr base;
  std::size_t index = 0;
};
struct ApplyTerm {
  Builtin fn = Builtin::Id;
  std::string affine;  // declaration name, N only
  std::vector<TermPtr> args;
};

struct Term {
  std::variant<ConstTerm, VarTerm, IndexTerm, ApplyTerm> node;
};

struct Clause;
using ClausePtr = std::shared_ptr<const Clause>;

struct Prop {
  TermPtr lhs;
  RelOp op = RelOp::Eq;
  TermPtr rhs;
};
struct AndClause {
  ClausePtr lhs;
  ClausePtr rhs;
};
struct OrClause {
  ClausePtr lhs;
  ClausePtr rhs;
};

struct Clause {
  std::variant<AndClause, OrClause, Prop> node;
};

TermPtr make_const(double v);
TermPtr make_const(Tensor v);
TermPtr make_var(std::string name);
TermPtr make_index(TermPtr base, std::size_t index);
TermPtr make_apply(Builtin fn, std::vector<TermPtr> args, std::string affine = {});
ClausePtr make_prop(TermPtr lhs, RelOp op, TermPtr rhs);
ClausePtr make_and(ClausePtr lhs, ClausePtr rhs);
ClausePtr make_or(ClausePtr lhs, ClausePtr rhs);
/// Left-associated conjunction/disjunction of a non-empty list.
ClausePtr conjunction(const std::vector<ClausePtr>& parts);
ClausePtr disjunction(const std::vector<ClausePtr>& parts);

/// Structural equality.
bool same(const TermPtr& a, const TermPtr& b);
bool same(const ClausePtr& a, const ClausePtr& b);

std::string to_string(const TermPtr& t);
std::string to_string(const ClausePtr& c);

/// y = x . weights + bias, declared in the task's "lin" section.
struct Affine {
  Tensor weights;  // [in, out]
  Tensor bias;     // [out]
};

struct Assertion {
  std::vector<std::string> variables;
  ClausePtr pre;
  ClausePtr post;
  std::map<std::string, Affine> affine;
};

bool same(const Assertion& a, const Assertion& b);

/// Parses both clauses; variables are collected left to right over pre then
/// post. Throws FormatError with a character offset on syntax, arity, sort or
/// unknown-name errors.
Assertion parse_assertion(std::string_view pre, std::string_view post,
                          std::map<std::string, Affine> affine = {});
ClausePtr parse_clause(std::string_view text, const std::map<std::string, Affine>& affine = {});

/// Pushes a negation down to the relations (De Morgan + relation complement).
ClausePtr negate_to_nnf(const ClausePtr& c);

/// Names of the free variables of a clause, first occurrence order.
std::vector<std::string> free_variables(const ClausePtr& c);

// ---------------------------------------------------------------------------
// Syntactic sugar.

enum class TemplateKind { LocalRobustness, GlobalRobustness, LocalFairness, GlobalFairness };

std::string_view template_kind_name(TemplateKind kind);

struct Template {
  TemplateKind kind = TemplateKind::LocalRobustness;
  std::optional<Tensor> x0;                  // local forms
  numeric::Distance distance = numeric::Distance::Linf;  // robustness forms
  double eps = 0.0;                          // robustness forms
  std::vector<std::size_t> sensitive;        // fairness forms
};

/// Expands a template against the network. For the local forms the expected
/// label is the network's label of x0, computed once here.
Assertion expand_template(const Template& sugar, const nn::Network& net);

// ---------------------------------------------------------------------------
// Evaluation.

using Env = std::map<std::string, Tensor>;
using Bindings = std::map<std::string, ad::Var>;

/// Shared state for evaluating terms over one set of bindings: memoizes the
/// network output per variable so M(x) and L(x) share a forward pass.
class EvalContext {
 public:
  EvalContext(const nn::Network& net, const std::map<std::string, Affine>& affine)
      : net_(net), affine_(affine) {}

  const nn::Network& network() const { return net_; }
  ad::Var model_output(const TermPtr& arg, const Bindings& env);
  const Affine& affine(const std::string& name) const;

 private:
  const nn::Network& net_;
  const std::map<std::string, Affine>& affine_;
  std::map<std::string, ad::Var> outputs_;
};

/// Value of a term. Differentiable except through L, Lmin and d0.
ad::Var evaluate_term(const TermPtr& t, const Bindings& env, EvalContext& ctx);

/// Exact satisfaction: = and != compare floats exactly.
bool evaluate(const ClausePtr& c, const Env& env, const nn::Network& net,
              const std::map<std::string, Affine>& affine = {});
bool evaluate(const ClausePtr& c, const Bindings& env, EvalContext& ctx);

}  // namespace socrates::logic
