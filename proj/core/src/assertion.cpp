#include "socrates/assertion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "socrates/error.hpp"

namespace socrates::logic {

std::string_view relop_symbol(RelOp op) {
  switch (op) {
    case RelOp::Gt: return ">";
    case RelOp::Ge: return ">=";
    case RelOp::Lt: return "<";
    case RelOp::Le: return "<=";
    case RelOp::Eq: return "=";
    case RelOp::Ne: return "!=";
  }
  return "?";
}

RelOp complement(RelOp op) {
  switch (op) {
    case RelOp::Gt: return RelOp::Le;
    case RelOp::Ge: return RelOp::Lt;
    case RelOp::Lt: return RelOp::Ge;
    case RelOp::Le: return RelOp::Gt;
    case RelOp::Eq: return RelOp::Ne;
    case RelOp::Ne: return RelOp::Eq;
  }
  return op;
}

bool compare(double lhs, RelOp op, double rhs) {
  switch (op) {
    case RelOp::Gt: return lhs > rhs;
    case RelOp::Ge: return lhs >= rhs;
    case RelOp::Lt: return lhs < rhs;
    case RelOp::Le: return lhs <= rhs;
    case RelOp::Eq: return lhs == rhs;
    case RelOp::Ne: return lhs != rhs;
  }
  return false;
}

std::string_view builtin_name(Builtin fn) {
  switch (fn) {
    case Builtin::Id: return "id";
    case Builtin::Model: return "M";
    case Builtin::Label: return "L";
    case Builtin::LabelMin: return "Lmin";
    case Builtin::Linear: return "N";
    case Builtin::D0: return "d0";
    case Builtin::D2: return "d2";
    case Builtin::Di: return "di";
  }
  return "?";
}

namespace {

std::optional<Builtin> builtin_from_name(std::string_view s) {
  static const std::pair<std::string_view, Builtin> table[] = {
      {"id", Builtin::Id},      {"M", Builtin::Model}, {"L", Builtin::Label},
      {"Lmin", Builtin::LabelMin}, {"N", Builtin::Linear}, {"d0", Builtin::D0},
      {"d2", Builtin::D2},      {"di", Builtin::Di}};
  for (const auto& [name, fn] : table) {
    if (name == s) return fn;
  }
  return std::nullopt;
}

std::size_t arity(Builtin fn) {
  switch (fn) {
    case Builtin::D0:
    case Builtin::D2:
    case Builtin::Di:
    case Builtin::Linear: return 2;
    default: return 1;
  }
}

template <class T>
TermPtr term(T node) {
  return std::make_shared<const Term>(Term{std::move(node)});
}

template <class T>
ClausePtr clause(T node) {
  return std::make_shared<const Clause>(Clause{std::move(node)});
}

}  // namespace

TermPtr make_const(double v) { return term(ConstTerm{Tensor::scalar(v)}); }
TermPtr make_const(Tensor v) { return term(ConstTerm{std::move(v)}); }
TermPtr make_var(std::string name) { return term(VarTerm{std::move(name)}); }
TermPtr make_index(TermPtr base, std::size_t index) { return term(IndexTerm{std::move(base), index}); }
TermPtr make_apply(Builtin fn, std::vector<TermPtr> args, std::string affine) {
  return term(ApplyTerm{fn, std::move(affine), std::move(args)});
}
ClausePtr make_prop(TermPtr lhs, RelOp op, TermPtr rhs) {
  return clause(Prop{std::move(lhs), op, std::move(rhs)});
}
ClausePtr make_and(ClausePtr lhs, ClausePtr rhs) { return clause(AndClause{std::move(lhs), std::move(rhs)}); }
ClausePtr make_or(ClausePtr lhs, ClausePtr rhs) { return clause(OrClause{std::move(lhs), std::move(rhs)}); }

ClausePtr conjunction(const std::vector<ClausePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty conjunction");
  ClausePtr out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = make_and(out, parts[i]);
  return out;
}

ClausePtr disjunction(const std::vector<ClausePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty disjunction");
  ClausePtr out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = make_or(out, parts[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Structural equality.

bool same(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, ConstTerm>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, VarTerm>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, IndexTerm>) {
          return x.index == y.index && same(x.base, y.base);
        } else {
          if (x.fn != y.fn || x.affine != y.affine || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (!same(x.args[i], y.args[i])) return false;
          }
          return true;
        }
      },
      a->node);
}

bool same(const ClausePtr& a, const ClausePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, Prop>) {
          return x.op == y.op && same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
        } else {
          return same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
        }
      },
      a->node);
}

bool same(const Assertion& a, const Assertion& b) {
  if (a.variables != b.variables || !same(a.pre, b.pre) || !same(a.post, b.post)) return false;
  if (a.affine.size() != b.affine.size()) return false;
  for (const auto& [name, f] : a.affine) {
    auto it = b.affine.find(name);
    if (it == b.affine.end() || !(it->second.weights == f.weights) || !(it->second.bias == f.bias)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Printing.

namespace {

void print_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void print_term(std::string& out, const Term& t) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstTerm>) {
          if (x.value.rank() == 0) {
            print_number(out, x.value.item());
          } else {
            out += '[';
            for (std::size_t i = 0; i < x.value.size(); ++i) {
              if (i) out += ", ";
              print_number(out, x.value[i]);
            }
            out += ']';
          }
        } else if constexpr (std::is_same_v<T, VarTerm>) {
          out += x.name;
        } else if constexpr (std::is_same_v<T, IndexTerm>) {
          print_term(out, *x.base);
          out += '[' + std::to_string(x.index) + ']';
        } else {
          out += builtin_name(x.fn);
          out += '(';
          if (x.fn == Builtin::Linear) out += x.affine + ", ";
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (i) out += ", ";
            print_term(out, *x.args[i]);
          }
          out += ')';
        }
      },
      t.node);
}

// Left children of the same connective print bare (the parser associates to
// the left); anything else that would change grouping gets parentheses.
void print_clause(std::string& out, const Clause& c) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Prop>) {
          print_term(out, *x.lhs);
          out += ' ';
          out += relop_symbol(x.op);
          out += ' ';
          print_term(out, *x.rhs);
        } else {
          constexpr bool is_and = std::is_same_v<T, AndClause>;
          auto child = [&](const Clause& sub, bool right) {
            const bool wrap = std::holds_alternative<T>(sub.node) ? right
                              : is_and ? std::holds_alternative<OrClause>(sub.node)
                                       : false;
            if (wrap) out += '(';
            print_clause(out, sub);
            if (wrap) out += ')';
          };
          child(*x.lhs, false);
          out += is_and ? " && " : " || ";
          child(*x.rhs, true);
        }
      },
      c.node);
}

}  // namespace

std::string to_string(const TermPtr& t) {
  std::string out;
  print_term(out, *t);
  return out;
}

std::string to_string(const ClausePtr& c) {
  std::string out;
  print_clause(out, *c);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing.

namespace {

enum class Tok { Number, Ident, LParen, RParen, LBracket, RBracket, Comma, And, Or, Rel, Minus, Plus, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
  RelOp op = RelOp::Eq;
};

[[noreturn]] void fail(std::size_t offset, const std::string& message) {
  throw FormatError(message, "offset " + std::to_string(offset));
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    auto two = [&](std::string_view t) { return s.substr(i, 2) == t; };
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() &&
                                                         std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      double v = 0.0;
      auto res = std::from_chars(s.data() + i, s.data() + s.size(), v);
      if (res.ec != std::errc()) fail(start, "malformed number");
      i = static_cast<std::size_t>(res.ptr - s.data());
      if (i < s.size() && is_ident(s[i])) fail(start, "malformed number");
      out.push_back({Tok::Number, start, s.substr(start, i - start), v});
      continue;
    }
    if (is_ident_start(c)) {
      while (i < s.size() && is_ident(s[i])) ++i;
      out.push_back({Tok::Ident, start, s.substr(start, i - start)});
      continue;
    }
    if (two("&&")) {
      out.push_back({Tok::And, start, s.substr(i, 2)});
      i += 2;
    } else if (two("||")) {
      out.push_back({Tok::Or, start, s.substr(i, 2)});
      i += 2;
    } else if (two(">=") || two("<=") || two("==") || two("!=")) {
      Token t{Tok::Rel, start, s.substr(i, 2)};
      t.op = two(">=") ? RelOp::Ge : two("<=") ? RelOp::Le : two("==") ? RelOp::Eq : RelOp::Ne;
      out.push_back(t);
      i += 2;
    } else if (c == '>' || c == '<' || c == '=') {
      Token t{Tok::Rel, start, s.substr(i, 1)};
      t.op = c == '>' ? RelOp::Gt : c == '<' ? RelOp::Lt : RelOp::Eq;
      out.push_back(t);
      ++i;
    } else {
      Tok k;
      switch (c) {
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '[': k = Tok::LBracket; break;
        case ']': k = Tok::RBracket; break;
        case ',': k = Tok::Comma; break;
        case '-': k = Tok::Minus; break;
        case '+': k = Tok::Plus; break;
        default: fail(start, std::string("unexpected character '") + c + "'");
      }
      out.push_back({k, start, s.substr(i, 1)});
      ++i;
    }
  }
  out.push_back({Tok::End, s.size(), {}});
  return out;
}

enum class Sort { Scalar, Vector };

struct Typed {
  TermPtr term;
  Sort sort;
};

class Parser {
 public:
  Parser(std::string_view text, const std::map<std::string, Affine>& affine)
      : tokens_(lex(text)), affine_(affine) {}

  ClausePtr parse() {
    if (peek().kind == Tok::End) fail(peek().offset, "empty formula");
    auto c = parse_clause();
    if (peek().kind != Tok::End) fail(peek().offset, "unexpected '" + std::string(peek().text) + "'");
    return c;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      fail(peek().offset, std::string("expected ") + what +
                              (peek().kind == Tok::End ? " at end of formula"
                                                       : ", found '" + std::string(peek().text) + "'"));
    }
    return next();
  }

  ClausePtr parse_clause() {
    auto lhs = parse_conj();
    while (peek().kind == Tok::Or) {
      next();
      lhs = make_or(lhs, parse_conj());
    }
    return lhs;
  }

  ClausePtr parse_conj() {
    auto lhs = parse_group();
    while (peek().kind == Tok::And) {
      next();
      lhs = make_and(lhs, parse_group());
    }
    return lhs;
  }

  ClausePtr parse_group() {
    if (peek().kind == Tok::LParen) {
      next();
      auto c = parse_clause();
      expect(Tok::RParen, "')'");
      return c;
    }
    const std::size_t at = peek().offset;
    auto lhs = parse_term();
    const Token& rel = expect(Tok::Rel, "a relation");
    auto rhs = parse_term();
    if (lhs.sort != Sort::Scalar || rhs.sort != Sort::Scalar) {
      fail(at, "relation '" + std::string(rel.text) + "' needs scalar operands");
    }
    return make_prop(lhs.term, rel.op, rhs.term);
  }

  Typed parse_term() {
    auto t = parse_primary();
    while (peek().kind == Tok::LBracket) {
      const std::size_t at = next().offset;
      if (t.sort != Sort::Vector) fail(at, "indexing a scalar");
      const Token& n = expect(Tok::Number, "an index");
      if (n.number < 0 || n.number != std::floor(n.number) || n.text.find_first_of(".eE") != std::string_view::npos) {
        fail(n.offset, "index must be a non-negative integer");
      }
      expect(Tok::RBracket, "']'");
      t = {make_index(t.term, static_cast<std::size_t>(n.number)), Sort::Scalar};
    }
    return t;
  }

  double parse_signed_number() {
    double sign = 1.0;
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) {
      if (next().kind == Tok::Minus) sign = -1.0;
    }
    return sign * expect(Tok::Number, "a number").number;
  }

  Typed parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
      case Tok::Minus:
      case Tok::Plus: return {make_const(parse_signed_number()), Sort::Scalar};
      case Tok::LBracket: {
        next();
        std::vector<double> values{parse_signed_number()};
        while (peek().kind == Tok::Comma) {
          next();
          values.push_back(parse_signed_number());
        }
        expect(Tok::RBracket, "']'");
        return {make_const(Tensor::vector(std::move(values))), Sort::Vector};
      }
      case Tok::Ident: return parse_ident();
      default:
        fail(t.offset, t.kind == Tok::End ? "expected a term at end of formula"
                                          : "expected a term, found '" + std::string(t.text) + "'");
    }
  }

  Typed parse_ident() {
    const Token& id = next();
    const auto fn = builtin_from_name(id.text);
    if (peek().kind != Tok::LParen) {
      if (fn) fail(id.offset, "'" + std::string(id.text) + "' is a function and needs arguments");
      return {make_var(std::string(id.text)), Sort::Vector};
    }
    if (!fn) fail(id.offset, "unknown function '" + std::string(id.text) + "'");
    next();  // '('

    std::string affine;
    std::vector<Typed> args;
    if (*fn == Builtin::Linear) {
      const Token& name = expect(Tok::Ident, "the name of a linear map");
      affine = std::string(name.text);
      if (!affine_.count(affine)) fail(name.offset, "undeclared linear map '" + affine + "'");
      expect(Tok::Comma, "','");
    }
    if (peek().kind != Tok::RParen) {
      args.push_back(parse_term());
      while (peek().kind == Tok::Comma) {
        next();
        args.push_back(parse_term());
      }
    }
    const std::size_t close = expect(Tok::RParen, "')'").offset;
    const std::size_t given = args.size() + (*fn == Builtin::Linear ? 1 : 0);
    if (given != arity(*fn)) {
      fail(close, std::string(builtin_name(*fn)) + " takes " + std::to_string(arity(*fn)) +
                      " argument(s), got " + std::to_string(given));
    }
    Sort result = Sort::Vector;
    for (const auto& a : args) {
      if (*fn != Builtin::Id && a.sort != Sort::Vector) {
        fail(id.offset, std::string(builtin_name(*fn)) + " expects vector arguments");
      }
    }
    switch (*fn) {
      case Builtin::Id: result = args[0].sort; break;
      case Builtin::Model:
      case Builtin::Linear: result = Sort::Vector; break;
      default: result = Sort::Scalar;
    }
    std::vector<TermPtr> terms;
    for (auto& a : args) terms.push_back(std::move(a.term));
    return {make_apply(*fn, std::move(terms), std::move(affine)), result};
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const std::map<std::string, Affine>& affine_;
};

void collect_vars(const Term& t, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, VarTerm>) {
          if (std::find(out.begin(), out.end(), x.name) == out.end()) out.push_back(x.name);
        } else if constexpr (std::is_same_v<T, IndexTerm>) {
          collect_vars(*x.base, out);
        } else if constexpr (std::is_same_v<T, ApplyTerm>) {
          for (const auto& a : x.args) collect_vars(*a, out);
        }
      },
      t.node);
}

void collect_vars(const Clause& c, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Prop>) {
          collect_vars(*x.lhs, out);
          collect_vars(*x.rhs, out);
        } else {
          collect_vars(*x.lhs, out);
          collect_vars(*x.rhs, out);
        }
      },
      c.node);
}

}  // namespace

ClausePtr parse_clause(std::string_view text, const std::map<std::string, Affine>& affine) {
  return Parser(text, affine).parse();
}

Assertion parse_assertion(std::string_view pre, std::string_view post, std::map<std::string, Affine> affine) {
  Assertion a;
  a.affine = std::move(affine);
  try {
    a.pre = parse_clause(pre, a.affine);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), "pre");
  }
  try {
    a.post = parse_clause(post, a.affine);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), "post");
  }
  collect_vars(*a.pre, a.variables);
  collect_vars(*a.post, a.variables);
  return a;
}

std::vector<std::string> free_variables(const ClausePtr& c) {
  std::vector<std::string> out;
  collect_vars(*c, out);
  return out;
}

ClausePtr negate_to_nnf(const ClausePtr& c) {
  return std::visit(
      [](const auto& x) -> ClausePtr {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Prop>) {
          return make_prop(x.lhs, complement(x.op), x.rhs);
        } else if constexpr (std::is_same_v<T, AndClause>) {
          return make_or(negate_to_nnf(x.lhs), negate_to_nnf(x.rhs));
        } else {
          return make_and(negate_to_nnf(x.lhs), negate_to_nnf(x.rhs));
        }
      },
      c->node);
}

// ---------------------------------------------------------------------------
// Templates.

std::string_view template_kind_name(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::LocalRobustness: return "local robustness";
    case TemplateKind::GlobalRobustness: return "global robustness";
    case TemplateKind::LocalFairness: return "local fairness";
    case TemplateKind::GlobalFairness: return "global fairness";
  }
  return "?";
}

Assertion expand_template(const Template& sugar, const nn::Network& net) {
  const std::size_t n = net.feature_count();
  const bool local = sugar.kind == TemplateKind::LocalRobustness || sugar.kind == TemplateKind::LocalFairness;
  const bool fairness = sugar.kind == TemplateKind::LocalFairness || sugar.kind == TemplateKind::GlobalFairness;
  if (local) {
    if (!sugar.x0) throw FormatError(std::string(template_kind_name(sugar.kind)) + " needs x0");
    if (sugar.x0->size() != n) {
      throw FormatError("x0 has " + std::to_string(sugar.x0->size()) + " entries, model has " +
                        std::to_string(n) + " features");
    }
  }
  if (fairness) {
    if (sugar.sensitive.empty()) throw FormatError("fairness needs at least one sensitive feature");
    for (auto i : sugar.sensitive) {
      if (i >= n) {
        throw FormatError("sensitive feature " + std::to_string(i) + " out of range for " +
                          std::to_string(n) + " features");
      }
    }
  } else if (!(sugar.eps >= 0.0) || !std::isfinite(sugar.eps)) {
    throw FormatError("robustness radius must be a finite non-negative number");
  }

  const auto x = make_var("x");
  const auto y = make_var("y");
  auto label_of = [](const TermPtr& v) { return make_apply(Builtin::Label, {v}); };
  Builtin dist = sugar.distance == numeric::Distance::L0   ? Builtin::D0
                 : sugar.distance == numeric::Distance::L2 ? Builtin::D2
                                                           : Builtin::Di;
  Assertion a;
  switch (sugar.kind) {
    case TemplateKind::LocalRobustness: {
      const auto c = static_cast<double>(nn::label(net, *sugar.x0));
      a.variables = {"x"};
      a.pre = make_prop(make_apply(dist, {x, make_const(*sugar.x0)}), RelOp::Le, make_const(sugar.eps));
      a.post = make_prop(label_of(x), RelOp::Eq, make_const(c));
      break;
    }
    case TemplateKind::GlobalRobustness:
      a.variables = {"x", "y"};
      a.pre = make_prop(make_apply(dist, {x, y}), RelOp::Le, make_const(sugar.eps));
      a.post = make_prop(label_of(x), RelOp::Eq, label_of(y));
      break;
    case TemplateKind::LocalFairness: {
      const auto c = static_cast<double>(nn::label(net, *sugar.x0));
      const std::set<std::size_t> s(sugar.sensitive.begin(), sugar.sensitive.end());
      std::vector<ClausePtr> fixed, differs;
      for (std::size_t i = 0; i < n; ++i) {
        auto p = make_prop(make_index(x, i), s.count(i) ? RelOp::Ne : RelOp::Eq, make_const((*sugar.x0)[i]));
        (s.count(i) ? differs : fixed).push_back(std::move(p));
      }
      a.variables = {"x"};
      a.pre = fixed.empty() ? disjunction(differs) : make_and(conjunction(fixed), disjunction(differs));
      a.post = make_prop(label_of(x), RelOp::Eq, make_const(c));
      break;
    }
    case TemplateKind::GlobalFairness: {
      const std::set<std::size_t> s(sugar.sensitive.begin(), sugar.sensitive.end());
      std::vector<ClausePtr> fixed;
      for (std::size_t i = 0; i < n; ++i) {
        if (!s.count(i)) fixed.push_back(make_prop(make_index(x, i), RelOp::Eq, make_index(y, i)));
      }
      a.variables = {"x", "y"};
      // With every feature sensitive the precondition is vacuous.
      a.pre = fixed.empty() ? make_prop(make_const(0.0), RelOp::Eq, make_const(0.0)) : conjunction(fixed);
      a.post = make_prop(label_of(x), RelOp::Eq, label_of(y));
      break;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Evaluation.

ad::Var EvalContext::model_output(const TermPtr& arg, const Bindings& env) {
  const auto* v = std::get_if<VarTerm>(&arg->node);
  if (v) {
    auto it = outputs_.find(v->name);
    if (it != outputs_.end()) return it->second;
  }
  auto out = nn::network_forward(net_, evaluate_term(arg, env, *this));
  if (v) outputs_.emplace(v->name, out);
  return out;
}

const Affine& EvalContext::affine(const std::string& name) const {
  auto it = affine_.find(name);
  if (it == affine_.end()) throw EvaluationError("undeclared linear map '" + name + "'");
  return it->second;
}

ad::Var evaluate_term(const TermPtr& t, const Bindings& env, EvalContext& ctx) {
  return std::visit(
      [&](const auto& x) -> ad::Var {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstTerm>) {
          return ad::Tape::constant(x.value);
        } else if constexpr (std::is_same_v<T, VarTerm>) {
          auto it = env.find(x.name);
          if (it == env.end()) throw EvaluationError("unbound variable '" + x.name + "'");
          return it->second;
        } else if constexpr (std::is_same_v<T, IndexTerm>) {
          auto base = evaluate_term(x.base, env, ctx);
          if (x.index >= base.size()) {
            throw EvaluationError("index " + std::to_string(x.index) + " out of range for " +
                                  to_string(x.base) + " of size " + std::to_string(base.size()));
          }
          return ad::index(base, x.index);
        } else {
          switch (x.fn) {
            case Builtin::Id: return evaluate_term(x.args[0], env, ctx);
            case Builtin::Model: return ctx.model_output(x.args[0], env);
            case Builtin::Label:
            case Builtin::LabelMin: {
              auto out = ctx.model_output(x.args[0], env);
              auto mode = x.fn == Builtin::Label ? nn::LabelMode::ArgMax : nn::LabelMode::ArgMin;
              return ad::Tape::constant(static_cast<double>(nn::label_of(out.value(), mode)));
            }
            case Builtin::Linear: {
              const auto& f = ctx.affine(x.affine);
              auto in = evaluate_term(x.args[0], env, ctx);
              if (f.weights.rank() != 2 || in.size() != f.weights.shape()[0]) {
                throw EvaluationError("N(" + x.affine + ", .) expects " +
                                      std::to_string(f.weights.rank() == 2 ? f.weights.shape()[0] : 0) +
                                      " inputs, got " + std::to_string(in.size()));
              }
              return ad::add(ad::vecmat(in, ad::Tape::constant(f.weights)), ad::Tape::constant(f.bias));
            }
            case Builtin::D0:
            case Builtin::D2:
            case Builtin::Di: {
              auto a = ad::flatten(evaluate_term(x.args[0], env, ctx));
              auto b = ad::flatten(evaluate_term(x.args[1], env, ctx));
              if (a.size() != b.size()) {
                throw EvaluationError(std::string(builtin_name(x.fn)) + " of vectors of sizes " +
                                      std::to_string(a.size()) + " and " + std::to_string(b.size()));
              }
              auto kind = x.fn == Builtin::D0   ? numeric::Distance::L0
                          : x.fn == Builtin::D2 ? numeric::Distance::L2
                                                : numeric::Distance::Linf;
              return ad::distance(kind, a, b);
            }
          }
          throw EvaluationError("unknown function");
        }
      },
      t->node);
}

namespace {

double scalar_of(const ad::Var& v, const TermPtr& t) {
  if (v.size() != 1) {
    throw EvaluationError("'" + to_string(t) + "' has " + std::to_string(v.size()) + " entries, expected a scalar");
  }
  return v.value()[0];
}

}  // namespace

bool evaluate(const ClausePtr& c, const Bindings& env, EvalContext& ctx) {
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Prop>) {
          const double l = scalar_of(evaluate_term(x.lhs, env, ctx), x.lhs);
          const double r = scalar_of(evaluate_term(x.rhs, env, ctx), x.rhs);
          return compare(l, x.op, r);
        } else if constexpr (std::is_same_v<T, AndClause>) {
          return evaluate(x.lhs, env, ctx) && evaluate(x.rhs, env, ctx);
        } else {
          return evaluate(x.lhs, env, ctx) || evaluate(x.rhs, env, ctx);
        }
      },
      c->node);
}

bool evaluate(const ClausePtr& c, const Env& env, const nn::Network& net,
              const std::map<std::string, Affine>& affine) {
  Bindings bindings;
  for (const auto& [name, value] : env) bindings.emplace(name, ad::Tape::constant(value));
  EvalContext ctx(net, affine);
  return evaluate(c, bindings, ctx);
}

}  // namespace socrates::logic
