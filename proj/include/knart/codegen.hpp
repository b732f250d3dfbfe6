#pragma once

// SMT-LIB v2 script generation from sorted ELM conditions.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "knart/elm.hpp"
#include "knart/error.hpp"
#include "knart/sexpr.hpp"
#include "knart/sort.hpp"

namespace knart::smt {

/// PaperCompat uses the built-in `(List T)` sort and a quantified
/// `elm_exists` helper; Portable declares its own list datatype.
enum class Mode { PaperCompat, Portable };

inline std::string_view to_string(Mode m) { return m == Mode::PaperCompat ? "paper" : "portable"; }

struct SetOption {
  std::string key;
  std::string value;
};
struct SetLogic {
  std::string logic;
};
struct DeclareSort {
  std::string name;
};
struct DeclareConst {
  std::string name;
  std::string sort_text;
};
struct DefineFun {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;
  std::string result_sort;
  std::string body;
};
struct DeclareDatatype {
  std::string text;
};
/// `label` is always set and identifies the assertion in the script's
/// index; `name` is emitted only when unsat cores are requested.
struct Assert {
  std::string term;
  std::optional<std::string> name;
  std::string label;
};
struct CheckSat {};

using SmtCommand = std::variant<SetOption, SetLogic, DeclareSort, DeclareConst, DefineFun, DeclareDatatype, Assert, CheckSat>;

struct SpecConstraint {
  std::string name;
  std::string term_text;
};

struct AssertionInfo {
  std::string name;
  std::string condition_id;
  std::string source_path;
  bool is_spec = false;
  /// ELM prefix form for conditions, raw term text for constraints.
  std::string rendered;
};

struct DeclaredSymbol {
  std::string elm_name;
  std::string smt_name;
  Sort sort;
};

struct SmtScript {
  std::vector<SmtCommand> commands;
  Mode mode = Mode::Portable;
  std::vector<AssertionInfo> assertions;
  std::vector<DeclaredSymbol> symbols;

  const AssertionInfo* find_assertion(std::string_view name) const {
    for (const auto& a : assertions) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }
  const DeclaredSymbol* find_smt_symbol(std::string_view smt_name) const {
    for (const auto& s : symbols) {
      if (s.smt_name == smt_name) return &s;
    }
    return nullptr;
  }
};

struct ConditionInput {
  std::string id;
  std::string source_path;
  elm::ElmExpression expr;
  /// Fixed assertion number; 0 continues the running count.
  std::size_t ordinal = 0;
};

struct CodegenOptions {
  Mode mode = Mode::Portable;
  bool want_cores = true;
  std::optional<std::string> logic;
  /// Ordinal of the first generated assertion name (`assertion-N`).
  std::size_t first_ordinal = 1;
};

inline constexpr std::string_view kListDatatype =
    "(declare-datatypes ((ElmList 1)) ((par (T) ((nil) (cons (hd T) (tl (ElmList T)))))))";
inline constexpr std::string_view kOptionDatatype =
    "(declare-datatypes ((ElmOption 1)) ((par (T) ((none) (some (some_value T))))))";

/// True for names of the form `assertion-<digits>`.
inline bool is_generated_assertion_name(std::string_view s) {
  constexpr std::string_view prefix = "assertion-";
  if (!s.starts_with(prefix) || s.size() == prefix.size()) return false;
  for (char c : s.substr(prefix.size())) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Constraint files

/// Parses `(constraint <name> <term>)` forms; `;` starts a comment.
inline std::vector<SpecConstraint> parse_spec(std::string_view text) {
  std::vector<sexpr::SExpr> forms;
  try {
    forms = sexpr::parse_all(text);
  } catch (const Error& e) {
    throw Error(ErrorKind::SpecFormat, e.detail());
  }
  std::vector<SpecConstraint> out;
  std::set<std::string> names;
  for (const auto& f : forms) {
    if (!f.is_list() || f.children.size() != 3 || !f.children[0].is_atom("constraint") ||
        !f.children[1].is_atom()) {
      throw Error(ErrorKind::SpecFormat, "expected (constraint <name> <term>), got " + sexpr::to_string(f));
    }
    std::string name = f.children[1].text;
    if (is_generated_assertion_name(name)) {
      throw Error(ErrorKind::SpecFormat, "constraint name '" + name + "' collides with generated assertion names");
    }
    if (!names.insert(name).second) throw Error(ErrorKind::SpecFormat, "duplicate constraint name '" + name + "'");
    out.push_back({name, sexpr::to_string(f.children[2])});
  }
  return out;
}

namespace detail {

inline bool is_numeral_atom(std::string_view s) {
  if (s.empty()) return false;
  if (s.starts_with("#x") || s.starts_with("#b")) return true;
  return std::isdigit(static_cast<unsigned char>(s[0])) != 0;
}

/// Rewrites the free symbols of a constraint term through `rename`,
/// collecting any that `rename` does not know. Function heads, binders,
/// sort annotations and literals are left alone.
inline void rewrite_free(sexpr::SExpr& term, const std::map<std::string, std::string>& rename,
                         std::set<std::string>& bound, std::vector<std::string>& unknown) {
  static const std::set<std::string, std::less<>> constants = {"true", "false", "nil", "none"};
  if (term.is_string()) return;
  if (term.is_atom()) {
    const std::string& t = term.text;
    if (term.quoted || (!is_numeral_atom(t) && !t.starts_with(':') && !constants.contains(t))) {
      if (bound.contains(t)) return;
      auto it = rename.find(t);
      if (it == rename.end()) {
        unknown.push_back(t);
        return;
      }
      term.quoted = it->second.starts_with('|');
      term.text = term.quoted ? it->second.substr(1, it->second.size() - 2) : it->second;
    }
    return;
  }
  if (term.children.empty()) return;
  const auto& head = term.children[0];
  if (head.is_atom("_")) return;
  if (head.is_atom("as")) {
    if (term.children.size() > 1) rewrite_free(term.children[1], rename, bound, unknown);
    return;
  }
  if ((head.is_atom("forall") || head.is_atom("exists") || head.is_atom("let")) && term.children.size() == 3) {
    std::set<std::string> inner = bound;
    for (auto& binding : term.children[1].children) {
      if (binding.is_list() && !binding.children.empty()) {
        if (head.is_atom("let") && binding.children.size() == 2) {
          rewrite_free(binding.children[1], rename, bound, unknown);
        }
        inner.insert(binding.children[0].text);
      }
    }
    rewrite_free(term.children[2], rename, inner, unknown);
    return;
  }
  for (std::size_t i = 1; i < term.children.size(); ++i) rewrite_free(term.children[i], rename, bound, unknown);
  if (head.is_list()) rewrite_free(term.children[0], rename, bound, unknown);
}

}  // namespace detail

/// Free symbols of a constraint term (everything that must be declared).
inline std::vector<std::string> free_symbols(const SpecConstraint& c) {
  sexpr::SExpr term = sexpr::parse_one(c.term_text);
  std::set<std::string> bound;
  std::vector<std::string> unknown;
  detail::rewrite_free(term, {}, bound, unknown);
  std::vector<std::string> out;
  for (auto& s : unknown) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Terms

namespace detail {

inline bool reserved_symbol(std::string_view s) {
  static const std::set<std::string, std::less<>> words = {
      "and", "or", "not", "xor", "=>", "=", "distinct", "ite", "true", "false", "let", "forall", "exists", "as",
      "par", "match", "_", "!", "+", "-", "*", "/", "div", "mod", "abs", "to_real", "to_int", "is_int", "<", "<=",
      ">", ">=", "head", "tail", "insert", "nil", "cons", "hd", "tl", "none", "some", "some_value", "is", "select",
      "store", "str.++", "str.len", "str.<", "str.<=", "str.prefixof", "str.suffixof", "str.contains", "str.at",
      "str.substr", "str.replace", "str.indexof", "str.to_int", "str.from_int", "bag", "set", "model"};
  auto helper = [](std::string_view n) {
    if (n == "elm_exists") return true;
    constexpr std::string_view prefix = "elm_exists_";
    if (!n.starts_with(prefix) || n.size() == prefix.size()) return false;
    auto digits = n.substr(prefix.size());
    return digits != "1" && digits[0] != '0' &&
           std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  return words.contains(s) || helper(s) || is_generated_assertion_name(s) || s.starts_with("@") ||
         s.starts_with(".");
}

/// Assigns SMT-LIB names to ELM symbols: names that are legal simple
/// symbols and not reserved are kept; others are made legal (quoted when
/// needed) and suffixed until unique.
class SymbolNamer {
 public:
  const std::string& name(const std::string& elm_name) {
    if (auto it = names_.find(elm_name); it != names_.end()) return it->second;
    std::string base = elm_name;
    for (auto& c : base) {
      if (c == '|' || c == '\\') c = '_';
    }
    if (base.empty()) base = "_";
    // Helper names are elm_exists_<n> with n >= 2, so a `_1` stem is never reserved.
    std::string stem = reserved_symbol(base) ? base + "_1" : base;
    std::string candidate = stem;
    for (int n = 2; used_.contains(candidate); ++n) candidate = stem + "_" + std::to_string(n);
    used_.insert(candidate);
    return names_.emplace(elm_name, sexpr::detail::simple_symbol(candidate) ? candidate : "|" + candidate + "|")
        .first->second;
  }

 private:
  std::map<std::string, std::string> names_;
  std::set<std::string> used_;
};

inline std::string int_text(const elm::Integer& i) { return i < 0 ? "(- " + elm::Integer(-i).str() + ")" : i.str(); }

inline std::string real_text(const elm::Rational& r) {
  elm::Integer num = boost::multiprecision::numerator(r);
  elm::Integer den = boost::multiprecision::denominator(r);
  bool negative = num < 0;
  if (negative) num = -num;
  std::string body = den == 1 ? num.str() + ".0" : "(/ " + num.str() + ".0 " + den.str() + ".0)";
  return negative ? "(- " + body + ")" : body;
}

class Translator {
 public:
  Translator(const SortEnv& env, Mode mode, const std::map<std::string, std::string>& names,
             const std::map<std::string, std::string>& exists_helpers)
      : env_(env), mode_(mode), names_(names), exists_helpers_(exists_helpers) {}

  std::string sort_text(const Sort& s) const {
    switch (s.kind()) {
      case Sort::Kind::Bool: return "Bool";
      case Sort::Kind::Int:
      case Sort::Kind::Timestamp: return "Int";
      case Sort::Kind::Real: return "Real";
      case Sort::Kind::String: return "String";
      case Sort::Kind::List:
        return (mode_ == Mode::PaperCompat ? "(List " : "(ElmList ") + sort_text(s.element()) + ")";
      case Sort::Kind::Option: return "(ElmOption " + sort_text(s.element()) + ")";
      case Sort::Kind::Uninterpreted: return s.name();
      case Sort::Kind::Unknown: break;
    }
    throw Error(ErrorKind::TypeMismatch, "unresolved sort");
  }

  std::string term(const elm::ElmExpression& e) const {
    using namespace elm;
    const auto& data = e.node().data;

    if (auto lit = std::get_if<Literal>(&data)) return value(lit->value, sort_of(e), e);

    if (auto ref = std::get_if<SymbolRef>(&data)) {
      std::string n = symbol(ref->name, e);
      return is_option(ref->name) ? "(some_value " + n + ")" : n;
    }

    if (auto u = std::get_if<Unary>(&data)) {
      switch (u->op) {
        case UnaryOp::Not: return "(not " + term(u->arg) + ")";
        case UnaryOp::Negate: return "(- " + term(u->arg) + ")";
        case UnaryOp::IsTrue: return "(= " + term(u->arg) + " true)";
        case UnaryOp::IsFalse: return "(= " + term(u->arg) + " false)";
        case UnaryOp::IsNull:
          if (auto r = u->arg.as<SymbolRef>(); r && is_option(r->name)) {
            return "((_ is none) " + symbol(r->name, u->arg) + ")";
          }
          return "false";
        case UnaryOp::Exists: {
          std::string arg = term(u->arg);
          if (mode_ == Mode::Portable) return "(not ((_ is nil) " + arg + "))";
          auto it = exists_helpers_.find(sort_text(sort_of(u->arg)));
          return "(" + it->second + " " + arg + ")";
        }
        case UnaryOp::Count:
          throw unsupported(e, "Count is an aggregation operator; aggregation has no SMT counterpart here");
      }
    }

    if (auto b = std::get_if<Binary>(&data)) {
      switch (b->op) {
        case BinaryOp::Xor: return "(xor " + term(b->lhs) + " " + term(b->rhs) + ")";
        case BinaryOp::Implies: return "(=> " + term(b->lhs) + " " + term(b->rhs) + ")";
        case BinaryOp::Add: return arith("+", e, b->lhs, b->rhs);
        case BinaryOp::Subtract: return arith("-", e, b->lhs, b->rhs);
        case BinaryOp::Multiply: return arith("*", e, b->lhs, b->rhs);
        case BinaryOp::Divide:
          return "(/ " + as_sort(b->lhs, Sort::real()) + " " + as_sort(b->rhs, Sort::real()) + ")";
        case BinaryOp::Modulo: return modulo(e, b->lhs, b->rhs);
        case BinaryOp::Equal: return compare("=", b->lhs, b->rhs);
        case BinaryOp::NotEqual: return compare("distinct", b->lhs, b->rhs);
        case BinaryOp::Greater: return compare(">", b->lhs, b->rhs);
        case BinaryOp::GreaterOrEqual: return compare(">=", b->lhs, b->rhs);
        case BinaryOp::Less: return compare("<", b->lhs, b->rhs);
        case BinaryOp::LessOrEqual: return compare("<=", b->lhs, b->rhs);
        case BinaryOp::StartsWith: return "(str.prefixof " + term(b->rhs) + " " + term(b->lhs) + ")";
        case BinaryOp::EndsWith: return "(str.suffixof " + term(b->rhs) + " " + term(b->lhs) + ")";
        case BinaryOp::DifferenceBetween: {
          auto divisor = precision_divisor(*b->precision);
          if (!divisor) {
            throw unsupported(e, "DifferenceBetween at " + std::string(to_string(*b->precision)) +
                                     " precision depends on calendar arithmetic and is not modeled");
          }
          std::string diff = "(- " + term(b->rhs) + " " + term(b->lhs) + ")";
          return *divisor == 1 ? diff : "(div " + diff + " " + std::to_string(*divisor) + ")";
        }
      }
    }

    if (auto n = std::get_if<Nary>(&data)) {
      std::string head = n->op == NaryOp::And ? "and" : (n->op == NaryOp::Or ? "or" : "str.++");
      std::string out = "(" + head;
      for (const auto& a : n->args) out += " " + term(a);
      return out + ")";
    }

    const auto& in = std::get<IntervalTest>(data);
    Sort j = operand_sort({&in.value, &in.low, &in.high});
    std::string v = as_sort(in.value, j);
    return "(and " + ordered(in.low_closed ? ">=" : ">", v, as_sort(in.low, j), j) + " " +
           ordered(in.high_closed ? "<=" : "<", v, as_sort(in.high, j), j) + ")";
  }

 private:
  const Sort& sort_of(const elm::ElmExpression& e) const { return env_.sort_of_node(e); }

  bool is_option(const std::string& name) const {
    auto it = env_.symbols.find(name);
    return it != env_.symbols.end() && it->second.kind() == Sort::Kind::Option;
  }

  std::string symbol(const std::string& name, const elm::ElmExpression& e) const {
    auto it = names_.find(name);
    if (it == names_.end()) {
      throw Error(ErrorKind::UndeclaredSymbol, "'" + name + "' has no declaration", e.source_path());
    }
    return it->second;
  }

  Error unsupported(const elm::ElmExpression& e, const std::string& why) const {
    elm::Category c = *elm::category_of(e);
    return Error(ErrorKind::UnsupportedOperator,
                 why + " (category " + std::string(elm::to_string(c)) + ", support " +
                     std::string(elm::to_string(elm::support_of(c))) + ")",
                 e.source_path())
        .with_category(std::string(elm::to_string(c)));
  }

  std::string value(const elm::Value& v, const Sort& s, const elm::ElmExpression& e) const {
    using K = elm::Value::Kind;
    switch (v.kind()) {
      case K::Bool: return v.as_bool() ? "true" : "false";
      case K::Int: return int_text(v.as_int());
      case K::Real: return real_text(v.as_real());
      case K::Str: return sexpr::quote_string(v.as_string());
      case K::Timestamp: return int_text(elm::Integer(v.as_timestamp().epoch_ms));
      case K::List: {
        const Sort& elem = s.element();
        std::string out = "(as nil " + sort_text(s) + ")";
        const auto& xs = v.as_list();
        for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
          std::string x = value(*it, elem, e);
          if (elem.kind() == Sort::Kind::Real && it->kind() == K::Int) x = "(to_real " + x + ")";
          out = mode_ == Mode::PaperCompat ? "(insert " + x + " " + out + ")" : "(cons " + x + " " + out + ")";
        }
        return out;
      }
      case K::Opaque: break;
    }
    throw Error(ErrorKind::UnsupportedOperator, "opaque literals have no SMT-LIB spelling", e.source_path())
        .with_category("Miscellaneous");
  }

  /// Coerces an Int-sorted operand into a Real context.
  std::string as_sort(const elm::ElmExpression& e, const Sort& target) const {
    if (target.kind() != Sort::Kind::Real || sort_of(e).kind() != Sort::Kind::Int) return term(e);
    if (const auto* lit = e.as<elm::Literal>(); lit && lit->value.kind() == elm::Value::Kind::Int) {
      return real_text(elm::Rational(lit->value.as_int()));
    }
    return "(to_real " + term(e) + ")";
  }

  Sort operand_sort(std::initializer_list<const elm::ElmExpression*> xs) const {
    Sort j = Sort::unknown();
    for (const auto* x : xs) j = unify(j, sort_of(*x));
    return j;
  }

  std::string arith(const char* op, const elm::ElmExpression& e, const elm::ElmExpression& a,
                    const elm::ElmExpression& b) const {
    const Sort& s = sort_of(e);
    return std::string("(") + op + " " + as_sort(a, s) + " " + as_sort(b, s) + ")";
  }

  /// ELM Modulo truncates (the result takes the dividend's sign); SMT-LIB
  /// `mod` is Euclidean, so negative dividends are folded explicitly.
  std::string modulo(const elm::ElmExpression& e, const elm::ElmExpression& a, const elm::ElmExpression& b) const {
    const Sort& s = sort_of(e);
    std::string x = as_sort(a, s), y = as_sort(b, s);
    if (s.kind() == Sort::Kind::Int) {
      return "(ite (>= " + x + " 0) (mod " + x + " " + y + ") (- (mod (- " + x + ") " + y + ")))";
    }
    std::string q = "(/ " + x + " " + y + ")";
    std::string trunc = "(ite (>= " + q + " 0.0) (to_real (to_int " + q + ")) (- (to_real (to_int (- " + q + ")))))";
    return "(- " + x + " (* " + y + " " + trunc + "))";
  }

  std::string ordered(const std::string& op, const std::string& a, const std::string& b, const Sort& s) const {
    if (s.kind() == Sort::Kind::String) {
      if (op == "<") return "(str.< " + a + " " + b + ")";
      if (op == "<=") return "(str.<= " + a + " " + b + ")";
      if (op == ">") return "(str.< " + b + " " + a + ")";
      if (op == ">=") return "(str.<= " + b + " " + a + ")";
    }
    return "(" + op + " " + a + " " + b + ")";
  }

  std::string compare(const std::string& op, const elm::ElmExpression& a, const elm::ElmExpression& b) const {
    Sort j = operand_sort({&a, &b});
    return ordered(op, as_sort(a, j), as_sort(b, j), j);
  }

  const SortEnv& env_;
  Mode mode_;
  const std::map<std::string, std::string>& names_;
  const std::map<std::string, std::string>& exists_helpers_;
};

inline bool contains_kind(const Sort& s, Sort::Kind k) {
  if (s.kind() == k) return true;
  return (s.kind() == Sort::Kind::List || s.kind() == Sort::Kind::Option) && contains_kind(s.element(), k);
}

inline void collect_lists(const Sort& s, std::vector<Sort>& out) {
  if (s.kind() == Sort::Kind::List || s.kind() == Sort::Kind::Option) collect_lists(s.element(), out);
  if (s.kind() == Sort::Kind::List && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
}

inline void exists_argument_sorts(const elm::ElmExpression& e, const SortEnv& env, std::vector<Sort>& out) {
  if (auto u = e.as<elm::Unary>(); u && u->op == elm::UnaryOp::Exists) collect_lists(env.sort_of_node(u->arg), out);
  elm::for_each_child(e, [&](const elm::ElmExpression& c) { exists_argument_sorts(c, env, out); });
}

}  // namespace detail

/// Translates one sorted expression to an SMT-LIB term using the script's
/// symbol names. Throws UnsupportedOperator, UndeclaredSymbol.
inline std::string translate_term(const elm::ElmExpression& expr, const SortEnv& env, Mode mode) {
  detail::SymbolNamer namer;
  std::map<std::string, std::string> names;
  for (const auto& n : env.symbol_order) names.emplace(n, namer.name(n));
  std::map<std::string, std::string> helpers;
  if (mode == Mode::PaperCompat) {
    std::vector<Sort> lists;
    detail::exists_argument_sorts(expr, env, lists);
    detail::Translator probe(env, mode, names, helpers);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      helpers.emplace(probe.sort_text(lists[i]), i == 0 ? "elm_exists" : "elm_exists_" + std::to_string(i + 1));
    }
  }
  return detail::Translator(env, mode, names, helpers).term(expr);
}

/// Builds the complete script: options, declarations, helpers, one
/// assertion per condition, then the constraints, then `(check-sat)`.
/// Conditions share `env`, so a symbol used by several conditions is
/// declared once.
inline SmtScript build_script(std::span<const ConditionInput> conditions, const SortEnv& env,
                              std::span<const SpecConstraint> spec, const CodegenOptions& options) {
  SmtScript script;
  script.mode = options.mode;

  detail::SymbolNamer namer;
  std::map<std::string, std::string> names;
  for (const auto& n : env.symbol_order) {
    names.emplace(n, namer.name(n));
    script.symbols.push_back({n, names.at(n), env.symbols.at(n)});
  }
  for (const auto& c : conditions) {
    for (const auto& s : elm::collect_symbols(c.expr)) {
      if (!names.contains(s)) {
        throw Error(ErrorKind::UndeclaredSymbol, "'" + s + "' has no sort", c.source_path);
      }
    }
  }

  // Every sort mentioned anywhere, for datatype and helper emission.
  std::vector<Sort> lists;
  bool need_option = false;
  for (const auto& [name, sort] : env.symbols) need_option = need_option || detail::contains_kind(sort, Sort::Kind::Option);
  for (const auto& n : env.symbol_order) detail::collect_lists(env.symbols.at(n), lists);
  std::vector<Sort> exists_lists;
  for (const auto& c : conditions) detail::exists_argument_sorts(c.expr, env, exists_lists);
  for (const auto& s : exists_lists) {
    if (std::find(lists.begin(), lists.end(), s) == lists.end()) lists.push_back(s);
  }
  bool any_list = !lists.empty();
  for (const auto& [path, sort] : env.node_sorts) any_list = any_list || detail::contains_kind(sort, Sort::Kind::List);

  std::map<std::string, std::string> helpers;
  detail::Translator t(env, options.mode, names, helpers);

  if (options.want_cores) script.commands.push_back(SetOption{":produce-unsat-cores", "true"});
  if (options.logic) script.commands.push_back(SetLogic{*options.logic});
  for (const auto& s : env.uninterpreted_sorts) script.commands.push_back(DeclareSort{s});
  if (options.mode == Mode::Portable && any_list) script.commands.push_back(DeclareDatatype{std::string(kListDatatype)});
  if (need_option) script.commands.push_back(DeclareDatatype{std::string(kOptionDatatype)});
  for (const auto& sym : script.symbols) script.commands.push_back(DeclareConst{sym.smt_name, t.sort_text(sym.sort)});

  if (options.mode == Mode::PaperCompat) {
    std::size_t n = 0;
    for (const auto& s : lists) {
      std::string text = t.sort_text(s);
      if (helpers.contains(text)) continue;
      std::string name = n == 0 ? "elm_exists" : "elm_exists_" + std::to_string(n + 1);
      ++n;
      helpers.emplace(text, name);
      std::string elem = t.sort_text(s.element());
      script.commands.push_back(DefineFun{name, {{"lst", text}}, "Bool",
                                          "(ite (exists ((x " + elem + ")) (= x (head lst))) true false)"});
    }
  }

  std::size_t ordinal = options.first_ordinal;
  for (const auto& c : conditions) {
    if (c.ordinal) ordinal = c.ordinal;
    std::string label = "assertion-" + std::to_string(ordinal++);
    std::string body = t.term(c.expr);
    if (options.mode == Mode::PaperCompat) body = "(= true " + body + ")";
    script.commands.push_back(Assert{body, options.want_cores ? std::optional(label) : std::nullopt, label});
    script.assertions.push_back({label, c.id, c.source_path, false, elm::to_prefix(c.expr)});
  }

  for (const auto& constraint : spec) {
    if (script.find_assertion(constraint.name)) {
      throw Error(ErrorKind::SpecFormat, "constraint name '" + constraint.name + "' is already in use");
    }
    sexpr::SExpr term;
    try {
      term = sexpr::parse_one(constraint.term_text);
    } catch (const Error& e) {
      throw Error(ErrorKind::SpecFormat, "constraint '" + constraint.name + "': " + e.detail());
    }
    std::set<std::string> bound;
    std::vector<std::string> unknown;
    detail::rewrite_free(term, names, bound, unknown);
    if (!unknown.empty()) {
      throw Error(ErrorKind::UndeclaredSymbol,
                  "constraint '" + constraint.name + "' mentions undeclared symbol '" + unknown.front() + "'");
    }
    script.commands.push_back(Assert{sexpr::to_string(term),
                                     options.want_cores ? std::optional(constraint.name) : std::nullopt,
                                     constraint.name});
    script.assertions.push_back({constraint.name, "", "", true, constraint.term_text});
  }

  script.commands.push_back(CheckSat{});
  return script;
}

inline std::string render(const SmtCommand& command) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SetOption>) {
          return "(set-option " + c.key + " " + c.value + ")";
        } else if constexpr (std::is_same_v<T, SetLogic>) {
          return "(set-logic " + c.logic + ")";
        } else if constexpr (std::is_same_v<T, DeclareSort>) {
          return "(declare-sort " + c.name + ")";
        } else if constexpr (std::is_same_v<T, DeclareConst>) {
          return "(declare-const " + c.name + " " + c.sort_text + ")";
        } else if constexpr (std::is_same_v<T, DefineFun>) {
          std::string params;
          for (const auto& [n, s] : c.params) params += (params.empty() ? "(" : " (") + n + " " + s + ")";
          return "(define-fun " + c.name + " (" + params + ") " + c.result_sort + " " + c.body + ")";
        } else if constexpr (std::is_same_v<T, DeclareDatatype>) {
          return c.text;
        } else if constexpr (std::is_same_v<T, Assert>) {
          return c.name ? "(assert (! " + c.term + " :named " + *c.name + "))" : "(assert " + c.term + ")";
        } else {
          return "(check-sat)";
        }
      },
      command);
}

/// One command per line, LF endings. PaperCompat declares sorts without
/// an arity, as z3 accepts; Portable spells out `0`.
inline std::string render(const SmtScript& script) {
  std::string out;
  for (const auto& c : script.commands) {
    std::string line = render(c);
    if (script.mode == Mode::Portable && std::holds_alternative<DeclareSort>(c)) {
      line.insert(line.size() - 1, " 0");
    }
    out += line;
    out += '\n';
  }
  return out;
}

/// Keeps every declaration and definition but only the assertions named in
/// `core`.
inline SmtScript restrict_to_core(const SmtScript& script, std::span<const std::string> core) {
  SmtScript out = script;
  out.commands.clear();
  out.assertions.clear();
  auto in_core = [&](const std::string& label) { return std::find(core.begin(), core.end(), label) != core.end(); };
  for (const auto& c : script.commands) {
    if (auto a = std::get_if<Assert>(&c); a && !in_core(a->label)) continue;
    out.commands.push_back(c);
  }
  for (const auto& a : script.assertions) {
    if (in_core(a.name)) out.assertions.push_back(a);
  }
  return out;
}

}  // namespace knart::smt
