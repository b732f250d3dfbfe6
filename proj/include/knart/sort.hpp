#pragma once

// Solver sorts and their inference over ELM expressions.
//
// Declared symbols take their sort from the artifact; undeclared ones are
// typed from their uses, iterating to a fixpoint. Promotion is limited to
// Int <= Real; timestamps share the Int carrier but never unify with it.

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "knart/artifact.hpp"
#include "knart/elm.hpp"
#include "knart/error.hpp"

namespace knart {

class Sort {
 public:
  /// `Unknown` is a placeholder used while inference runs; it never appears
  /// in a finished SortEnv.
  enum class Kind { Bool, Int, Real, String, Timestamp, List, Uninterpreted, Option, Unknown };

  Sort() : kind_(Kind::Unknown) {}
  static Sort boolean() { return Sort(Kind::Bool); }
  static Sort integer() { return Sort(Kind::Int); }
  static Sort real() { return Sort(Kind::Real); }
  static Sort string() { return Sort(Kind::String); }
  static Sort timestamp() { return Sort(Kind::Timestamp); }
  static Sort unknown() { return Sort(Kind::Unknown); }
  static Sort uninterpreted(std::string name) {
    Sort s(Kind::Uninterpreted);
    s.name_ = std::move(name);
    return s;
  }
  static Sort list(Sort element) {
    if (element.kind() == Kind::Option) {
      throw Error(ErrorKind::SortConflict, "list elements cannot be nullable");
    }
    Sort s(Kind::List);
    s.inner_ = std::make_shared<const Sort>(std::move(element));
    return s;
  }
  static Sort option(Sort inner) {
    Sort s(Kind::Option);
    s.inner_ = std::make_shared<const Sort>(std::move(inner));
    return s;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const Sort& element() const { return *inner_; }

  bool is_numeric() const { return kind_ == Kind::Int || kind_ == Kind::Real; }
  bool is_ordered() const {
    return is_numeric() || kind_ == Kind::String || kind_ == Kind::Timestamp;
  }
  bool resolved() const {
    if (kind_ == Kind::Unknown) return false;
    return inner_ ? inner_->resolved() : true;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Bool: return "Bool";
      case Kind::Int: return "Int";
      case Kind::Real: return "Real";
      case Kind::String: return "String";
      case Kind::Timestamp: return "Timestamp";
      case Kind::List: return "List<" + inner_->describe() + ">";
      case Kind::Uninterpreted: return name_;
      case Kind::Option: return "Option<" + inner_->describe() + ">";
      case Kind::Unknown: return "?";
    }
    return "?";
  }

  friend bool operator==(const Sort& a, const Sort& b) {
    if (a.kind_ != b.kind_ || a.name_ != b.name_) return false;
    if (static_cast<bool>(a.inner_) != static_cast<bool>(b.inner_)) return false;
    return !a.inner_ || *a.inner_ == *b.inner_;
  }

 private:
  explicit Sort(Kind k) : kind_(k) {}
  Kind kind_;
  std::string name_;
  std::shared_ptr<const Sort> inner_;
};

/// Least sort compatible with both arguments. Lists and options are
/// invariant in their element sort.
inline Sort unify(const Sort& a, const Sort& b) {
  using K = Sort::Kind;
  if (a.kind() == K::Unknown) return b;
  if (b.kind() == K::Unknown) return a;
  if (a.is_numeric() && b.is_numeric()) return (a.kind() == K::Real || b.kind() == K::Real) ? Sort::real() : a;
  if (a.kind() == b.kind()) {
    switch (a.kind()) {
      case K::List:
      case K::Option: {
        Sort inner = unify(a.element(), b.element());
        if (a.element().resolved() && b.element().resolved() && !(a.element() == b.element())) {
          break;
        }
        return a.kind() == K::List ? Sort::list(inner) : Sort::option(inner);
      }
      case K::Uninterpreted:
        if (a.name() == b.name()) return a;
        break;
      default:
        return a;
    }
  }
  throw Error(ErrorKind::SortConflict, "cannot unify " + a.describe() + " with " + b.describe());
}

/// Maps artifact type names onto solver identifiers ([A-Za-z][A-Za-z0-9_]*),
/// replacing illegal characters with `_` and suffixing `_2`, `_3`, ... on
/// collision. Stable for the lifetime of the table.
class SortNameTable {
 public:
  const std::string& sanitize(const std::string& raw) {
    if (auto it = mapping_.find(raw); it != mapping_.end()) return it->second;
    std::string base;
    for (char c : raw) base.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    if (base.empty() || !std::isalpha(static_cast<unsigned char>(base[0]))) base.insert(0, "T");
    std::string candidate = base;
    for (int n = 2; reserved(candidate) || used_.contains(candidate); ++n) {
      candidate = base + "_" + std::to_string(n);
    }
    used_.insert(candidate);
    return mapping_.emplace(raw, candidate).first->second;
  }

 private:
  static bool reserved(const std::string& s) {
    static const std::set<std::string, std::less<>> words = {
        "Bool", "Int", "Real", "String", "List", "ElmList", "ElmOption", "Array", "Seq", "RegLan", "BitVec"};
    return words.contains(s);
  }

  std::map<std::string, std::string> mapping_;
  std::set<std::string> used_;
};

/// Typing context for code generation.
struct SortEnv {
  std::map<std::string, Sort> symbols;
  /// Referenced symbols: declared ones in artifact order, then the rest by
  /// first occurrence.
  std::vector<std::string> symbol_order;
  /// Uninterpreted sort names by first occurrence over `symbol_order`.
  std::vector<std::string> uninterpreted_sorts;
  std::map<std::string, Sort> node_sorts;

  const Sort& sort_of_node(const elm::ElmExpression& e) const {
    auto it = node_sorts.find(e.source_path());
    if (it == node_sorts.end()) {
      throw Error(ErrorKind::UndeclaredSymbol, "no sort recorded for node", e.source_path());
    }
    return it->second;
  }
};

namespace detail {

inline Sort sort_of_type_name(const std::string& type, SortNameTable& names) {
  if (type == "Integer") return Sort::integer();
  if (type == "Decimal") return Sort::real();
  if (type == "Boolean") return Sort::boolean();
  if (type == "String") return Sort::string();
  if (type == "DateTime") return Sort::timestamp();
  return Sort::uninterpreted(names.sanitize(type));
}

inline Sort replace_holes(const Sort& s, const Sort& fill) {
  switch (s.kind()) {
    case Sort::Kind::Unknown: return fill;
    case Sort::Kind::List: return Sort::list(replace_holes(s.element(), fill));
    case Sort::Kind::Option: return Sort::option(replace_holes(s.element(), fill));
    default: return s;
  }
}

inline void collect_uninterpreted(const Sort& s, std::vector<std::string>& out) {
  if (s.kind() == Sort::Kind::Uninterpreted) {
    if (std::find(out.begin(), out.end(), s.name()) == out.end()) out.push_back(s.name());
  } else if (s.kind() == Sort::Kind::List || s.kind() == Sort::Kind::Option) {
    collect_uninterpreted(s.element(), out);
  }
}

class Inference {
 public:
  Inference(const SymbolEnv& env, SortNameTable& names) : env_(env), names_(names) {}

  SortEnv run(std::span<const elm::ElmExpression> roots) {
    for (const auto& root : roots) {
      for (const auto& name : elm::collect_symbols(root)) seed(name);
    }
    iterate(roots);
    defaulting_ = true;
    iterate(roots);
    for (auto& [name, state] : symbols_) {
      if (!state.sort.resolved()) state.sort = replace_holes(state.sort, any_sort());
    }

    SortEnv out;
    record_ = &out.node_sorts;
    for (const auto& root : roots) {
      Sort s = synth(root, std::nullopt);
      if (s.kind() != Sort::Kind::Bool) {
        throw Error(ErrorKind::NonBooleanCondition, "condition has sort " + s.describe() + ", expected Bool",
                    root.source_path());
      }
    }

    for (const auto& info : env_.entries()) {
      if (symbols_.contains(info.name)) out.symbol_order.push_back(info.name);
    }
    for (const auto& name : first_seen_) {
      if (!env_.find(name)) out.symbol_order.push_back(name);
    }
    for (const auto& name : out.symbol_order) {
      out.symbols.emplace(name, symbols_.at(name).sort);
      detail::collect_uninterpreted(symbols_.at(name).sort, out.uninterpreted_sorts);
    }
    for (const auto& [path, sort] : out.node_sorts) detail::collect_uninterpreted(sort, out.uninterpreted_sorts);
    return out;
  }

 private:
  struct SymbolState {
    Sort sort;
    std::string origin;
    bool declared = false;
  };

  Sort any_sort() { return Sort::uninterpreted(names_.sanitize("Any")); }

  void seed(const std::string& name) {
    if (symbols_.contains(name)) return;
    first_seen_.push_back(name);
    SymbolState state;
    if (const SymbolInfo* info = env_.find(name)) {
      Sort base = sort_of_type_name(info->value_type_name, names_);
      if (info->cardinality == Cardinality::List) base = Sort::list(base);
      state.sort = info->nullable ? Sort::option(base) : base;
      state.origin = info->source_path;
      state.declared = true;
    }
    symbols_.emplace(name, std::move(state));
  }

  void iterate(std::span<const elm::ElmExpression> roots) {
    for (std::size_t pass = 0; pass <= symbols_.size() + 1; ++pass) {
      changed_ = false;
      for (const auto& root : roots) {
        if (synth(root, std::nullopt).kind() == Sort::Kind::Unknown) synth(root, Sort::boolean());
      }
      if (!changed_) return;
    }
  }

  /// The sort a reference to `name` has at use sites (options unwrap).
  Sort use_sort(const std::string& name) const {
    const Sort& s = symbols_.at(name).sort;
    return s.kind() == Sort::Kind::Option ? s.element() : s;
  }

  void constrain(const std::string& name, const Sort& expected, const std::string& path) {
    SymbolState& state = symbols_.at(name);
    Sort current = use_sort(name);
    Sort merged;
    try {
      merged = unify(current, expected);
    } catch (const Error&) {
      throw Error(ErrorKind::SortConflict,
                  "'" + name + "' is used as " + expected.describe() + " here but as " + current.describe() +
                      (state.origin.empty() ? "" : " at " + state.origin),
                  path, state.origin);
    }
    if (!state.declared && !(merged == current)) {
      state.sort = merged;
      state.origin = path;
      changed_ = true;
    }
  }

  void check(const Sort& actual, const std::optional<Sort>& expected, const elm::ElmExpression& e) {
    if (!expected || actual.kind() == Sort::Kind::Unknown) return;
    try {
      unify(actual, *expected);
    } catch (const Error&) {
      throw Error(ErrorKind::SortConflict,
                  elm::operator_name(e) + " has sort " + actual.describe() + " where " + expected->describe() +
                      " is required",
                  e.source_path());
    }
  }

  /// Joins operand sorts. A clash involving a symbol is reported at that
  /// use, with the place the symbol got its sort as the related path.
  Sort join(std::initializer_list<Sort> sorts, const elm::ElmExpression& e,
            std::initializer_list<const elm::ElmExpression*> operands = {}) {
    Sort j = Sort::unknown();
    for (const auto& s : sorts) {
      try {
        j = unify(j, s);
      } catch (const Error& err) {
        for (const auto* o : operands) {
          if (const auto* ref = o->as<elm::SymbolRef>()) {
            const SymbolState& st = symbols_.at(ref->name);
            throw Error(ErrorKind::SortConflict,
                        elm::operator_name(e) + ": " + err.detail() + "; '" + ref->name + "' is " +
                            use_sort(ref->name).describe() + (st.origin.empty() ? "" : " from " + st.origin),
                        o->source_path(), st.origin);
          }
        }
        throw Error(ErrorKind::SortConflict, elm::operator_name(e) + ": " + err.detail(), e.source_path());
      }
    }
    return j;
  }

  void require(bool ok, const Sort& s, const char* what, const elm::ElmExpression& e) {
    if (!ok) {
      throw Error(ErrorKind::SortConflict, elm::operator_name(e) + " needs " + what + " operands, got " + s.describe(),
                  e.source_path());
    }
  }

  Sort literal_sort(const elm::Value& v) {
    using K = elm::Value::Kind;
    switch (v.kind()) {
      case K::Bool: return Sort::boolean();
      case K::Int: return Sort::integer();
      case K::Real: return Sort::real();
      case K::Str: return Sort::string();
      case K::Timestamp: return Sort::timestamp();
      case K::List: {
        Sort elem = Sort::unknown();
        for (const auto& x : v.as_list()) elem = unify(elem, literal_sort(x));
        return Sort::list(elem);
      }
      case K::Opaque: return Sort::uninterpreted(names_.sanitize(v.as_opaque().sort_name));
    }
    return Sort::unknown();
  }

  Sort finish(const elm::ElmExpression& e, Sort result, const std::optional<Sort>& expected) {
    check(result, expected, e);
    if (record_) (*record_)[e.source_path()] = replace_holes(result, any_sort());
    return result;
  }

  Sort synth(const elm::ElmExpression& e, const std::optional<Sort>& expected) {
    using namespace elm;
    const auto& data = e.node().data;

    if (auto lit = std::get_if<Literal>(&data)) return finish(e, literal_sort(lit->value), expected);

    if (auto ref = std::get_if<SymbolRef>(&data)) {
      if (expected) constrain(ref->name, *expected, e.source_path());
      return finish(e, use_sort(ref->name), std::nullopt);
    }

    if (auto u = std::get_if<Unary>(&data)) {
      switch (u->op) {
        case UnaryOp::Not:
        case UnaryOp::IsTrue:
        case UnaryOp::IsFalse:
          synth(u->arg, Sort::boolean());
          return finish(e, Sort::boolean(), expected);
        case UnaryOp::IsNull:
          synth(u->arg, std::nullopt);
          return finish(e, Sort::boolean(), expected);
        case UnaryOp::Exists: {
          Sort s = synth(u->arg, Sort::list(Sort::unknown()));
          require(s.kind() == Sort::Kind::List || s.kind() == Sort::Kind::Unknown, s, "list", e);
          return finish(e, Sort::boolean(), expected);
        }
        case UnaryOp::Count: {
          Sort s = synth(u->arg, Sort::list(Sort::unknown()));
          require(s.kind() == Sort::Kind::List || s.kind() == Sort::Kind::Unknown, s, "list", e);
          return finish(e, Sort::integer(), expected);
        }
        case UnaryOp::Negate: {
          Sort j = synth(u->arg, std::nullopt);
          j = numeric_target(j, expected);
          require(j.kind() == Sort::Kind::Unknown || j.is_numeric(), j, "numeric", e);
          if (j.kind() != Sort::Kind::Unknown) synth(u->arg, j);
          return finish(e, j, expected);
        }
      }
    }

    if (auto b = std::get_if<Binary>(&data)) {
      switch (b->op) {
        case BinaryOp::Xor:
        case BinaryOp::Implies:
          synth(b->lhs, Sort::boolean());
          synth(b->rhs, Sort::boolean());
          return finish(e, Sort::boolean(), expected);
        case BinaryOp::Add:
        case BinaryOp::Subtract:
        case BinaryOp::Multiply:
        case BinaryOp::Divide:
        case BinaryOp::Modulo: {
          Sort j = join({synth(b->lhs, std::nullopt), synth(b->rhs, std::nullopt)}, e, {&b->lhs, &b->rhs});
          j = numeric_target(j, expected);
          require(j.kind() == Sort::Kind::Unknown || j.is_numeric(), j, "numeric", e);
          if (j.kind() != Sort::Kind::Unknown) {
            synth(b->lhs, j);
            synth(b->rhs, j);
          }
          if (b->op == BinaryOp::Divide) return finish(e, Sort::real(), expected);
          return finish(e, j, expected);
        }
        case BinaryOp::Equal:
        case BinaryOp::NotEqual:
        case BinaryOp::Greater:
        case BinaryOp::GreaterOrEqual:
        case BinaryOp::Less:
        case BinaryOp::LessOrEqual: {
          Sort j = join({synth(b->lhs, std::nullopt), synth(b->rhs, std::nullopt)}, e, {&b->lhs, &b->rhs});
          bool ordered = b->op != BinaryOp::Equal && b->op != BinaryOp::NotEqual;
          if (ordered && j.kind() == Sort::Kind::Unknown && defaulting_) j = Sort::integer();
          if (ordered) require(j.kind() == Sort::Kind::Unknown || j.is_ordered(), j, "ordered", e);
          if (j.kind() != Sort::Kind::Unknown) {
            synth(b->lhs, j);
            synth(b->rhs, j);
          }
          return finish(e, Sort::boolean(), expected);
        }
        case BinaryOp::StartsWith:
        case BinaryOp::EndsWith:
          synth(b->lhs, Sort::string());
          synth(b->rhs, Sort::string());
          return finish(e, Sort::boolean(), expected);
        case BinaryOp::DifferenceBetween:
          synth(b->lhs, Sort::timestamp());
          synth(b->rhs, Sort::timestamp());
          return finish(e, Sort::integer(), expected);
      }
    }

    if (auto n = std::get_if<Nary>(&data)) {
      Sort each = n->op == NaryOp::Concatenate ? Sort::string() : Sort::boolean();
      for (const auto& a : n->args) synth(a, each);
      return finish(e, each, expected);
    }

    const auto& in = std::get<IntervalTest>(data);
    Sort j = join({synth(in.value, std::nullopt), synth(in.low, std::nullopt), synth(in.high, std::nullopt)}, e,
                  {&in.value, &in.low, &in.high});
    if (j.kind() == Sort::Kind::Unknown && defaulting_) j = Sort::integer();
    require(j.kind() == Sort::Kind::Unknown || j.is_ordered(), j, "ordered", e);
    if (j.kind() != Sort::Kind::Unknown) {
      synth(in.value, j);
      synth(in.low, j);
      synth(in.high, j);
    }
    return finish(e, Sort::boolean(), expected);
  }

  /// Arithmetic operand sort: the operands' join, else the context's
  /// numeric expectation, else Int once defaulting.
  Sort numeric_target(const Sort& j, const std::optional<Sort>& expected) const {
    if (j.kind() != Sort::Kind::Unknown) return j;
    if (expected && expected->is_numeric()) return *expected;
    return defaulting_ ? Sort::integer() : j;
  }

  const SymbolEnv& env_;
  SortNameTable& names_;
  std::map<std::string, SymbolState> symbols_;
  std::vector<std::string> first_seen_;
  bool changed_ = false;
  bool defaulting_ = false;
  std::map<std::string, Sort>* record_ = nullptr;
};

}  // namespace detail

/// Sorts every symbol and node of `conditions` jointly, so a symbol shared
/// between conditions receives one sort. Throws SortConflict or
/// NonBooleanCondition.
inline SortEnv infer_sorts(std::span<const elm::ElmExpression> conditions, const SymbolEnv& env,
                           SortNameTable& names) {
  return detail::Inference(env, names).run(conditions);
}

inline SortEnv infer_sorts(std::span<const elm::ElmExpression> conditions, const SymbolEnv& env) {
  SortNameTable names;
  return infer_sorts(conditions, env, names);
}

inline SortEnv infer_sorts(const elm::ElmExpression& condition, const SymbolEnv& env) {
  return infer_sorts(std::span<const elm::ElmExpression>(&condition, 1), env);
}

}  // namespace knart
