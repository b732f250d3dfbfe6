#pragma once

// ELM expression logic: values, the supported operator set, the immutable
// expression tree, its prefix-text debug format, and the XML front end.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "knart/error.hpp"
#include "knart/sexpr.hpp"
#include "knart/xml.hpp"

namespace knart::elm {

inline constexpr std::string_view kElmNamespace = "urn:hl7-org:elm:r1";
inline constexpr std::string_view kElmTypesNamespace = "urn:hl7-org:elm-types:r1";

// ---------------------------------------------------------------------------
// Values

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct Timestamp {
  std::int64_t epoch_ms = 0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct Opaque {
  std::string sort_name;
  std::int64_t tag = 0;
  friend bool operator==(const Opaque&, const Opaque&) = default;
};

class Value;

struct ValueList {
  std::vector<Value> elements;
};

class Value {
 public:
  enum class Kind { Bool, Int, Real, Str, Timestamp, List, Opaque };
  using Storage = std::variant<bool, Integer, Rational, std::string, Timestamp, ValueList, Opaque>;

  Value() : data_(false) {}
  static Value boolean(bool b) { return Value(Storage(std::in_place_index<0>, b)); }
  static Value integer(Integer i) { return Value(Storage(std::in_place_index<1>, std::move(i))); }
  static Value real(Rational r) { return Value(Storage(std::in_place_index<2>, std::move(r))); }
  static Value string(std::string s) { return Value(Storage(std::in_place_index<3>, std::move(s))); }
  static Value timestamp(std::int64_t ms) { return Value(Storage(std::in_place_index<4>, Timestamp{ms})); }
  static Value list(std::vector<Value> elements) {
    return Value(Storage(std::in_place_index<5>, ValueList{std::move(elements)}));
  }
  static Value opaque(std::string sort, std::int64_t tag) {
    return Value(Storage(std::in_place_index<6>, Opaque{std::move(sort), tag}));
  }

  Kind kind() const { return static_cast<Kind>(data_.index()); }
  const Storage& storage() const { return data_; }

  bool as_bool() const { return std::get<0>(data_); }
  const Integer& as_int() const { return std::get<1>(data_); }
  const Rational& as_real() const { return std::get<2>(data_); }
  const std::string& as_string() const { return std::get<3>(data_); }
  Timestamp as_timestamp() const { return std::get<4>(data_); }
  const std::vector<Value>& as_list() const { return std::get<5>(data_).elements; }
  const Opaque& as_opaque() const { return std::get<6>(data_); }

  friend bool operator==(const Value& a, const Value& b);

 private:
  explicit Value(Storage s) : data_(std::move(s)) {}
  Storage data_;
};

inline bool operator==(const ValueList& a, const ValueList& b) { return a.elements == b.elements; }
inline bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

inline std::string_view to_string(Value::Kind k) {
  switch (k) {
    case Value::Kind::Bool: return "Boolean";
    case Value::Kind::Int: return "Integer";
    case Value::Kind::Real: return "Decimal";
    case Value::Kind::Str: return "String";
    case Value::Kind::Timestamp: return "DateTime";
    case Value::Kind::List: return "List";
    case Value::Kind::Opaque: return "Opaque";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Operators

enum class Category { Logical, Mathematical, Equality, String, List, Interval, Time, Miscellaneous, Aggregation };
enum class Support { Complete, Partial, Scarce, None };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::Logical: return "Logical";
    case Category::Mathematical: return "Mathematical";
    case Category::Equality: return "Equality";
    case Category::String: return "String";
    case Category::List: return "List";
    case Category::Interval: return "Interval";
    case Category::Time: return "Time";
    case Category::Miscellaneous: return "Miscellaneous";
    case Category::Aggregation: return "Aggregation";
  }
  return "?";
}

inline std::string_view to_string(Support s) {
  switch (s) {
    case Support::Complete: return "complete";
    case Support::Partial: return "partial";
    case Support::Scarce: return "scarce";
    case Support::None: return "none";
  }
  return "?";
}

/// Coverage level per category, as supported by the translator.
inline Support support_of(Category c) {
  switch (c) {
    case Category::Logical:
    case Category::Mathematical:
    case Category::Equality:
    case Category::String: return Support::Complete;
    case Category::List:
    case Category::Interval: return Support::Partial;
    case Category::Time:
    case Category::Miscellaneous: return Support::Scarce;
    case Category::Aggregation: return Support::None;
  }
  return Support::None;
}

enum class UnaryOp { Not, Negate, Exists, IsTrue, IsFalse, IsNull, Count };
enum class BinaryOp {
  Xor, Implies,
  Add, Subtract, Multiply, Divide, Modulo,
  Equal, NotEqual, Greater, GreaterOrEqual, Less, LessOrEqual,
  StartsWith, EndsWith,
  DifferenceBetween,
};
enum class NaryOp { And, Or, Concatenate };

struct OperatorInfo {
  std::string_view elm_name;
  std::string_view prefix_name;
  Category category;
};

inline const OperatorInfo& info(UnaryOp op) {
  static const OperatorInfo table[] = {
      {"Not", "not", Category::Logical},
      {"Negate", "negate", Category::Mathematical},
      {"Exists", "exists", Category::List},
      {"IsTrue", "istrue", Category::Miscellaneous},
      {"IsFalse", "isfalse", Category::Miscellaneous},
      {"IsNull", "isnull", Category::Miscellaneous},
      {"Count", "count", Category::Aggregation},
  };
  return table[static_cast<std::size_t>(op)];
}

inline const OperatorInfo& info(BinaryOp op) {
  static const OperatorInfo table[] = {
      {"Xor", "xor", Category::Logical},
      {"Implies", "implies", Category::Logical},
      {"Add", "+", Category::Mathematical},
      {"Subtract", "-", Category::Mathematical},
      {"Multiply", "*", Category::Mathematical},
      {"Divide", "/", Category::Mathematical},
      {"Modulo", "mod", Category::Mathematical},
      {"Equal", "=", Category::Equality},
      {"NotEqual", "!=", Category::Equality},
      {"Greater", ">", Category::Equality},
      {"GreaterOrEqual", ">=", Category::Equality},
      {"Less", "<", Category::Equality},
      {"LessOrEqual", "<=", Category::Equality},
      {"StartsWith", "startswith", Category::String},
      {"EndsWith", "endswith", Category::String},
      {"DifferenceBetween", "differencebetween", Category::Time},
  };
  return table[static_cast<std::size_t>(op)];
}

inline const OperatorInfo& info(NaryOp op) {
  static const OperatorInfo table[] = {
      {"And", "and", Category::Logical},
      {"Or", "or", Category::Logical},
      {"Concatenate", "concatenate", Category::String},
  };
  return table[static_cast<std::size_t>(op)];
}

inline const OperatorInfo& interval_info() {
  static const OperatorInfo in{"In", "in", Category::Interval};
  return in;
}

enum class TimePrecision { Year, Month, Week, Day, Hour, Minute, Second, Millisecond };

inline std::string_view to_string(TimePrecision p) {
  switch (p) {
    case TimePrecision::Year: return "Year";
    case TimePrecision::Month: return "Month";
    case TimePrecision::Week: return "Week";
    case TimePrecision::Day: return "Day";
    case TimePrecision::Hour: return "Hour";
    case TimePrecision::Minute: return "Minute";
    case TimePrecision::Second: return "Second";
    case TimePrecision::Millisecond: return "Millisecond";
  }
  return "?";
}

inline std::optional<TimePrecision> parse_precision(std::string_view s) {
  static const std::pair<std::string_view, TimePrecision> names[] = {
      {"year", TimePrecision::Year},     {"month", TimePrecision::Month},
      {"week", TimePrecision::Week},     {"day", TimePrecision::Day},
      {"hour", TimePrecision::Hour},     {"minute", TimePrecision::Minute},
      {"second", TimePrecision::Second}, {"millisecond", TimePrecision::Millisecond},
  };
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (!lower.empty() && lower.back() == 's') lower.pop_back();
  for (auto& [name, p] : names) {
    if (name == lower) return p;
  }
  return std::nullopt;
}

/// Milliseconds per unit for the precisions with a fixed-length model.
/// A year is 365.25 days.
inline std::optional<std::int64_t> precision_divisor(TimePrecision p) {
  switch (p) {
    case TimePrecision::Year: return 31'557'600'000;
    case TimePrecision::Day: return 86'400'000;
    case TimePrecision::Millisecond: return 1;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Expression tree

struct Node;

/// Immutable, cheaply copyable handle to an expression tree. Equality is
/// structural and ignores source paths.
class ElmExpression {
 public:
  ElmExpression() = default;
  explicit ElmExpression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static ElmExpression literal(Value v, std::string path = {});
  static ElmExpression symbol(std::string name, std::string path = {});
  static ElmExpression unary(UnaryOp op, ElmExpression arg, std::string path = {});
  static ElmExpression binary(BinaryOp op, ElmExpression lhs, ElmExpression rhs, std::string path = {},
                              std::optional<TimePrecision> precision = std::nullopt);
  static ElmExpression nary(NaryOp op, std::vector<ElmExpression> args, std::string path = {});
  static ElmExpression interval_test(ElmExpression value, ElmExpression low, ElmExpression high,
                                     bool low_closed, bool high_closed, std::string path = {});

  const Node& node() const { return *node_; }
  bool valid() const { return static_cast<bool>(node_); }
  const std::string& source_path() const;

  template <class T>
  const T* as() const;

 private:
  std::shared_ptr<const Node> node_;
};

struct Literal {
  Value value;
};
struct SymbolRef {
  std::string name;
};
struct Unary {
  UnaryOp op;
  ElmExpression arg;
};
struct Binary {
  BinaryOp op;
  ElmExpression lhs;
  ElmExpression rhs;
  std::optional<TimePrecision> precision;  // DifferenceBetween only
};
struct Nary {
  NaryOp op;
  std::vector<ElmExpression> args;
};
struct IntervalTest {
  ElmExpression value;
  ElmExpression low;
  ElmExpression high;
  bool low_closed = true;
  bool high_closed = true;
};

struct Node {
  std::variant<Literal, SymbolRef, Unary, Binary, Nary, IntervalTest> data;
  std::string source_path;
};

inline const std::string& ElmExpression::source_path() const { return node_->source_path; }

template <class T>
const T* ElmExpression::as() const {
  return std::get_if<T>(&node_->data);
}

inline ElmExpression ElmExpression::literal(Value v, std::string path) {
  return ElmExpression(std::make_shared<const Node>(Node{Literal{std::move(v)}, std::move(path)}));
}
inline ElmExpression ElmExpression::symbol(std::string name, std::string path) {
  return ElmExpression(std::make_shared<const Node>(Node{SymbolRef{std::move(name)}, std::move(path)}));
}
inline ElmExpression ElmExpression::unary(UnaryOp op, ElmExpression arg, std::string path) {
  return ElmExpression(std::make_shared<const Node>(Node{Unary{op, std::move(arg)}, std::move(path)}));
}
inline ElmExpression ElmExpression::binary(BinaryOp op, ElmExpression lhs, ElmExpression rhs,
                                           std::string path, std::optional<TimePrecision> precision) {
  if (op == BinaryOp::DifferenceBetween && !precision) precision = TimePrecision::Millisecond;
  if (op != BinaryOp::DifferenceBetween) precision.reset();
  return ElmExpression(std::make_shared<const Node>(
      Node{Binary{op, std::move(lhs), std::move(rhs), precision}, std::move(path)}));
}
inline ElmExpression ElmExpression::nary(NaryOp op, std::vector<ElmExpression> args, std::string path) {
  if (args.size() < 2) {
    throw Error(ErrorKind::ArityMismatch,
                std::string(info(op).elm_name) + " needs at least 2 operands, got " +
                    std::to_string(args.size()),
                path);
  }
  return ElmExpression(std::make_shared<const Node>(Node{Nary{op, std::move(args)}, std::move(path)}));
}
inline ElmExpression ElmExpression::interval_test(ElmExpression value, ElmExpression low, ElmExpression high,
                                                  bool low_closed, bool high_closed, std::string path) {
  return ElmExpression(std::make_shared<const Node>(Node{
      IntervalTest{std::move(value), std::move(low), std::move(high), low_closed, high_closed},
      std::move(path)}));
}

inline bool operator==(const ElmExpression& a, const ElmExpression& b);

inline bool operator==(const Literal& a, const Literal& b) { return a.value == b.value; }
inline bool operator==(const SymbolRef& a, const SymbolRef& b) { return a.name == b.name; }
inline bool operator==(const Unary& a, const Unary& b) { return a.op == b.op && a.arg == b.arg; }
inline bool operator==(const Binary& a, const Binary& b) {
  return a.op == b.op && a.precision == b.precision && a.lhs == b.lhs && a.rhs == b.rhs;
}
inline bool operator==(const Nary& a, const Nary& b) { return a.op == b.op && a.args == b.args; }
inline bool operator==(const IntervalTest& a, const IntervalTest& b) {
  return a.low_closed == b.low_closed && a.high_closed == b.high_closed && a.value == b.value &&
         a.low == b.low && a.high == b.high;
}
inline bool operator==(const ElmExpression& a, const ElmExpression& b) {
  if (a.valid() != b.valid()) return false;
  if (!a.valid()) return true;
  return a.node().data == b.node().data;
}

/// Applies `fn` to every direct child in operand order.
template <class Fn>
void for_each_child(const ElmExpression& e, Fn&& fn) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Unary>) {
          fn(n.arg);
        } else if constexpr (std::is_same_v<T, Binary>) {
          fn(n.lhs);
          fn(n.rhs);
        } else if constexpr (std::is_same_v<T, Nary>) {
          for (const auto& a : n.args) fn(a);
        } else if constexpr (std::is_same_v<T, IntervalTest>) {
          fn(n.value);
          fn(n.low);
          fn(n.high);
        }
      },
      e.node().data);
}

inline bool is_operator_node(const ElmExpression& e) {
  return !e.as<Literal>() && !e.as<SymbolRef>();
}

/// Category of an operator node; nullopt for leaves.
inline std::optional<Category> category_of(const ElmExpression& e) {
  if (auto u = e.as<Unary>()) return info(u->op).category;
  if (auto b = e.as<Binary>()) return info(b->op).category;
  if (auto n = e.as<Nary>()) return info(n->op).category;
  if (e.as<IntervalTest>()) return Category::Interval;
  return std::nullopt;
}

inline std::string operator_name(const ElmExpression& e) {
  if (auto u = e.as<Unary>()) return std::string(info(u->op).elm_name);
  if (auto b = e.as<Binary>()) return std::string(info(b->op).elm_name);
  if (auto n = e.as<Nary>()) return std::string(info(n->op).elm_name);
  if (e.as<IntervalTest>()) return "In";
  if (e.as<Literal>()) return "Literal";
  return "Ref";
}

/// Symbol names in first-occurrence (pre-order) order.
inline std::vector<std::string> collect_symbols(const ElmExpression& e) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto walk = [&](auto&& self, const ElmExpression& x) -> void {
    if (auto s = x.as<SymbolRef>()) {
      if (seen.insert(s->name).second) out.push_back(s->name);
      return;
    }
    for_each_child(x, [&](const ElmExpression& c) { self(self, c); });
  };
  walk(walk, e);
  return out;
}

/// Replaces every reference whose name is bound in `bindings`. Replacement
/// trees are inserted as-is (not rewritten themselves).
inline ElmExpression substitute(const ElmExpression& e, const std::map<std::string, ElmExpression>& bindings) {
  return std::visit(
      [&](const auto& n) -> ElmExpression {
        using T = std::decay_t<decltype(n)>;
        const auto& path = e.source_path();
        if constexpr (std::is_same_v<T, Literal>) {
          return e;
        } else if constexpr (std::is_same_v<T, SymbolRef>) {
          auto it = bindings.find(n.name);
          return it == bindings.end() ? e : it->second;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return ElmExpression::unary(n.op, substitute(n.arg, bindings), path);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return ElmExpression::binary(n.op, substitute(n.lhs, bindings), substitute(n.rhs, bindings), path,
                                       n.precision);
        } else if constexpr (std::is_same_v<T, Nary>) {
          std::vector<ElmExpression> args;
          for (const auto& a : n.args) args.push_back(substitute(a, bindings));
          return ElmExpression::nary(n.op, std::move(args), path);
        } else {
          return ElmExpression::interval_test(substitute(n.value, bindings), substitute(n.low, bindings),
                                              substitute(n.high, bindings), n.low_closed, n.high_closed, path);
        }
      },
      e.node().data);
}

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  std::size_t expr_count = 0;
  std::size_t oper_count = 0;

  Metrics& operator+=(const Metrics& o) {
    expr_count += o.expr_count;
    oper_count += o.oper_count;
    return *this;
  }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline std::size_t count_operator_nodes(const ElmExpression& e) {
  std::size_t n = is_operator_node(e) ? 1 : 0;
  for_each_child(e, [&](const ElmExpression& c) { n += count_operator_nodes(c); });
  return n;
}

/// One expression per tree; every non-leaf node is one operator.
inline Metrics count_metrics(std::span<const ElmExpression> expressions) {
  Metrics m;
  for (const auto& e : expressions) {
    ++m.expr_count;
    m.oper_count += count_operator_nodes(e);
  }
  return m;
}

/// Operator count over raw ELM XML for definitions outside the translatable
/// subset (retrieves, queries, ...): any typed element with a typed child.
inline std::size_t count_raw_operator_nodes(const xml::Element& element) {
  std::size_t n = 0;
  bool has_typed_child = false;
  for (const auto& c : element.children) {
    n += count_raw_operator_nodes(c);
    if (!c.xsi_type().empty()) has_typed_child = true;
  }
  if (has_typed_child && !element.xsi_type().empty()) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Prefix-text debug format:
//   (and (>= PatientAgeInYears 18) (not (exists AdverseReactionToACEInhibitors)))

namespace detail {

inline bool plain_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return s != "true" && s != "false";
}

inline std::string decimal_text(const Integer& i) { return i.str(); }

inline std::string rational_text(const Rational& r) {
  auto num = boost::multiprecision::numerator(r);
  auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str() + ".0";
  return num.str() + "/" + den.str();
}

}  // namespace detail

inline std::string to_prefix(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Int: return detail::decimal_text(v.as_int());
    case Value::Kind::Real: return detail::rational_text(v.as_real());
    case Value::Kind::Str: return sexpr::quote_string(v.as_string());
    case Value::Kind::Timestamp: return "(timestamp " + std::to_string(v.as_timestamp().epoch_ms) + ")";
    case Value::Kind::List: {
      std::string out = "(list";
      for (const auto& e : v.as_list()) out += " " + to_prefix(e);
      return out + ")";
    }
    case Value::Kind::Opaque:
      return "(opaque " + v.as_opaque().sort_name + " " + std::to_string(v.as_opaque().tag) + ")";
  }
  return {};
}

inline std::string to_prefix(const ElmExpression& e) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return to_prefix(n.value);
        } else if constexpr (std::is_same_v<T, SymbolRef>) {
          return detail::plain_identifier(n.name) ? n.name : "|" + n.name + "|";
        } else if constexpr (std::is_same_v<T, Unary>) {
          return "(" + std::string(info(n.op).prefix_name) + " " + to_prefix(n.arg) + ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          std::string head(info(n.op).prefix_name);
          if (n.precision) {
            std::string p(to_string(*n.precision));
            for (auto& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            head += " " + p;
          }
          return "(" + head + " " + to_prefix(n.lhs) + " " + to_prefix(n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, Nary>) {
          std::string out = "(" + std::string(info(n.op).prefix_name);
          for (const auto& a : n.args) out += " " + to_prefix(a);
          return out + ")";
        } else {
          return "(in " + to_prefix(n.value) + " (interval " + to_prefix(n.low) + " " + to_prefix(n.high) +
                 (n.low_closed ? " closed" : " open") + (n.high_closed ? " closed" : " open") + "))";
        }
      },
      e.node().data);
}

namespace detail {

inline std::optional<Value> numeric_atom(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  auto slash = s.find('/');
  auto dot = s.find('.');
  auto digits = [](std::string_view d) {
    return !d.empty() && std::all_of(d.begin(), d.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  if (slash != std::string_view::npos) {
    auto num = s.substr(i, slash - i), den = s.substr(slash + 1);
    if (!digits(num) || !digits(den) || Integer(std::string(den)) == 0) return std::nullopt;
    Rational r{Integer(std::string(num)), Integer(std::string(den))};
    return Value::real(i ? Rational(-r) : r);
  }
  if (dot != std::string_view::npos) {
    auto whole = s.substr(i, dot - i), frac = s.substr(dot + 1);
    if (!digits(whole) || !digits(frac)) return std::nullopt;
    Integer scale = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(frac.size()));
    Rational r{Integer(std::string(whole)) * scale + Integer(std::string(frac)), scale};
    return Value::real(i ? Rational(-r) : r);
  }
  if (!digits(s.substr(i))) return std::nullopt;
  return Value::integer(Integer(std::string(s)));
}

inline Value prefix_value(const sexpr::SExpr& s) {
  if (s.is_string()) return Value::string(s.text);
  if (s.is_atom("true")) return Value::boolean(true);
  if (s.is_atom("false")) return Value::boolean(false);
  if (s.is_atom()) {
    if (auto v = numeric_atom(s.text)) return *v;
  }
  if (s.is_list() && !s.children.empty() && s.children[0].is_atom()) {
    const auto& head = s.children[0].text;
    if (head == "list") {
      std::vector<Value> elems;
      for (std::size_t i = 1; i < s.children.size(); ++i) elems.push_back(prefix_value(s.children[i]));
      return Value::list(std::move(elems));
    }
    if (head == "timestamp" && s.children.size() == 2) {
      return Value::timestamp(std::stoll(s.children[1].text));
    }
    if (head == "opaque" && s.children.size() == 3) {
      return Value::opaque(s.children[1].text, std::stoll(s.children[2].text));
    }
  }
  throw Error(ErrorKind::TypeMismatch, "not a literal: " + sexpr::to_string(s));
}

inline bool is_literal_form(const sexpr::SExpr& s) {
  if (s.is_string()) return true;
  if (s.is_atom()) return !s.quoted && (s.text == "true" || s.text == "false" || numeric_atom(s.text));
  return s.is_list() && !s.children.empty() && s.children[0].is_atom() &&
         (s.children[0].text == "list" || s.children[0].text == "timestamp" || s.children[0].text == "opaque");
}

inline ElmExpression from_prefix(const sexpr::SExpr& s, const std::string& path) {
  if (is_literal_form(s)) return ElmExpression::literal(prefix_value(s), path);
  if (s.is_atom()) return ElmExpression::symbol(s.text, path);
  if (!s.is_list() || s.children.empty() || !s.children[0].is_atom()) {
    throw Error(ErrorKind::UnknownOperator, "malformed prefix expression: " + sexpr::to_string(s), path);
  }
  const std::string& head = s.children[0].text;
  std::size_t first = 1;
  std::optional<TimePrecision> precision;
  if (head == "differencebetween" && s.children.size() == 4) {
    precision = parse_precision(s.children[1].text);
    first = 2;
  }
  std::vector<ElmExpression> args;
  auto child = [&](std::size_t i) { return from_prefix(s.children[i], path + "/" + std::to_string(i)); };
  if (head == "in") {
    if (s.children.size() != 3 || !s.children[2].is_list() || s.children[2].children.size() != 5 ||
        !s.children[2].children[0].is_atom("interval")) {
      throw Error(ErrorKind::ArityMismatch, "in expects (in value (interval low high closed|open closed|open))", path);
    }
    const auto& iv = s.children[2].children;
    return ElmExpression::interval_test(child(1), from_prefix(iv[1], path + "/2/1"),
                                        from_prefix(iv[2], path + "/2/2"), iv[3].is_atom("closed"),
                                        iv[4].is_atom("closed"), path);
  }
  for (std::size_t i = first; i < s.children.size(); ++i) args.push_back(child(i));
  for (int k = 0; k <= static_cast<int>(UnaryOp::Count); ++k) {
    auto op = static_cast<UnaryOp>(k);
    if (info(op).prefix_name == head) {
      if (args.size() != 1) throw Error(ErrorKind::ArityMismatch, head + " takes one operand", path);
      return ElmExpression::unary(op, args[0], path);
    }
  }
  for (int k = 0; k <= static_cast<int>(BinaryOp::DifferenceBetween); ++k) {
    auto op = static_cast<BinaryOp>(k);
    if (info(op).prefix_name == head) {
      if (args.size() != 2) throw Error(ErrorKind::ArityMismatch, head + " takes two operands", path);
      return ElmExpression::binary(op, args[0], args[1], path, precision);
    }
  }
  for (int k = 0; k <= static_cast<int>(NaryOp::Concatenate); ++k) {
    auto op = static_cast<NaryOp>(k);
    if (info(op).prefix_name == head) return ElmExpression::nary(op, std::move(args), path);
  }
  throw Error(ErrorKind::UnknownOperator, "unknown operator '" + head + "'", path);
}

}  // namespace detail

/// Parses the prefix debug format. Nodes get synthetic paths `#`, `#/1`, ...
inline ElmExpression parse_prefix(std::string_view text, const std::string& root_path = "#") {
  return detail::from_prefix(sexpr::parse_one(text), root_path);
}

// ---------------------------------------------------------------------------
// ELM XML front end

/// Parses `yyyy-mm-dd[Thh:mm[:ss[.fff]]][Z|+hh:mm|-hh:mm]` to epoch ms.
inline std::optional<std::int64_t> parse_iso_datetime(std::string_view s) {
  using namespace std::chrono;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    if (pos + len > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (!s.empty() && s.front() == '@') s.remove_prefix(1);
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
  if (!y || !mo || !d || s[4] != '-' || s[7] != '-') return std::nullopt;
  year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
  std::size_t pos = 10;
  if (pos < s.size() && s[pos] == 'T') {
    auto h = num(pos + 1, 2), mi = num(pos + 4, 2);
    if (!h || !mi || s[pos + 3] != ':') return std::nullopt;
    ms += (*h * 3600LL + *mi * 60LL) * 1000;
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      auto sec = num(pos + 1, 2);
      if (!sec) return std::nullopt;
      ms += *sec * 1000LL;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        std::size_t start = ++pos;
        int frac = 0, digits = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
          if (digits < 3) {
            frac = frac * 10 + (s[pos] - '0');
            ++digits;
          }
          ++pos;
        }
        if (pos == start) return std::nullopt;
        while (digits++ < 3) frac *= 10;
        ms += frac;
      }
    }
  }
  if (pos < s.size()) {
    if (s[pos] == 'Z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      auto oh = num(pos + 1, 2), om = num(pos + 4, 2);
      if (!oh || !om) return std::nullopt;
      std::int64_t offset = (*oh * 60LL + *om) * 60'000;
      ms += (s[pos] == '+') ? -offset : offset;
      pos += 6;
    }
  }
  if (pos != s.size()) return std::nullopt;
  return ms;
}

namespace detail {

inline std::vector<const xml::Element*> typed_children(const xml::Element& e) {
  std::vector<const xml::Element*> out;
  for (const auto& c : e.children) {
    if (!c.xsi_type().empty()) out.push_back(&c);
  }
  return out;
}

inline Value parse_literal(const xml::Element& e) {
  const std::string* type_attr = e.attribute("valueType");
  const std::string* value = e.attribute("value");
  if (!type_attr || !value) {
    throw Error(ErrorKind::TypeMismatch, "Literal requires valueType and value attributes", e.path);
  }
  std::string type = e.resolve_qname(*type_attr).second;
  if (type == "Boolean") {
    if (*value == "true") return Value::boolean(true);
    if (*value == "false") return Value::boolean(false);
  } else if (type == "Integer") {
    if (auto v = numeric_atom(*value); v && v->kind() == Value::Kind::Int) return *v;
  } else if (type == "Decimal") {
    if (auto v = numeric_atom(*value)) {
      return v->kind() == Value::Kind::Int ? Value::real(Rational(v->as_int())) : *v;
    }
  } else if (type == "String") {
    return Value::string(*value);
  } else if (type == "DateTime" || type == "Date") {
    if (auto ms = parse_iso_datetime(*value)) return Value::timestamp(*ms);
  } else {
    throw Error(ErrorKind::TypeMismatch, "unsupported literal type '" + type + "'", e.path);
  }
  throw Error(ErrorKind::TypeMismatch, "invalid " + type + " literal '" + *value + "'", e.path);
}

/// ELM DateTime constructor with literal integer components.
inline std::optional<Value> parse_datetime_constructor(const xml::Element& e) {
  static const char* parts[] = {"year", "month", "day", "hour", "minute", "second", "millisecond"};
  int values[7] = {0, 1, 1, 0, 0, 0, 0};
  for (int i = 0; i < 7; ++i) {
    const xml::Element* c = e.child(parts[i]);
    if (!c) {
      if (i == 0) return std::nullopt;
      continue;
    }
    if (c->xsi_type() != "Literal" || !c->attribute("value")) return std::nullopt;
    auto v = numeric_atom(*c->attribute("value"));
    if (!v || v->kind() != Value::Kind::Int) return std::nullopt;
    values[i] = v->as_int().convert_to<int>();
  }
  using namespace std::chrono;
  year_month_day ymd{year{values[0]}, month{static_cast<unsigned>(values[1])}, day{static_cast<unsigned>(values[2])}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
  ms += ((values[3] * 60LL + values[4]) * 60LL + values[5]) * 1000LL + values[6];
  return Value::timestamp(ms);
}

}  // namespace detail

/// Parses an ELM expression element (an element carrying `xsi:type`, such as
/// a condition's `logic`). Throws UnknownOperator for element types outside
/// the supported operator set and ArityMismatch for wrong operand counts.
inline ElmExpression parse_elm(const xml::Element& raw) {
  const std::string type = raw.xsi_type();
  const std::string& path = raw.path;
  if (type.empty()) throw Error(ErrorKind::UnknownOperator, "element '" + raw.local + "' has no xsi:type", path);

  if (type == "Literal") return ElmExpression::literal(detail::parse_literal(raw), path);
  if (type == "ExpressionRef" || type == "ParameterRef" || type == "IdentifierRef") {
    const std::string* name = raw.attribute("name");
    if (!name || name->empty()) throw Error(ErrorKind::ArityMismatch, type + " without a name", path);
    return ElmExpression::symbol(*name, path);
  }
  if (type == "DateTime") {
    if (auto v = detail::parse_datetime_constructor(raw)) return ElmExpression::literal(*v, path);
    throw Error(ErrorKind::UnknownOperator, "DateTime with non-literal components", path);
  }

  auto operands = detail::typed_children(raw);
  auto expect = [&](std::size_t n) {
    if (operands.size() != n) {
      throw Error(ErrorKind::ArityMismatch,
                  type + " expects " + std::to_string(n) + " operand(s), got " + std::to_string(operands.size()),
                  path);
    }
  };

  if (type == "In") {
    expect(2);
    const xml::Element& interval = *operands[1];
    if (interval.xsi_type() != "Interval") {
      throw Error(ErrorKind::ArityMismatch, "In expects an Interval as its second operand", interval.path);
    }
    const xml::Element* low = interval.child("low");
    const xml::Element* high = interval.child("high");
    if (!low || !high) throw Error(ErrorKind::ArityMismatch, "Interval requires low and high", interval.path);
    auto closed = [&](const char* attr) {
      const std::string* v = interval.attribute(attr);
      return !v || *v != "false";
    };
    return ElmExpression::interval_test(parse_elm(*operands[0]), parse_elm(*low), parse_elm(*high),
                                        closed("lowClosed"), closed("highClosed"), path);
  }

  for (int k = 0; k <= static_cast<int>(UnaryOp::Count); ++k) {
    auto op = static_cast<UnaryOp>(k);
    if (info(op).elm_name == type) {
      expect(1);
      return ElmExpression::unary(op, parse_elm(*operands[0]), path);
    }
  }
  for (int k = 0; k <= static_cast<int>(BinaryOp::DifferenceBetween); ++k) {
    auto op = static_cast<BinaryOp>(k);
    if (info(op).elm_name == type) {
      expect(2);
      std::optional<TimePrecision> precision;
      if (op == BinaryOp::DifferenceBetween) {
        const std::string* p = raw.attribute("precision");
        precision = p ? parse_precision(*p) : std::nullopt;
        if (!precision) throw Error(ErrorKind::ArityMismatch, "DifferenceBetween needs a precision", path);
      }
      return ElmExpression::binary(op, parse_elm(*operands[0]), parse_elm(*operands[1]), path, precision);
    }
  }
  for (int k = 0; k <= static_cast<int>(NaryOp::Concatenate); ++k) {
    auto op = static_cast<NaryOp>(k);
    if (info(op).elm_name == type) {
      std::vector<ElmExpression> args;
      for (const auto* o : operands) args.push_back(parse_elm(*o));
      return ElmExpression::nary(op, std::move(args), path);
    }
  }
  throw Error(ErrorKind::UnknownOperator, "unsupported ELM expression type '" + type + "'", path);
}

}  // namespace knart::elm
