#pragma once

// Ground-term evaluator with classical two-valued semantics. Integers are
// unbounded and decimals exact rationals, matching the solver's arithmetic.

#include <map>
#include <string>

#include "knart/elm.hpp"
#include "knart/error.hpp"

namespace knart::elm {

using Assignment = std::map<std::string, Value, std::less<>>;

namespace detail {

[[noreturn]] inline void mismatch(const ElmExpression& e, const std::string& what) {
  throw Error(ErrorKind::TypeMismatch, operator_name(e) + ": " + what, e.source_path());
}

inline bool is_numeric(const Value& v) { return v.kind() == Value::Kind::Int || v.kind() == Value::Kind::Real; }

inline Rational to_rational(const Value& v) {
  return v.kind() == Value::Kind::Int ? Rational(v.as_int()) : v.as_real();
}

inline bool want_bool(const ElmExpression& e, const Value& v) {
  if (v.kind() != Value::Kind::Bool) mismatch(e, "expected Boolean, got " + std::string(to_string(v.kind())));
  return v.as_bool();
}

inline const std::string& want_string(const ElmExpression& e, const Value& v) {
  if (v.kind() != Value::Kind::Str) mismatch(e, "expected String, got " + std::string(to_string(v.kind())));
  return v.as_string();
}

/// Three-way comparison over numbers (with Int->Real promotion), strings and
/// timestamps. Returns <0, 0, >0.
inline int compare(const ElmExpression& e, const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) {
    if (a.kind() == Value::Kind::Int && b.kind() == Value::Kind::Int) return a.as_int().compare(b.as_int());
    return to_rational(a).compare(to_rational(b));
  }
  if (a.kind() == Value::Kind::Str && b.kind() == Value::Kind::Str) return a.as_string().compare(b.as_string());
  if (a.kind() == Value::Kind::Timestamp && b.kind() == Value::Kind::Timestamp) {
    auto x = a.as_timestamp().epoch_ms, y = b.as_timestamp().epoch_ms;
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  mismatch(e, "cannot order " + std::string(to_string(a.kind())) + " and " + std::string(to_string(b.kind())));
}

inline bool equal_values(const Value& a, const Value& b) {
  if (is_numeric(a) && is_numeric(b)) return to_rational(a) == to_rational(b);
  if (a.kind() == Value::Kind::List && b.kind() == Value::Kind::List) {
    const auto& x = a.as_list();
    const auto& y = b.as_list();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!equal_values(x[i], y[i])) return false;
    }
    return true;
  }
  return a == b;
}

/// Floor division for a positive divisor, matching SMT-LIB `div`.
inline Integer floor_div(const Integer& a, const Integer& b) {
  Integer q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline Value arithmetic(const ElmExpression& e, BinaryOp op, const Value& a, const Value& b) {
  if (!is_numeric(a) || !is_numeric(b)) {
    mismatch(e, "arithmetic over " + std::string(to_string(a.kind())) + " and " + std::string(to_string(b.kind())));
  }
  bool integral = a.kind() == Value::Kind::Int && b.kind() == Value::Kind::Int;
  switch (op) {
    case BinaryOp::Add:
      return integral ? Value::integer(a.as_int() + b.as_int()) : Value::real(to_rational(a) + to_rational(b));
    case BinaryOp::Subtract:
      return integral ? Value::integer(a.as_int() - b.as_int()) : Value::real(to_rational(a) - to_rational(b));
    case BinaryOp::Multiply:
      return integral ? Value::integer(a.as_int() * b.as_int()) : Value::real(to_rational(a) * to_rational(b));
    case BinaryOp::Divide: {
      Rational d = to_rational(b);
      if (d == 0) throw Error(ErrorKind::DivisionByZero, "Divide by zero", e.source_path());
      return Value::real(to_rational(a) / d);
    }
    case BinaryOp::Modulo: {
      if (integral) {
        if (b.as_int() == 0) throw Error(ErrorKind::DivisionByZero, "Modulo by zero", e.source_path());
        return Value::integer(a.as_int() % b.as_int());  // truncated: sign follows the dividend
      }
      Rational x = to_rational(a), y = to_rational(b);
      if (y == 0) throw Error(ErrorKind::DivisionByZero, "Modulo by zero", e.source_path());
      Rational q = x / y;
      Integer t = boost::multiprecision::numerator(q) / boost::multiprecision::denominator(q);
      return Value::real(x - y * Rational(t));
    }
    default:
      mismatch(e, "not an arithmetic operator");
  }
}

}  // namespace detail

/// Evaluates `expr` under `assignment`. Throws UnboundSymbol, TypeMismatch,
/// DivisionByZero, or UnsupportedOperator (aggregation).
inline Value evaluate(const ElmExpression& expr, const Assignment& assignment) {
  using namespace detail;
  const auto& data = expr.node().data;

  if (auto lit = std::get_if<Literal>(&data)) return lit->value;

  if (auto ref = std::get_if<SymbolRef>(&data)) {
    auto it = assignment.find(ref->name);
    if (it == assignment.end()) {
      throw Error(ErrorKind::UnboundSymbol, "no value for '" + ref->name + "'", expr.source_path());
    }
    return it->second;
  }

  if (auto u = std::get_if<Unary>(&data)) {
    if (u->op == UnaryOp::Count) {
      throw Error(ErrorKind::UnsupportedOperator, "Count is not evaluated", expr.source_path());
    }
    Value v = evaluate(u->arg, assignment);
    switch (u->op) {
      case UnaryOp::Not: return Value::boolean(!want_bool(expr, v));
      case UnaryOp::Negate:
        if (v.kind() == Value::Kind::Int) return Value::integer(-v.as_int());
        if (v.kind() == Value::Kind::Real) return Value::real(-v.as_real());
        mismatch(expr, "Negate over " + std::string(to_string(v.kind())));
      case UnaryOp::Exists:
        if (v.kind() != Value::Kind::List) mismatch(expr, "Exists over " + std::string(to_string(v.kind())));
        return Value::boolean(!v.as_list().empty());
      case UnaryOp::IsTrue: return Value::boolean(want_bool(expr, v));
      case UnaryOp::IsFalse: return Value::boolean(!want_bool(expr, v));
      case UnaryOp::IsNull: return Value::boolean(false);
      case UnaryOp::Count: break;
    }
    mismatch(expr, "unhandled unary operator");
  }

  if (auto b = std::get_if<Binary>(&data)) {
    // Boolean connectives evaluate both sides: the semantics are total.
    Value l = evaluate(b->lhs, assignment);
    Value r = evaluate(b->rhs, assignment);
    switch (b->op) {
      case BinaryOp::Xor: return Value::boolean(want_bool(expr, l) != want_bool(expr, r));
      case BinaryOp::Implies: return Value::boolean(!want_bool(expr, l) || want_bool(expr, r));
      case BinaryOp::Add:
      case BinaryOp::Subtract:
      case BinaryOp::Multiply:
      case BinaryOp::Divide:
      case BinaryOp::Modulo: return arithmetic(expr, b->op, l, r);
      case BinaryOp::Equal: return Value::boolean(equal_values(l, r));
      case BinaryOp::NotEqual: return Value::boolean(!equal_values(l, r));
      case BinaryOp::Greater: return Value::boolean(compare(expr, l, r) > 0);
      case BinaryOp::GreaterOrEqual: return Value::boolean(compare(expr, l, r) >= 0);
      case BinaryOp::Less: return Value::boolean(compare(expr, l, r) < 0);
      case BinaryOp::LessOrEqual: return Value::boolean(compare(expr, l, r) <= 0);
      case BinaryOp::StartsWith: return Value::boolean(want_string(expr, l).starts_with(want_string(expr, r)));
      case BinaryOp::EndsWith: return Value::boolean(want_string(expr, l).ends_with(want_string(expr, r)));
      case BinaryOp::DifferenceBetween: {
        if (l.kind() != Value::Kind::Timestamp || r.kind() != Value::Kind::Timestamp) {
          mismatch(expr, "DifferenceBetween needs two DateTime operands");
        }
        auto divisor = precision_divisor(b->precision.value_or(TimePrecision::Millisecond));
        if (!divisor) {
          throw Error(ErrorKind::UnsupportedOperator,
                      "DifferenceBetween precision " + std::string(to_string(*b->precision)) + " is not modeled",
                      expr.source_path());
        }
        Integer diff = Integer(r.as_timestamp().epoch_ms) - Integer(l.as_timestamp().epoch_ms);
        return Value::integer(floor_div(diff, Integer(*divisor)));
      }
    }
    mismatch(expr, "unhandled binary operator");
  }

  if (auto n = std::get_if<Nary>(&data)) {
    switch (n->op) {
      case NaryOp::And: {
        bool all = true;
        for (const auto& a : n->args) all = want_bool(expr, evaluate(a, assignment)) && all;
        return Value::boolean(all);
      }
      case NaryOp::Or: {
        bool any = false;
        for (const auto& a : n->args) any = want_bool(expr, evaluate(a, assignment)) || any;
        return Value::boolean(any);
      }
      case NaryOp::Concatenate: {
        std::string out;
        for (const auto& a : n->args) out += want_string(expr, evaluate(a, assignment));
        return Value::string(std::move(out));
      }
    }
  }

  const auto& in = std::get<IntervalTest>(data);
  Value v = evaluate(in.value, assignment);
  Value lo = evaluate(in.low, assignment);
  Value hi = evaluate(in.high, assignment);
  int c_lo = compare(expr, v, lo);
  int c_hi = compare(expr, v, hi);
  bool above = in.low_closed ? c_lo >= 0 : c_lo > 0;
  bool below = in.high_closed ? c_hi <= 0 : c_hi < 0;
  return Value::boolean(above && below);
}

}  // namespace knart::elm
