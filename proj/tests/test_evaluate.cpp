#include <catch_amalgamated.hpp>

#include "knart/evaluate.hpp"

using namespace knart::elm;

namespace {

Value eval(const char* prefix, const Assignment& a = {}) { return evaluate(parse_prefix(prefix), a); }

}  // namespace

TEST_CASE("the order set condition holds for an adult without adverse events", "[evaluate]") {
  const char* cond = "(and (>= PatientAgeInYears 18) (not (exists AdverseReactionToACEInhibitors)))";
  Assignment a{{"PatientAgeInYears", Value::integer(20)}, {"AdverseReactionToACEInhibitors", Value::list({})}};
  CHECK(eval(cond, a) == Value::boolean(true));
  a["PatientAgeInYears"] = Value::integer(17);
  CHECK(eval(cond, a) == Value::boolean(false));
  a["PatientAgeInYears"] = Value::integer(40);
  a["AdverseReactionToACEInhibitors"] = Value::list({Value::opaque("AdverseEvent", 0)});
  CHECK(eval(cond, a) == Value::boolean(false));
}

TEST_CASE("a contradictory range has no integer witness", "[evaluate]") {
  auto e = parse_prefix("(and (> x 5) (< x 3))");
  for (int x = -10; x <= 10; ++x) {
    CHECK(evaluate(e, {{"x", Value::integer(x)}}) == Value::boolean(false));
  }
}

TEST_CASE("arithmetic follows ELM rules", "[evaluate]") {
  CHECK(eval("(mod -7 3)") == Value::integer(-1));
  CHECK(eval("(mod 7 -3)") == Value::integer(1));
  CHECK(eval("(/ 7 2)") == Value::real(Rational(7, 2)));
  CHECK(eval("(+ 1 1/2)") == Value::real(Rational(3, 2)));
  CHECK(eval("(= 2 2.0)") == Value::boolean(true));
  CHECK(eval("(* 123456789012345678 1000)") == Value::integer(Integer("123456789012345678000")));
  CHECK(eval("(negate -4)") == Value::integer(4));
  CHECK_THROWS_AS(eval("(/ 1 0)"), knart::Error);
  CHECK_THROWS_AS(eval("(mod 1 0)"), knart::Error);
}

TEST_CASE("strings, intervals and time", "[evaluate]") {
  CHECK(eval("(startswith \"prefix\" \"pre\")") == Value::boolean(true));
  CHECK(eval("(endswith \"prefix\" \"pre\")") == Value::boolean(false));
  CHECK(eval("(concatenate \"a\" \"b\" \"c\")") == Value::string("abc"));
  CHECK(eval("(< \"abc\" \"abd\")") == Value::boolean(true));
  CHECK(eval("(in 3 (interval 3 7 closed open))") == Value::boolean(true));
  CHECK(eval("(in 7 (interval 3 7 closed open))") == Value::boolean(false));
  CHECK(eval("(in 3 (interval 3 7 open closed))") == Value::boolean(false));
  CHECK(eval("(differencebetween day (timestamp 0) (timestamp 172800000))") == Value::integer(2));
  CHECK(eval("(differencebetween day (timestamp 1) (timestamp 0))") == Value::integer(-1));
  CHECK(eval("(differencebetween millisecond (timestamp 5) (timestamp 2))") == Value::integer(-3));
}

TEST_CASE("evaluation errors carry their kind", "[evaluate]") {
  auto kind_of = [](const char* text, const Assignment& a = {}) {
    try {
      eval(text, a);
    } catch (const knart::Error& e) {
      return e.kind();
    }
    FAIL("no error for " << text);
    return knart::ErrorKind::ProtocolError;
  };
  CHECK(kind_of("(> x 1)") == knart::ErrorKind::UnboundSymbol);
  CHECK(kind_of("(and 1 true)") == knart::ErrorKind::TypeMismatch);
  CHECK(kind_of("(count xs)", {{"xs", Value::list({})}}) == knart::ErrorKind::UnsupportedOperator);
}
