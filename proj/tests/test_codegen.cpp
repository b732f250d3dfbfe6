#include <catch_amalgamated.hpp>

#include "knart/artifact.hpp"
#include "knart/codegen.hpp"
#include "support.hpp"

using namespace knart;
using elm::parse_prefix;

namespace {

constexpr const char* kOs01Condition =
    "(and (>= PatientAgeInYears 18) (not (exists AdverseReactionToACEInhibitors)))";

// Reference OS-01 script for the built-in List encoding, plus the check command.
constexpr const char* kGoldenListing = R"((declare-sort AdverseEvent)
(declare-const AdverseReactionToACEInhibitors (List AdverseEvent))
(declare-const PatientAgeInYears Int)
(define-fun elm_exists ((lst (List AdverseEvent))) Bool
	(ite (exists ((x AdverseEvent)) (= x (head lst))) true false))
(assert (= true (and (>= PatientAgeInYears 18) (not (elm_exists AdverseReactionToACEInhibitors)))))
(check-sat)
)";

smt::SmtScript os01_script(smt::Mode mode, bool cores) {
  auto env = extract_symbol_env(load_artifact(testing::fixture("os-01.xml")));
  auto expr = parse_prefix(kOs01Condition);
  auto sorts = infer_sorts(expr, env);
  std::vector<smt::ConditionInput> in{{"cond-1", "/c", expr}};
  return smt::build_script(in, sorts, {}, {.mode = mode, .want_cores = cores, .logic = {}});
}

/// Whitespace-insensitive form with `(! t :named n)` reduced to `t`.
std::string normalized(const std::string& text) {
  std::function<sexpr::SExpr(const sexpr::SExpr&)> strip = [&](const sexpr::SExpr& e) {
    if (e.is_list() && e.children.size() == 4 && e.children[0].is_atom("!") && e.children[2].is_atom(":named")) {
      return strip(e.children[1]);
    }
    sexpr::SExpr out = e;
    for (auto& c : out.children) c = strip(c);
    return out;
  };
  std::string out;
  for (const auto& e : sexpr::parse_all(text)) out += sexpr::to_string(strip(e)) + "\n";
  return out;
}

std::string term(const char* prefix, smt::Mode mode = smt::Mode::Portable, const SymbolEnv& env = {}) {
  auto e = parse_prefix(prefix);
  return smt::translate_term(e, infer_sorts(e, env), mode);
}

}  // namespace

TEST_CASE("built-in list encoding reproduces the reference script", "[codegen]") {
  auto script = os01_script(smt::Mode::PaperCompat, false);
  CHECK(normalized(smt::render(script)) == normalized(kGoldenListing));

  auto named = os01_script(smt::Mode::PaperCompat, true);
  std::string text = smt::render(named);
  CHECK(text.starts_with("(set-option :produce-unsat-cores true)\n"));
  CHECK(text.find(":named assertion-1))\n(check-sat)\n") != std::string::npos);
}

TEST_CASE("portable output declares a list datatype and tests for nil", "[codegen]") {
  auto script = os01_script(smt::Mode::Portable, true);
  std::string text = smt::render(script);
  CHECK(text ==
        "(set-option :produce-unsat-cores true)\n"
        "(declare-sort AdverseEvent 0)\n" +
            std::string(smt::kListDatatype) +
            "\n"
            "(declare-const AdverseReactionToACEInhibitors (ElmList AdverseEvent))\n"
            "(declare-const PatientAgeInYears Int)\n"
            "(assert (! (and (>= PatientAgeInYears 18) (not (not ((_ is nil) AdverseReactionToACEInhibitors)))) "
            ":named assertion-1))\n"
            "(check-sat)\n");
  REQUIRE(script.assertions.size() == 1);
  CHECK(script.assertions[0].condition_id == "cond-1");
  CHECK(script.assertions[0].rendered == kOs01Condition);
}

TEST_CASE("the age window condition is asserted as written", "[codegen]") {
  auto a = load_artifact(testing::fixture("eca-03.xml"));
  auto env = extract_symbol_env(a);
  auto expr = elm::parse_elm(*a.conditions[0].raw_expression);
  auto sorts = infer_sorts(expr, env);
  std::vector<smt::ConditionInput> in{{a.conditions[0].id, a.conditions[0].source_path, expr}};
  auto script = smt::build_script(in, sorts, {}, {});
  const auto* assertion = std::get_if<smt::Assert>(&script.commands[script.commands.size() - 2]);
  REQUIRE(assertion);
  CHECK(assertion->term == "(and (>= 18 PatientAge) (<= 50 PatientAge))");
  CHECK(assertion->name == "assertion-1");
  CHECK(script.find_assertion("assertion-1")->condition_id == "age-window");
}

TEST_CASE("aggregation is rejected with its category", "[codegen]") {
  SymbolEnv env;
  env.add({"xs", "Encounter", Cardinality::List, false, "/d"});
  try {
    term("(> (count xs) 3)", smt::Mode::Portable, env);
    FAIL();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedOperator);
    CHECK(e.category() == "Aggregation");
    CHECK(e.source_path() == "#/1");
  }
}

TEST_CASE("operator mapping", "[codegen]") {
  CHECK(term("(in x (interval 3 7 closed closed))") == "(and (>= x 3) (<= x 7))");
  CHECK(term("(in x (interval 3 7 open closed))") == "(and (> x 3) (<= x 7))");
  CHECK(term("(startswith s \"pre\")") == "(str.prefixof \"pre\" s)");
  CHECK(term("(endswith s \"fix\")") == "(str.suffixof \"fix\" s)");
  CHECK(term("(= (concatenate s \"a\") \"ba\")") == "(= (str.++ s \"a\") \"ba\")");
  CHECK(term("(implies p (xor q r))") == "(=> p (xor q r))");
  CHECK(term("(!= x -3)") == "(distinct x (- 3))");
  CHECK(term("(istrue p)") == "(= p true)");
  CHECK(term("(isfalse p)") == "(= p false)");
  CHECK(term("(isnull p)") == "false");
  CHECK(term("(> (/ x 2) 1.5)") == "(> (/ (to_real x) 2.0) (/ 3.0 2.0))");
  CHECK(term("(= (mod x 3) 1)") == "(= (ite (>= x 0) (mod x 3) (- (mod (- x) 3))) 1)");
  CHECK(term("(< (differencebetween day a b) 2)") == "(< (div (- b a) 86400000) 2)");
  CHECK(term("(< s \"m\")") == "(str.< s \"m\")");
  CHECK(term("(not (exists (list 1 2)))", smt::Mode::Portable) ==
        "(not (not ((_ is nil) (cons 1 (cons 2 (as nil (ElmList Int)))))))");
}

TEST_CASE("symbols that clash with solver names are renamed", "[codegen]") {
  auto t = term("(and (> and 1) (> |two words| 2) (> elm_exists 3))");
  CHECK(t == "(and (> and_1 1) (> |two words| 2) (> elm_exists_1 3))");
}

TEST_CASE("constraint files", "[codegen]") {
  auto spec = smt::parse_spec(testing::fixture("age-range.spec"));
  REQUIRE(spec.size() == 2);
  CHECK(spec[0].name == "age-lower");
  CHECK(spec[0].term_text == "(>= PatientAge 0)");
  CHECK(smt::free_symbols(spec[1]) == std::vector<std::string>{"PatientAge"});
  CHECK(smt::free_symbols({"q", "(forall ((k Int)) (> (+ k n) k))"}) == std::vector<std::string>{"n"});

  CHECK_THROWS_AS(smt::parse_spec("(constraint a)"), Error);
  CHECK_THROWS_AS(smt::parse_spec("(constraint a true) (constraint a false)"), Error);
  CHECK_THROWS_AS(smt::parse_spec("(constraint assertion-3 true)"), Error);
  CHECK_THROWS_AS(smt::parse_spec("(constraint a (> x"), Error);

  auto expr = parse_prefix("(> PatientAge 3)");
  auto sorts = infer_sorts(expr, SymbolEnv{});
  std::vector<smt::ConditionInput> in{{"c", "/c", expr}};
  auto script = smt::build_script(in, sorts, spec, {});
  std::string text = smt::render(script);
  CHECK(text.find("(assert (! (>= PatientAge 0) :named age-lower))\n(assert (! (<= PatientAge 130) :named age-upper))\n(check-sat)\n") !=
        std::string::npos);
  CHECK(script.find_assertion("age-upper")->is_spec);

  std::vector<smt::SpecConstraint> bad{{"b", "(> Weight 3)"}};
  try {
    smt::build_script(in, sorts, bad, {});
    FAIL();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UndeclaredSymbol);
  }
}

TEST_CASE("rendering of individual commands", "[codegen]") {
  CHECK(smt::render(smt::SmtCommand{smt::Assert{"(= true true)", "assertion-1", "assertion-1"}}) ==
        "(assert (! (= true true) :named assertion-1))");
  CHECK(smt::render(smt::SmtCommand{smt::Assert{"(= true true)", std::nullopt, "assertion-1"}}) ==
        "(assert (= true true))");
  CHECK(smt::render(smt::SmtCommand{smt::DeclareConst{"PatientAgeInYears", "Int"}}) ==
        "(declare-const PatientAgeInYears Int)");

  SymbolEnv env;
  env.add({"xs", "AdverseEvent", Cardinality::List, false, "/d"});
  auto expr = parse_prefix("(exists xs)");
  std::vector<smt::ConditionInput> in{{"c", "/c", expr}};
  auto paper = smt::build_script(in, infer_sorts(expr, env), {}, {.mode = smt::Mode::PaperCompat, .want_cores = false, .logic = {}});
  CHECK(smt::render(paper).find("(declare-const xs (List AdverseEvent))\n") != std::string::npos);
}

TEST_CASE("restricting to a core keeps declarations", "[codegen]") {
  auto expr1 = parse_prefix("(> x 3)", "#a");
  auto expr2 = parse_prefix("(< x 1)", "#b");
  std::vector<elm::ElmExpression> both{expr1, expr2};
  auto sorts = infer_sorts(both, SymbolEnv{});
  std::vector<smt::ConditionInput> in{{"a", "/a", expr1}, {"b", "/b", expr2}};
  auto script = smt::build_script(in, sorts, {}, {});
  std::vector<std::string> core{"assertion-2"};
  auto cut = smt::restrict_to_core(script, core);
  CHECK(smt::render(cut) ==
        "(set-option :produce-unsat-cores true)\n(declare-const x Int)\n(assert (! (< x 1) :named assertion-2))\n(check-sat)\n");
  REQUIRE(cut.assertions.size() == 1);
  CHECK(cut.assertions[0].condition_id == "b");
}
