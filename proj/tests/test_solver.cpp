#include <catch_amalgamated.hpp>

#include "knart/codegen.hpp"
#include "knart/solver.hpp"

using namespace knart;
using smt::Status;

namespace {

smt::SmtScript raw_script(std::vector<std::string> asserts, std::vector<smt::DeclareConst> consts = {}) {
  smt::SmtScript s;
  s.commands.push_back(smt::SetOption{":produce-unsat-cores", "true"});
  for (auto& c : consts) {
    s.commands.push_back(c);
    s.symbols.push_back({c.name, c.name, Sort::integer()});
  }
  int n = 1;
  for (auto& a : asserts) {
    std::string label = "assertion-" + std::to_string(n++);
    s.commands.push_back(smt::Assert{a, label, label});
    s.assertions.push_back({label, "c" + std::to_string(n - 1), "/p", false, a});
  }
  s.commands.push_back(smt::CheckSat{});
  return s;
}

smt::SolverConfig config(int timeout_ms = 10000) {
  smt::SolverConfig cfg;
  cfg.timeout_ms = timeout_ms;
  return cfg;
}

}  // namespace

TEST_CASE("solver transcripts are classified", "[solver]") {
  auto sat = smt::parse_solver_output("success\nsat\n(\n  (define-fun x () Int\n    (- 5))\n  (define-fun f ((a Int)) Int a)\n)\n");
  CHECK(sat.status == Status::Sat);
  REQUIRE(sat.model);
  CHECK(sat.model->bindings == std::map<std::string, std::string>{{"x", "(- 5)"}});

  auto tagged = smt::parse_solver_output("sat\n(model (define-fun b () Bool true))\n");
  CHECK(tagged.model->bindings.at("b") == "true");

  auto unsat = smt::parse_solver_output("unsat\n(assertion-1 spec-a)\n");
  CHECK(unsat.status == Status::Unsat);
  CHECK(*unsat.core == std::vector<std::string>{"assertion-1", "spec-a"});

  auto err = smt::parse_solver_output("(error \"line 3: unknown constant q\")\nunknown\n");
  CHECK(err.status == Status::Unknown);
  CHECK(err.errors == std::vector<std::string>{"line 3: unknown constant q"});

  CHECK_THROWS_AS(smt::parse_solver_output("sat\n(model"), Error);
}

TEST_CASE("model values read back into ELM values", "[solver]") {
  using elm::Value;
  CHECK(smt::interpret_model_value("(- 5)", Sort::integer()) == Value::integer(-5));
  CHECK(smt::interpret_model_value("18", Sort::integer()) == Value::integer(18));
  CHECK(smt::interpret_model_value("(/ 1.0 3.0)", Sort::real()) == Value::real(elm::Rational(1, 3)));
  CHECK(smt::interpret_model_value("(- (/ 7.0 2.0))", Sort::real()) == Value::real(elm::Rational(-7, 2)));
  CHECK(smt::interpret_model_value("false", Sort::boolean()) == Value::boolean(false));
  CHECK(smt::interpret_model_value("\"a\\u{7f}b\"", Sort::string()) == Value::string("a\x7f" "b"));
  CHECK(smt::interpret_model_value("(/ 1 2)", Sort::integer()) == std::nullopt);
  CHECK(smt::interpret_model_value("nil", Sort::list(Sort::integer())) == std::nullopt);
}

TEST_CASE("trivial scripts get the expected verdicts", "[solver][z3]") {
  auto unsat = smt::check(raw_script({"false"}), config());
  CHECK(unsat.status == Status::Unsat);
  REQUIRE(unsat.core);
  CHECK(*unsat.core == std::vector<std::string>{"assertion-1"});

  auto sat = smt::check(raw_script({"(> x 17)", "(< x 19)"}, {{"x", "Int"}}), config());
  CHECK(sat.status == Status::Sat);
  REQUIRE(sat.model);
  CHECK(sat.model->bindings.at("x") == "18");

  auto cfg = config();
  cfg.produce_cores = false;
  auto nocore = smt::check(raw_script({"(> x 1)", "(< x 0)"}, {{"x", "Int"}}), cfg);
  CHECK(nocore.status == Status::Unsat);
  CHECK_FALSE(nocore.core);
}

// Argument order of str.prefixof: the first argument is the prefix.
TEST_CASE("prefix probe fixes the string argument order", "[solver][z3]") {
  smt::SmtScript yes;
  yes.commands = {smt::Assert{"(str.prefixof \"pre\" \"prefix\")", std::nullopt, "a"}, smt::CheckSat{}};
  smt::SmtScript no;
  no.commands = {smt::Assert{"(str.prefixof \"prefix\" \"pre\")", std::nullopt, "a"}, smt::CheckSat{}};
  CHECK(smt::check(yes, config()).status == Status::Sat);
  CHECK(smt::check(no, config()).status == Status::Unsat);
}

TEST_CASE("the empty list satisfies a negated nonemptiness test", "[solver][z3]") {
  smt::SmtScript s;
  s.commands = {smt::DeclareSort{"E"},
                smt::DeclareDatatype{std::string(smt::kListDatatype)},
                smt::DeclareConst{"xs", "(ElmList E)"},
                smt::Assert{"(not (not ((_ is nil) xs)))", std::nullopt, "a"},
                smt::CheckSat{}};
  s.symbols.push_back({"xs", "xs", Sort::list(Sort::uninterpreted("E"))});
  auto v = smt::check(s, config());
  CHECK(v.status == Status::Sat);
  REQUIRE(v.model);
  CHECK(v.model->bindings.at("xs").find("nil") != std::string::npos);
}

TEST_CASE("failures are reported as statuses", "[solver]") {
  auto slow = config(300);
  slow.command = {"sh", "-c", "sleep 5"};
  auto t0 = std::chrono::steady_clock::now();
  auto v = smt::check(raw_script({"true"}), slow);
  CHECK(v.status == Status::Timeout);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));

  auto crash = config();
  crash.command = {"sh", "-c", "read line; exit 4"};
  auto c = smt::check(raw_script({"true"}), crash);
  CHECK(c.status == Status::SolverError);
  CHECK(c.message.find("4") != std::string::npos);

  auto bogus = smt::check(raw_script({"(> undeclared 1)"}), config());
  CHECK(bogus.status == Status::SolverError);
  CHECK_FALSE(bogus.message.empty());

  auto missing = config();
  missing.command = {"/nonexistent/solver-binary"};
  try {
    smt::check(raw_script({"true"}), missing);
    FAIL();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SolverNotFound);
  }
}

TEST_CASE("commands split like a shell would", "[solver]") {
  CHECK(proc::split_command("z3 -in") == std::vector<std::string>{"z3", "-in"});
  CHECK(proc::split_command("  cvc5  --lang 'smt2' \"a b\" ") ==
        std::vector<std::string>{"cvc5", "--lang", "smt2", "a b"});
}
