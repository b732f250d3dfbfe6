#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "knart/knart.hpp"
#include "support.hpp"

using namespace knart;
using testing::ExprGen;

namespace {

constexpr int kCases = 200;

elm::Assignment random_assignment(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> v(-8, 8);
  return {{"x", elm::Value::integer(v(rng))}, {"y", elm::Value::integer(v(rng))}, {"z", elm::Value::integer(v(rng))},
          {"p", elm::Value::boolean(v(rng) > 0)}, {"q", elm::Value::boolean(v(rng) % 2 == 0)}};
}

smt::SmtScript script_for(const elm::ElmExpression& e, smt::Mode mode, bool cores = true) {
  auto sorts = infer_sorts(e, SymbolEnv{});
  std::vector<smt::ConditionInput> in{{"c", "/c", e}};
  return smt::build_script(in, sorts, {}, {.mode = mode, .want_cores = cores, .logic = {}});
}

bool is_builtin(const std::string& s) {
  static const std::set<std::string> words = {
      "and", "or", "not", "=>", "xor", "=", "distinct", "ite", "+", "-", "*", "/", "div", "mod", "abs", ">", ">=", "<",
      "<=", "to_real", "to_int", "true", "false", "str.++", "str.prefixof", "str.suffixof", "str.<", "str.<=", "exists",
      "forall", "!", "_", "is", "as", "head", "tail", "insert", "nil", "Int", "Real", "Bool", "String", "List"};
  return words.contains(s);
}

/// Every atom in an assertion is a builtin, a literal, a keyword, a bound
/// variable, or a name introduced by an earlier command.
void check_declaration_before_use(const std::string& text) {
  std::set<std::string> declared;
  std::function<void(const sexpr::SExpr&, std::set<std::string>&)> walk = [&](const sexpr::SExpr& e,
                                                                             std::set<std::string>& bound) {
    if (e.is_string()) return;
    if (e.is_atom()) {
      const std::string& t = e.text;
      if (e.quoted ? false : (is_builtin(t) || t.starts_with(":") || elm::detail::numeric_atom(t))) return;
      INFO("atom " << t);
      CHECK((declared.contains(t) || bound.contains(t)));
      return;
    }
    if (e.children.size() == 3 && (e.children[0].is_atom("exists") || e.children[0].is_atom("forall"))) {
      auto inner = bound;
      for (const auto& b : e.children[1].children) inner.insert(b.children[0].text);
      walk(e.children[2], inner);
      return;
    }
    if (e.children.size() == 4 && e.children[0].is_atom("!")) {
      walk(e.children[1], bound);
      return;
    }
    for (const auto& c : e.children) walk(c, bound);
  };
  for (const auto& cmd : sexpr::parse_all(text)) {
    REQUIRE(cmd.is_list());
    const std::string& head = cmd.children[0].text;
    if (head == "declare-sort" || head == "declare-const") {
      declared.insert(cmd.children[1].text);
    } else if (head == "define-fun") {
      std::set<std::string> params;
      for (const auto& p : cmd.children[2].children) params.insert(p.children[0].text);
      walk(cmd.children[4], params);
      declared.insert(cmd.children[1].text);
    } else if (head == "declare-datatypes") {
      // ((Name n)) ((par (T) ((ctor (sel S) ...) ...)))
      for (const auto& d : cmd.children[1].children) declared.insert(d.children[0].text);
      for (const auto& body : cmd.children[2].children) {
        for (const auto& ctor : body.children.back().children) {
          declared.insert(ctor.children[0].text);
          for (std::size_t i = 1; i < ctor.children.size(); ++i) declared.insert(ctor.children[i].children[0].text);
        }
      }
    } else if (head == "assert") {
      std::set<std::string> none;
      walk(cmd.children[1], none);
    }
  }
}

}  // namespace

TEST_CASE("prefix rendering round trips for generated expressions", "[property]") {
  ExprGen gen(11);
  for (int i = 0; i < kCases; ++i) {
    auto e = gen.condition();
    auto text = elm::to_prefix(e);
    CHECK(elm::to_prefix(elm::parse_prefix(text)) == text);
    CHECK(elm::parse_prefix(text) == e);
  }
}

TEST_CASE("Not negates under every assignment", "[property]") {
  ExprGen gen(12);
  for (int i = 0; i < kCases; ++i) {
    auto e = gen.condition();
    auto a = random_assignment(gen.rng());
    auto v = elm::evaluate(e, a);
    auto n = elm::evaluate(elm::ElmExpression::unary(elm::UnaryOp::Not, e), a);
    CHECK(n.as_bool() == !v.as_bool());
  }
}

TEST_CASE("metrics do not depend on expression order", "[property]") {
  ExprGen gen(13);
  for (int i = 0; i < 50; ++i) {
    std::vector<elm::ElmExpression> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(gen.condition());
    auto m = elm::count_metrics(xs);
    std::shuffle(xs.begin(), xs.end(), gen.rng());
    CHECK(elm::count_metrics(xs) == m);
    CHECK(m.expr_count == 5);
  }
}

TEST_CASE("unification is commutative and idempotent", "[property]") {
  std::mt19937_64 rng(14);
  auto attempt = [](const Sort& a, const Sort& b) -> std::optional<Sort> {
    try {
      return unify(a, b);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  for (int i = 0; i < 1000; ++i) {
    Sort a = testing::random_sort(rng), b = testing::random_sort(rng);
    auto ab = attempt(a, b), ba = attempt(b, a);
    REQUIRE(ab.has_value() == ba.has_value());
    if (ab) CHECK(*ab == *ba);
    auto aa = attempt(a, a);
    REQUIRE(aa);
    CHECK(*aa == a);
  }
}

TEST_CASE("rendered scripts are balanced and declare before use", "[property]") {
  ExprGen gen(15);
  for (int i = 0; i < kCases; ++i) {
    auto e = testing::with_paths(gen.condition());
    for (auto mode : {smt::Mode::Portable, smt::Mode::PaperCompat}) {
      auto text = smt::render(script_for(e, mode));
      std::istringstream lines(text);
      for (std::string line; std::getline(lines, line);) {
        int depth = 0;
        bool in_string = false;
        for (char c : line) {
          if (c == '"') in_string = !in_string;
          if (in_string) continue;
          depth += c == '(' ? 1 : c == ')' ? -1 : 0;
          REQUIRE(depth >= 0);
        }
        CHECK(depth == 0);
      }
      check_declaration_before_use(text);
      CHECK(text.ends_with("(check-sat)\n"));
    }
  }
  check_declaration_before_use(
      smt::render(script_for(elm::parse_prefix("(and (exists (list 1)) p)"), smt::Mode::PaperCompat)));
}

TEST_CASE("the assertion index is a bijection onto conditions and constraints", "[property]") {
  ExprGen gen(16);
  auto spec = smt::parse_spec("(constraint lo (>= x (- 100))) (constraint hi (<= x 100))");
  for (int i = 0; i < 50; ++i) {
    std::vector<elm::ElmExpression> roots;
    std::vector<smt::ConditionInput> in;
    for (int k = 0; k < 3; ++k) {
      auto e = testing::with_paths(elm::ElmExpression::nary(elm::NaryOp::And, {gen.condition(), elm::parse_prefix("(> x 0)")}),
                                   "#" + std::to_string(k));
      roots.push_back(e);
      in.push_back({"c" + std::to_string(k), "/c" + std::to_string(k), e});
    }
    auto script = smt::build_script(in, infer_sorts(roots, SymbolEnv{}), spec, {});
    std::set<std::string> names, ids;
    for (const auto& a : script.assertions) {
      names.insert(a.name);
      ids.insert(a.is_spec ? "spec:" + a.name : a.condition_id);
    }
    CHECK(names.size() == 5);
    CHECK(ids == std::set<std::string>{"c0", "c1", "c2", "spec:hi", "spec:lo"});
  }
}

TEST_CASE("renaming symbols renames the script and nothing else", "[property]") {
  ExprGen gen(17);
  for (int i = 0; i < kCases; ++i) {
    auto e = testing::with_paths(gen.condition());
    std::map<std::string, elm::ElmExpression> to;
    std::map<std::string, std::string> names{{"x", "Alpha"}, {"y", "Beta"}, {"z", "Gamma"}, {"p", "Delta"}, {"q", "Eps"}};
    for (const auto& [from, dest] : names) to.emplace(from, elm::ElmExpression::symbol(dest));
    auto renamed = testing::with_paths(elm::substitute(e, to));

    auto original = sexpr::parse_all(smt::render(script_for(e, smt::Mode::Portable)));
    auto other = sexpr::parse_all(smt::render(script_for(renamed, smt::Mode::Portable)));
    std::function<void(sexpr::SExpr&)> rename = [&](sexpr::SExpr& s) {
      if (s.is_atom() && names.contains(s.text)) s.text = names.at(s.text);
      for (auto& c : s.children) rename(c);
    };
    std::string a, b;
    for (auto& s : original) {
      rename(s);
      a += sexpr::to_string(s) + "\n";
    }
    for (auto& s : other) b += sexpr::to_string(s) + "\n";
    CHECK(a == b);
  }
}

TEST_CASE("both list encodings agree without list existence tests", "[property][z3]") {
  ExprGen gen(18, {4, {"x", "y"}, {"p"}, true});
  smt::SolverConfig cfg;
  for (int i = 0; i < 40; ++i) {
    auto e = testing::with_paths(gen.condition());
    auto portable = smt::check(script_for(e, smt::Mode::Portable), cfg);
    auto paper = smt::check(script_for(e, smt::Mode::PaperCompat), cfg);
    INFO(elm::to_prefix(e));
    CHECK(portable.status == paper.status);
  }
}

TEST_CASE("ingest maps arbitrary bytes to structured errors", "[property]") {
  std::mt19937_64 rng(19);
  std::string base = testing::fixture("os-01.xml");
  std::uniform_int_distribution<std::size_t> pos(0, base.size() - 1);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 500; ++i) {
    std::string doc = base;
    int edits = 1 + i % 8;
    for (int k = 0; k < edits; ++k) {
      switch (k % 3) {
        case 0: doc[pos(rng) % doc.size()] = static_cast<char>(byte(rng)); break;
        case 1: doc.erase(pos(rng) % doc.size(), 1 + byte(rng) % 20); break;
        default: doc.insert(pos(rng) % doc.size(), 1, "<>/\"='&"[byte(rng) % 7]); break;
      }
      if (doc.empty()) doc = "<";
    }
    try {
      auto a = load_artifact(doc);
      auto b = load_artifact(doc);
      CHECK(a.conditions.size() == b.conditions.size());
      CHECK(a.id == b.id);
      auto env = extract_symbol_env(a);
      for (const auto& c : a.conditions) {
        try {
          infer_sorts(elm::parse_elm(*c.raw_expression), env);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
      // Any structured error is acceptable; other exceptions escape and fail.
    }
  }
}
