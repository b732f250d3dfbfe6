#pragma once

// Interactive SMT-LIB session with an external solver: send the script,
// read the verdict, then ask for a model or an unsat core.

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "knart/codegen.hpp"
#include "knart/elm.hpp"
#include "knart/error.hpp"
#include "knart/process.hpp"
#include "knart/sexpr.hpp"
#include "knart/sort.hpp"

namespace knart::smt {

inline constexpr std::string_view kDefaultSolverCommand = "z3 -in";
inline constexpr int kDefaultTimeoutMs = 10000;
/// Extra time granted for model/core retrieval and process shutdown.
inline constexpr int kGraceMs = 2000;

struct SolverConfig {
  std::vector<std::string> command = proc::split_command(kDefaultSolverCommand);
  int timeout_ms = kDefaultTimeoutMs;
  bool produce_models = true;
  bool produce_cores = true;
};

enum class Status { Sat, Unsat, Unknown, Timeout, SolverError };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Sat: return "sat";
    case Status::Unsat: return "unsat";
    case Status::Unknown: return "unknown";
    case Status::Timeout: return "timeout";
    case Status::SolverError: return "solver-error";
  }
  return "?";
}

/// Solver-reported ground terms, whitespace-normalized.
struct ModelAssignment {
  std::map<std::string, std::string> bindings;
};

struct SolverVerdict {
  Status status = Status::Unknown;
  std::optional<ModelAssignment> model;
  std::optional<std::vector<std::string>> core;
  std::int64_t solve_ms = 0;
  /// Solver error text, or stderr of a failed session.
  std::string message;
};

struct ParsedOutput {
  std::optional<Status> status;
  std::optional<ModelAssignment> model;
  std::optional<std::vector<std::string>> core;
  std::vector<std::string> errors;
};

namespace detail {

inline std::optional<Status> verdict_atom(const sexpr::SExpr& e) {
  if (e.is_atom("sat")) return Status::Sat;
  if (e.is_atom("unsat")) return Status::Unsat;
  if (e.is_atom("unknown")) return Status::Unknown;
  return std::nullopt;
}

inline bool is_error(const sexpr::SExpr& e) {
  return e.is_list() && !e.children.empty() && e.children[0].is_atom("error");
}

inline std::string error_text(const sexpr::SExpr& e) {
  return e.children.size() > 1 ? e.children[1].text : sexpr::to_string(e);
}

/// Zero-arity `define-fun` entries of a model block; `(model ...)` and bare
/// lists are both accepted.
inline ModelAssignment read_model(const sexpr::SExpr& e) {
  ModelAssignment m;
  std::size_t start = (!e.children.empty() && e.children[0].is_atom("model")) ? 1 : 0;
  for (std::size_t i = start; i < e.children.size(); ++i) {
    const auto& d = e.children[i];
    if (!d.is_list() || d.children.size() != 5 || !d.children[0].is_atom("define-fun")) continue;
    if (!d.children[2].is_list() || !d.children[2].children.empty()) continue;
    m.bindings[d.children[1].text] = sexpr::to_string(d.children[4]);
  }
  return m;
}

inline std::vector<std::string> read_core(const sexpr::SExpr& e) {
  std::vector<std::string> names;
  for (const auto& c : e.children) {
    if (c.is_atom()) names.push_back(c.text);
  }
  return names;
}

}  // namespace detail

/// Classifies one session's standard output. Stray atoms (banners,
/// `success`) are ignored; a list following `sat` is read as a model and
/// one following `unsat` as a core. Throws ProtocolError on unbalanced
/// text.
inline ParsedOutput parse_solver_output(std::string_view text) {
  ParsedOutput out;
  for (const auto& e : sexpr::parse_all(text)) {
    if (auto s = detail::verdict_atom(e)) {
      out.status = s;
    } else if (detail::is_error(e)) {
      out.errors.push_back(detail::error_text(e));
    } else if (e.is_list() && out.status == Status::Sat && !out.model) {
      out.model = detail::read_model(e);
    } else if (e.is_list() && out.status == Status::Unsat && !out.core) {
      out.core = detail::read_core(e);
    }
  }
  return out;
}

/// Reads a model value back into an ELM value for the primitive sorts.
/// Returns nullopt for opaque values (lists, uninterpreted elements).
inline std::optional<elm::Value> interpret_model_value(std::string_view text, const Sort& sort) {
  sexpr::SExpr e;
  try {
    e = sexpr::parse_one(text);
  } catch (const Error&) {
    return std::nullopt;
  }
  auto rational = [](const sexpr::SExpr& x, auto&& self) -> std::optional<elm::Rational> {
    if (x.is_atom()) {
      auto v = elm::detail::numeric_atom(x.text);
      if (!v) return std::nullopt;
      return v->kind() == elm::Value::Kind::Int ? elm::Rational(v->as_int()) : v->as_real();
    }
    if (!x.is_list() || x.children.empty()) return std::nullopt;
    const auto& head = x.children[0];
    if (head.is_atom("-") && x.children.size() == 2) {
      auto v = self(x.children[1], self);
      if (v) return -*v;
      return std::nullopt;
    }
    if (head.is_atom("/") && x.children.size() == 3) {
      auto a = self(x.children[1], self), b = self(x.children[2], self);
      if (a && b && *b != 0) return *a / *b;
      return std::nullopt;
    }
    if (head.is_atom("to_real") && x.children.size() == 2) return self(x.children[1], self);
    return std::nullopt;
  };
  switch (sort.kind()) {
    case Sort::Kind::Bool:
      if (e.is_atom("true")) return elm::Value::boolean(true);
      if (e.is_atom("false")) return elm::Value::boolean(false);
      return std::nullopt;
    case Sort::Kind::Int:
    case Sort::Kind::Timestamp: {
      auto r = rational(e, rational);
      if (!r || boost::multiprecision::denominator(*r) != 1) return std::nullopt;
      elm::Integer i = boost::multiprecision::numerator(*r);
      if (sort.kind() == Sort::Kind::Int) return elm::Value::integer(i);
      return elm::Value::timestamp(static_cast<std::int64_t>(i));
    }
    case Sort::Kind::Real: {
      auto r = rational(e, rational);
      if (!r) return std::nullopt;
      return elm::Value::real(*r);
    }
    case Sort::Kind::String: {
      if (!e.is_string()) return std::nullopt;
      // Solvers print non-printable characters as \u{XX}; decode the ASCII range.
      std::string out;
      const std::string& s = e.text;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.compare(i, 3, "\\u{") == 0) {
          auto close = s.find('}', i);
          if (close != std::string::npos) {
            unsigned long code = std::stoul(s.substr(i + 3, close - i - 3), nullptr, 16);
            if (code < 0x80) {
              out.push_back(static_cast<char>(code));
              i = close;
              continue;
            }
          }
        }
        out.push_back(s[i]);
      }
      return elm::Value::string(std::move(out));
    }
    default:
      return std::nullopt;
  }
}

namespace detail {

/// Pops the next complete response from `buffer`.
inline std::optional<sexpr::SExpr> next_response(std::string& buffer, bool at_eof) {
  for (;;) {
    auto n = sexpr::complete_prefix(buffer, at_eof);
    if (!n) return std::nullopt;
    std::string chunk = buffer.substr(0, *n);
    buffer.erase(0, *n);
    auto parsed = sexpr::parse_all(chunk);
    if (!parsed.empty()) return parsed.front();
    if (buffer.empty()) return std::nullopt;
  }
}

}  // namespace detail

/// Runs one interactive session. Never throws for solver misbehavior:
/// errors, crashes and timeouts are reported in the verdict. Throws
/// SolverNotFound if the command cannot be started.
inline SolverVerdict check(const SmtScript& script, const SolverConfig& cfg) {
  using namespace std::chrono;
  SolverVerdict verdict;
  proc::ChildProcess child(cfg.command);
  auto start = proc::Clock::now();
  auto deadline = start + milliseconds(std::max(cfg.timeout_ms, 1));

  std::string text;
  if (cfg.produce_models) text += "(set-option :produce-models true)\n";
  text += render(script);

  std::vector<std::string> errors;
  std::optional<Status> status;
  auto finish = [&](Status s) {
    verdict.status = s;
    verdict.solve_ms = duration_cast<milliseconds>(proc::Clock::now() - start).count();
    child.kill();
    child.wait(proc::Clock::now() + milliseconds(kGraceMs));
    return verdict;
  };

  // Scans complete responses as they arrive; stops at the verdict.
  auto scan_verdict = [&](std::string& buffer, bool at_eof) {
    while (auto r = detail::next_response(buffer, at_eof)) {
      if (auto s = detail::verdict_atom(*r)) {
        status = s;
        return true;
      }
      if (detail::is_error(*r)) errors.push_back(detail::error_text(*r));
    }
    return false;
  };

  try {
    bool sent = child.send(text, deadline);
    auto wait = child.receive([&](std::string& buffer) { return scan_verdict(buffer, false); }, deadline);
    if (wait == proc::ChildProcess::Wait::Eof && !status) scan_verdict(child.output(), true);
    verdict.solve_ms = duration_cast<milliseconds>(proc::Clock::now() - start).count();

    if (!status) {
      if (wait == proc::ChildProcess::Wait::Timeout || (!sent && proc::Clock::now() >= deadline)) {
        verdict.message = "no verdict within " + std::to_string(cfg.timeout_ms) + " ms";
        return finish(Status::Timeout);
      }
      int code = child.wait(proc::Clock::now() + milliseconds(kGraceMs));
      verdict.message = !errors.empty() ? errors.front()
                                        : "solver exited with status " + std::to_string(code) +
                                              (child.errors().empty() ? "" : ": " + child.errors());
      return finish(Status::SolverError);
    }
    if (!errors.empty()) {
      verdict.message = errors.front();
      return finish(Status::SolverError);
    }
    verdict.status = *status;

    auto follow_deadline = proc::Clock::now() + milliseconds(cfg.timeout_ms + kGraceMs);
    std::optional<sexpr::SExpr> answer;
    auto ask = [&](std::string_view command) {
      if (!child.send(command, follow_deadline)) return;
      child.receive(
          [&](std::string& buffer) {
            answer = detail::next_response(buffer, false);
            return answer.has_value();
          },
          follow_deadline);
    };
    if (*status == Status::Sat && cfg.produce_models) {
      ask("(get-model)\n");
      if (answer && detail::is_error(*answer)) {
        verdict.message = detail::error_text(*answer);
      } else if (answer && answer->is_list()) {
        ModelAssignment raw = detail::read_model(*answer);
        ModelAssignment model;
        for (auto& [name, value] : raw.bindings) {
          if (const DeclaredSymbol* s = script.find_smt_symbol(name)) model.bindings[s->elm_name] = value;
          else if (const DeclaredSymbol* q = script.find_smt_symbol("|" + name + "|")) model.bindings[q->elm_name] = value;
        }
        verdict.model = std::move(model);
      }
    } else if (*status == Status::Unsat && cfg.produce_cores) {
      ask("(get-unsat-core)\n");
      if (answer && detail::is_error(*answer)) {
        verdict.message = detail::error_text(*answer);
      } else if (answer && answer->is_list()) {
        verdict.core = detail::read_core(*answer);
      }
    }

    child.send("(exit)\n", proc::Clock::now() + milliseconds(kGraceMs));
    child.close_stdin();
    child.wait(proc::Clock::now() + milliseconds(kGraceMs));
    return verdict;
  } catch (const Error& e) {
    verdict.message = e.what();
    return finish(Status::SolverError);
  }
}

}  // namespace knart::smt
