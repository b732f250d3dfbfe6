#pragma once

// Whole-artifact verification: load, translate, solve, report.

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "knart/artifact.hpp"
#include "knart/codegen.hpp"
#include "knart/elm.hpp"
#include "knart/report.hpp"
#include "knart/solver.hpp"
#include "knart/sort.hpp"

namespace knart {

struct VerifyOptions {
  smt::Mode mode = smt::Mode::Portable;
  /// One script per condition instead of one joint script.
  bool per_condition = false;
  bool want_cores = true;
  std::optional<std::string> logic;
  std::vector<smt::SpecConstraint> spec;
  smt::SolverConfig solver;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ms(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

/// Named expressions whose bodies are in the translatable subset are
/// expanded at their references; the others stay free symbols.
class Definitions {
 public:
  explicit Definitions(const KnowledgeArtifact& artifact) {
    for (const auto& d : artifact.expressions) {
      if (!d.expression) continue;
      try {
        bodies_.emplace(d.name, elm::parse_elm(*d.expression));
      } catch (const Error&) {
      }
    }
  }

  elm::ElmExpression expand(const elm::ElmExpression& e) const {
    std::vector<std::string> stack;
    return expand(e, stack);
  }

 private:
  elm::ElmExpression expand(const elm::ElmExpression& e, std::vector<std::string>& stack) const {
    std::map<std::string, elm::ElmExpression> bindings;
    for (const auto& name : elm::collect_symbols(e)) {
      auto it = bodies_.find(name);
      if (it == bodies_.end()) continue;
      if (std::find(stack.begin(), stack.end(), name) != stack.end()) {
        throw Error(ErrorKind::CyclicDefinition, "expression '" + name + "' refers to itself",
                    it->second.source_path());
      }
      stack.push_back(name);
      bindings.emplace(name, expand(it->second, stack));
      stack.pop_back();
    }
    return bindings.empty() ? e : elm::substitute(e, bindings);
  }

  std::map<std::string, elm::ElmExpression> bodies_;
};

/// One expression per condition and per named expression; operators are
/// counted on the parsed tree, or on the raw XML outside the subset.
inline elm::Metrics artifact_metrics(const KnowledgeArtifact& artifact) {
  elm::Metrics m;
  auto count = [&](const xml::Element* raw) {
    ++m.expr_count;
    if (!raw) return;
    try {
      m.oper_count += elm::count_operator_nodes(elm::parse_elm(*raw));
    } catch (const Error&) {
      m.oper_count += elm::count_raw_operator_nodes(*raw);
    }
  };
  for (const auto& c : artifact.conditions) count(c.raw_expression);
  for (const auto& d : artifact.expressions) count(d.expression);
  return m;
}

inline report::Finding finding_for(const Error& e, const ConditionUnit& unit) {
  report::Finding f;
  f.condition_id = unit.id;
  f.source_path = e.source_path().empty() ? unit.source_path : e.source_path();
  f.detail = e.what();
  bool unsupported = e.kind() == ErrorKind::UnsupportedOperator || e.kind() == ErrorKind::UnknownOperator;
  f.severity = unsupported ? report::Severity::UnsupportedConstruct : report::Severity::ParseError;
  f.category = e.category();
  return f;
}

inline std::vector<smt::SpecConstraint> relevant_constraints(const std::vector<smt::SpecConstraint>& spec,
                                                             const SortEnv& env, std::vector<std::string>& skipped) {
  std::vector<smt::SpecConstraint> out;
  for (const auto& c : spec) {
    bool all = true;
    for (const auto& s : smt::free_symbols(c)) all = all && env.symbols.contains(s);
    if (all) {
      out.push_back(c);
    } else {
      skipped.push_back(c.name);
    }
  }
  return out;
}

}  // namespace detail

/// Verifies one artifact. Artifact-level failures (malformed XML, schema
/// violations) become a parse-error report. Throws SolverNotFound.
inline report::VerificationReport verify_artifact(std::string_view bytes, const std::string& source,
                                                  const VerifyOptions& options) {
  using report::ReportStatus;
  report::VerificationReport r;
  r.source = source;

  auto prep_start = detail::Clock::now();
  KnowledgeArtifact artifact;
  SymbolEnv env;
  try {
    artifact = load_artifact(bytes);
    r.artifact_id = artifact.id;
    r.artifact_kind = artifact.kind;
    env = extract_symbol_env(artifact);
  } catch (const Error& e) {
    r.status = ReportStatus::ParseError;
    report::Finding f;
    f.severity = report::Severity::ParseError;
    f.source_path = e.source_path();
    f.detail = e.what();
    r.findings.push_back(std::move(f));
    r.timings.prep_ms = detail::elapsed_ms(prep_start);
    return r;
  }
  r.warnings = artifact.warnings;
  r.timings.prep_ms = detail::elapsed_ms(prep_start);

  auto translate_start = detail::Clock::now();
  detail::Definitions defs(artifact);
  r.metrics = detail::artifact_metrics(artifact);

  // Each condition is parsed, sorted and translated on its own first, so an
  // untranslatable one is reported and left out instead of sinking the rest.
  struct Survivor {
    smt::ConditionInput input;
    SortEnv sorts;
  };
  std::vector<Survivor> survivors;
  for (std::size_t i = 0; i < artifact.conditions.size(); ++i) {
    const ConditionUnit& unit = artifact.conditions[i];
    try {
      elm::ElmExpression expr = defs.expand(elm::parse_elm(*unit.raw_expression));
      SortEnv sorts = infer_sorts(expr, env);
      smt::translate_term(expr, sorts, options.mode);
      survivors.push_back({{unit.id, unit.source_path, expr, i + 1}, std::move(sorts)});
    } catch (const Error& e) {
      report::Finding f = detail::finding_for(e, unit);
      r.status = report::worse(r.status, f.severity == report::Severity::UnsupportedConstruct
                                             ? ReportStatus::Untranslatable
                                             : ReportStatus::ParseError);
      r.findings.push_back(std::move(f));
    }
  }

  std::vector<std::string> skipped;
  auto make_run = [&](std::span<const smt::ConditionInput> inputs, const SortEnv& sorts, std::string id) {
    auto spec = detail::relevant_constraints(options.spec, sorts, skipped);
    smt::CodegenOptions cg;
    cg.mode = options.mode;
    cg.want_cores = options.want_cores;
    cg.logic = options.logic;
    report::ScriptRun run;
    run.condition_id = std::move(id);
    run.script = smt::build_script(inputs, sorts, spec, cg);
    run.text = smt::render(run.script);
    return run;
  };

  try {
    if (options.per_condition) {
      for (const auto& s : survivors) r.runs.push_back(make_run(std::span(&s.input, 1), s.sorts, s.input.id));
    } else if (!survivors.empty()) {
      std::vector<smt::ConditionInput> inputs;
      std::vector<elm::ElmExpression> roots;
      for (const auto& s : survivors) {
        inputs.push_back(s.input);
        roots.push_back(s.input.expr);
      }
      SortEnv joint = infer_sorts(roots, env);
      r.runs.push_back(make_run(inputs, joint, ""));
    }
  } catch (const Error& e) {
    // Conflicts that only arise between conditions.
    report::Finding f;
    f.severity = report::Severity::ParseError;
    f.source_path = e.source_path();
    f.detail = e.what();
    r.findings.push_back(std::move(f));
    r.status = report::worse(r.status, ReportStatus::ParseError);
    r.runs.clear();
  }
  std::sort(skipped.begin(), skipped.end());
  skipped.erase(std::unique(skipped.begin(), skipped.end()), skipped.end());
  for (const auto& name : skipped) {
    r.warnings.push_back("constraint '" + name + "' not applied: it mentions symbols this artifact does not declare");
  }
  r.timings.translate_ms = detail::elapsed_ms(translate_start);

  smt::SolverConfig cfg = options.solver;
  cfg.produce_cores = options.want_cores;
  for (auto& run : r.runs) {
    run.verdict = smt::check(run.script, cfg);
    report::add_verdict(r, run.script, *run.verdict);
  }
  return r;
}

}  // namespace knart
