#pragma once

// Verification reports: verdicts folded into findings, rendered as a text
// table or as one JSON object per artifact.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "knart/artifact.hpp"
#include "knart/codegen.hpp"
#include "knart/elm.hpp"
#include "knart/solver.hpp"

namespace knart::report {

inline constexpr std::string_view kSchema = "knart-verify/1";

enum class ReportStatus { Sat, Unsat, Untranslatable, Unknown, Timeout, SolverError, ParseError };

inline std::string_view to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::Sat: return "sat";
    case ReportStatus::Unsat: return "unsat";
    case ReportStatus::Untranslatable: return "untranslatable";
    case ReportStatus::Unknown: return "unknown";
    case ReportStatus::Timeout: return "timeout";
    case ReportStatus::SolverError: return "solver-error";
    case ReportStatus::ParseError: return "parse-error";
  }
  return "?";
}

/// Process exit code contributed by one artifact.
inline int exit_code(ReportStatus s) {
  switch (s) {
    case ReportStatus::Sat: return 0;
    case ReportStatus::Unsat: return 1;
    default: return 2;
  }
}

/// Combines two statuses of one artifact; the one with the higher exit code
/// wins, and among equals the later enumerator.
inline ReportStatus worse(ReportStatus a, ReportStatus b) {
  if (exit_code(a) != exit_code(b)) return exit_code(a) > exit_code(b) ? a : b;
  return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

inline ReportStatus from_verdict(smt::Status s) {
  switch (s) {
    case smt::Status::Sat: return ReportStatus::Sat;
    case smt::Status::Unsat: return ReportStatus::Unsat;
    case smt::Status::Unknown: return ReportStatus::Unknown;
    case smt::Status::Timeout: return ReportStatus::Timeout;
    case smt::Status::SolverError: return ReportStatus::SolverError;
  }
  return ReportStatus::SolverError;
}

enum class Severity { UnsatCondition, SpecViolation, UnsupportedConstruct, ParseError };

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::UnsatCondition: return "UnsatCondition";
    case Severity::SpecViolation: return "SpecViolation";
    case Severity::UnsupportedConstruct: return "UnsupportedConstruct";
    case Severity::ParseError: return "ParseError";
  }
  return "?";
}

struct Finding {
  std::string assertion_name;
  std::string condition_id;
  std::string source_path;
  std::string rendered_term;
  Severity severity = Severity::UnsatCondition;
  /// Operator category for unsupported constructs.
  std::string category;
  std::string detail;
};

struct Timings {
  std::int64_t prep_ms = 0;
  std::int64_t translate_ms = 0;
  std::int64_t solve_ms = 0;
};

/// A rendered script and the solver's answer to it.
struct ScriptRun {
  /// Condition id in per-condition mode, empty for the joint script.
  std::string condition_id;
  smt::SmtScript script;
  std::string text;
  std::optional<smt::SolverVerdict> verdict;
};

struct VerificationReport {
  std::string source;
  std::string artifact_id;
  std::optional<ArtifactKind> artifact_kind;
  ReportStatus status = ReportStatus::Sat;
  elm::Metrics metrics;
  Timings timings;
  std::vector<Finding> findings;
  std::map<std::string, std::string> model;
  std::vector<std::string> warnings;
  std::vector<ScriptRun> runs;
};

/// Folds one solver verdict into `report`: core names become findings
/// through the script's assertion index, and model bindings are merged.
inline void add_verdict(VerificationReport& report, const smt::SmtScript& script, const smt::SolverVerdict& verdict) {
  report.status = worse(report.status, from_verdict(verdict.status));
  report.timings.solve_ms += verdict.solve_ms;
  if (verdict.core) {
    for (const auto& name : *verdict.core) {
      const smt::AssertionInfo* a = script.find_assertion(name);
      if (!a) continue;
      report.findings.push_back({a->name, a->condition_id, a->source_path, a->rendered,
                                 a->is_spec ? Severity::SpecViolation : Severity::UnsatCondition, "", ""});
    }
  }
  if (verdict.model) {
    for (const auto& [k, v] : verdict.model->bindings) report.model.emplace(k, v);
  }
  if (!verdict.message.empty() && verdict.status != smt::Status::Sat && verdict.status != smt::Status::Unsat) {
    report.warnings.push_back(verdict.message);
  }
}

/// Report for one artifact checked with a single script.
inline VerificationReport build_report(const KnowledgeArtifact& artifact, const elm::Metrics& metrics,
                                       const smt::SmtScript& script, const smt::SolverVerdict& verdict,
                                       const Timings& timings) {
  VerificationReport r;
  r.artifact_id = artifact.id;
  r.artifact_kind = artifact.kind;
  r.metrics = metrics;
  r.timings = timings;
  r.timings.solve_ms = 0;
  add_verdict(r, script, verdict);
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

inline nlohmann::ordered_json to_json(const VerificationReport& r, bool with_timings = true) {
  nlohmann::ordered_json j;
  j["schema"] = kSchema;
  j["source"] = r.source;
  j["artifact"] = r.artifact_id;
  j["kind"] = r.artifact_kind ? nlohmann::ordered_json(to_string(*r.artifact_kind)) : nlohmann::ordered_json(nullptr);
  j["status"] = to_string(r.status);
  j["metrics"] = {{"expr", r.metrics.expr_count}, {"oper", r.metrics.oper_count}};
  if (with_timings) {
    j["timings_ms"] = {{"prep", r.timings.prep_ms}, {"translate", r.timings.translate_ms}, {"solve", r.timings.solve_ms}};
  }
  auto findings = nlohmann::ordered_json::array();
  for (const auto& f : r.findings) {
    nlohmann::ordered_json o;
    o["assertion"] = f.assertion_name;
    o["condition"] = f.condition_id;
    o["source_path"] = f.source_path;
    o["severity"] = to_string(f.severity);
    o["term"] = f.rendered_term;
    if (!f.category.empty()) o["category"] = f.category;
    if (!f.detail.empty()) o["detail"] = f.detail;
    findings.push_back(std::move(o));
  }
  j["findings"] = std::move(findings);
  j["model"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.model) j["model"][k] = v;
  j["warnings"] = r.warnings;
  return j;
}

/// One compact JSON object per line.
inline std::string render_json(const VerificationReport& r, bool with_timings = true) {
  return to_json(r, with_timings).dump() + "\n";
}

inline std::string text_header() {
  std::ostringstream out;
  out << std::left << std::setw(28) << "Artifact" << std::setw(24) << "Kind" << std::right << std::setw(6) << "Expr"
      << std::setw(6) << "Oper" << std::setw(8) << "Prep" << std::setw(8) << "Tran" << std::setw(8) << "Solv"
      << "  Status\n";
  return out.str();
}

/// A table row echoing the Expr/Oper/Prep/Tran/Solv columns, then one
/// indented line per finding.
inline std::string render_text(const VerificationReport& r) {
  std::ostringstream out;
  std::string name = r.artifact_id.empty() ? r.source : r.artifact_id;
  if (name.size() > 27) name = name.substr(0, 24) + "...";
  out << std::left << std::setw(28) << name << std::setw(24)
      << (r.artifact_kind ? std::string(to_string(*r.artifact_kind)) : std::string("-")) << std::right << std::setw(6)
      << r.metrics.expr_count << std::setw(6) << r.metrics.oper_count << std::setw(8) << r.timings.prep_ms
      << std::setw(8) << r.timings.translate_ms << std::setw(8) << r.timings.solve_ms << "  " << to_string(r.status)
      << "\n";
  for (const auto& f : r.findings) {
    out << "    " << to_string(f.severity);
    if (!f.assertion_name.empty()) out << " " << f.assertion_name;
    if (!f.condition_id.empty()) out << " [" << f.condition_id << "]";
    if (!f.source_path.empty()) out << " at " << f.source_path;
    if (!f.category.empty()) out << " (" << f.category << ")";
    out << "\n";
    if (!f.rendered_term.empty()) out << "        " << f.rendered_term << "\n";
    if (!f.detail.empty()) out << "        " << f.detail << "\n";
  }
  if (!r.model.empty()) {
    out << "    model:";
    for (const auto& [k, v] : r.model) out << " " << k << "=" << v;
    out << "\n";
  }
  for (const auto& w : r.warnings) out << "    warning: " << w << "\n";
  return out.str();
}

}  // namespace knart::report
