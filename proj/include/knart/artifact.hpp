#pragma once

// KNART r1.3 ingestion: the pragmatic subset needed for verification
// (metadata, external data, named expressions, conditions).

#include <algorithm>
#include <cctype>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "knart/error.hpp"
#include "knart/xml.hpp"

namespace knart {

inline constexpr std::string_view kKnartNamespace = "urn:hl7-org:knowledgeartifact:r1";

enum class ArtifactKind { EcaRule, OrderSet, DocumentationTemplate };
enum class Cardinality { Single, List };

inline std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::EcaRule: return "EcaRule";
    case ArtifactKind::OrderSet: return "OrderSet";
    case ArtifactKind::DocumentationTemplate: return "DocumentationTemplate";
  }
  return "?";
}

struct ExternalDataDef {
  std::string name;
  std::string value_type_name;
  Cardinality cardinality = Cardinality::Single;
  std::string source_path;
  const xml::Element* expression = nullptr;
};

struct NamedExpressionDef {
  std::string name;
  /// Empty when the result type cannot be read off the definition; such
  /// symbols are typed bottom-up from their uses.
  std::string value_type_name;
  Cardinality cardinality = Cardinality::Single;
  std::string source_path;
  const xml::Element* expression = nullptr;
};

struct ConditionUnit {
  std::string id;
  /// Path of the `condition` element.
  std::string source_path;
  /// The condition's `logic` element.
  const xml::Element* raw_expression = nullptr;
};

/// A parsed artifact. Raw expression pointers refer into `document`, which
/// the artifact co-owns, so copies stay valid.
struct KnowledgeArtifact {
  std::string id;
  std::string title;
  ArtifactKind kind = ArtifactKind::EcaRule;
  std::vector<ExternalDataDef> external_data;
  std::vector<NamedExpressionDef> expressions;
  std::vector<ConditionUnit> conditions;
  std::vector<std::string> warnings;
  std::shared_ptr<const xml::Document> document;
  std::chrono::microseconds load_time{0};
};

struct SymbolInfo {
  std::string name;
  std::string value_type_name;
  Cardinality cardinality = Cardinality::Single;
  bool nullable = false;
  std::string source_path;
};

/// Declared symbols in document order.
class SymbolEnv {
 public:
  /// Adds a declaration; an identical redeclaration is ignored, a conflicting
  /// one throws DuplicateSymbol.
  void add(SymbolInfo info) {
    if (const SymbolInfo* existing = find(info.name)) {
      if (existing->value_type_name == info.value_type_name && existing->cardinality == info.cardinality &&
          existing->nullable == info.nullable) {
        return;
      }
      throw Error(ErrorKind::DuplicateSymbol,
                  "'" + info.name + "' declared as " + describe(*existing) + " and as " + describe(info),
                  info.source_path, existing->source_path);
    }
    index_.emplace(info.name, entries_.size());
    entries_.push_back(std::move(info));
  }

  const SymbolInfo* find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  const std::vector<SymbolInfo>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  static std::string describe(const SymbolInfo& s) {
    return (s.cardinality == Cardinality::List ? "List<" + s.value_type_name + ">" : s.value_type_name);
  }

  std::vector<SymbolInfo> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

namespace detail {

inline bool in_knart_ns(const xml::Element& e) { return e.ns.empty() || e.ns == kKnartNamespace; }

inline const xml::Element* knart_child(const xml::Element& parent, std::string_view local) {
  for (const auto& c : parent.children) {
    if (c.local == local && in_knart_ns(c)) return &c;
  }
  return nullptr;
}

inline std::optional<ArtifactKind> parse_kind(std::string_view value) {
  std::string norm;
  for (char c : value) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (norm == "rule" || norm == "ecarule" || norm == "eventconditionactionrule") return ArtifactKind::EcaRule;
  if (norm == "orderset") return ArtifactKind::OrderSet;
  if (norm == "documentationtemplate") return ArtifactKind::DocumentationTemplate;
  return std::nullopt;
}

inline const xml::Element* expression_of(const xml::Element& def) {
  if (const xml::Element* e = def.child("expression"); e && !e->xsi_type().empty()) return e;
  for (const auto& c : def.children) {
    if (!c.xsi_type().empty()) return &c;
  }
  return nullptr;
}

struct DerivedType {
  std::string name;
  Cardinality cardinality;
};

inline std::optional<DerivedType> from_type_specifier(const xml::Element& spec) {
  std::string t = spec.xsi_type();
  if (t == "NamedTypeSpecifier") {
    if (const std::string* n = spec.attribute("name")) return DerivedType{spec.resolve_qname(*n).second, Cardinality::Single};
  } else if (t == "ListTypeSpecifier") {
    if (const xml::Element* elem = spec.child("elementType")) {
      if (auto inner = from_type_specifier(*elem); inner && inner->cardinality == Cardinality::Single) {
        return DerivedType{inner->name, Cardinality::List};
      }
    }
  }
  return std::nullopt;
}

/// Reads a definition's result type from explicit annotations or, failing
/// that, from the shape of its expression.
inline std::optional<DerivedType> derive_type(const xml::Element& def, const xml::Element* expr) {
  for (const xml::Element* e : {&def, expr}) {
    if (!e) continue;
    if (const std::string* rt = e->attribute("resultTypeName")) {
      return DerivedType{e->resolve_qname(*rt).second, Cardinality::Single};
    }
    if (const xml::Element* spec = e->child("resultTypeSpecifier")) {
      if (auto d = from_type_specifier(*spec)) return d;
    }
  }
  if (!expr) return std::nullopt;
  static const std::set<std::string, std::less<>> integer_ops = {
      "CalculateAge", "CalculateAgeAt", "Count", "DifferenceBetween", "DurationBetween", "Length"};
  static const std::set<std::string, std::less<>> boolean_ops = {
      "And",     "Or",   "Not",     "Xor",         "Implies",   "Exists",  "Equal",
      "NotEqual", "Greater", "GreaterOrEqual", "Less", "LessOrEqual", "In", "StartsWith",
      "EndsWith", "IsNull", "IsTrue", "IsFalse"};
  std::string type = expr->xsi_type();
  if (type == "Retrieve") {
    const std::string* dt = expr->attribute("dataType");
    return DerivedType{dt ? expr->resolve_qname(*dt).second : "Any", Cardinality::List};
  }
  if (type == "Literal") {
    if (const std::string* vt = expr->attribute("valueType")) {
      return DerivedType{expr->resolve_qname(*vt).second, Cardinality::Single};
    }
  }
  if (integer_ops.contains(type)) return DerivedType{"Integer", Cardinality::Single};
  if (boolean_ops.contains(type)) return DerivedType{"Boolean", Cardinality::Single};
  return std::nullopt;
}

inline void collect_conditions(const xml::Element& e, std::vector<const xml::Element*>& out) {
  for (const auto& c : e.children) {
    if (c.local == "condition" && in_knart_ns(c)) {
      out.push_back(&c);
    } else {
      collect_conditions(c, out);
    }
  }
}

}  // namespace detail

/// Parses a KNART document. Throws MalformedXml, UnrecognizedRoot or
/// SchemaViolation.
inline KnowledgeArtifact load_artifact(std::string_view document) {
  auto start = std::chrono::steady_clock::now();
  auto doc = std::make_shared<const xml::Document>(xml::parse(document));
  const xml::Element& root = doc->root;
  if (root.local != "knowledgeDocument" || !detail::in_knart_ns(root)) {
    throw Error(ErrorKind::UnrecognizedRoot,
                "expected knowledgeDocument in " + std::string(kKnartNamespace) + ", found '" + root.local + "'" +
                    (root.ns.empty() ? "" : " in " + root.ns),
                root.path);
  }

  KnowledgeArtifact ka;
  ka.document = doc;

  const xml::Element* metadata = detail::knart_child(root, "metadata");
  if (!metadata) throw Error(ErrorKind::SchemaViolation, "missing required element metadata", root.path);
  const xml::Element* type = detail::knart_child(*metadata, "artifactType");
  const std::string* type_value = type ? type->attribute("value") : nullptr;
  if (!type_value) {
    throw Error(ErrorKind::SchemaViolation, "missing required element metadata/artifactType@value", metadata->path);
  }
  auto kind = detail::parse_kind(*type_value);
  if (!kind) throw Error(ErrorKind::SchemaViolation, "unknown artifactType '" + *type_value + "'", type->path);
  ka.kind = *kind;
  if (const xml::Element* ids = detail::knart_child(*metadata, "identifiers")) {
    if (const xml::Element* id = detail::knart_child(*ids, "identifier")) {
      if (const std::string* ext = id->attribute("extension")) {
        ka.id = *ext;
      } else if (const std::string* r = id->attribute("root")) {
        ka.id = *r;
      }
    }
  }
  if (const xml::Element* title = detail::knart_child(*metadata, "title")) {
    if (const std::string* v = title->attribute("value")) ka.title = *v;
  }

  static const std::set<std::string, std::less<>> known_sections = {
      "metadata", "externalData", "expressions", "triggers", "conditions", "actionGroup", "parameters"};
  for (const auto& section : root.children) {
    if (!known_sections.contains(section.local)) ka.warnings.push_back("skipped unknown element " + section.path);
  }

  auto read_def = [](const xml::Element& def) {
    const std::string* name = def.attribute("name");
    if (!name || name->empty()) throw Error(ErrorKind::SchemaViolation, "def without a name", def.path);
    return *name;
  };

  if (const xml::Element* ext = detail::knart_child(root, "externalData")) {
    for (const auto& def : ext->children) {
      if (def.local != "def") continue;
      ExternalDataDef d;
      d.name = read_def(def);
      d.source_path = def.path;
      d.expression = detail::expression_of(def);
      auto t = detail::derive_type(def, d.expression);
      if (!t) throw Error(ErrorKind::SchemaViolation, "cannot determine the type of external data '" + d.name + "'", def.path);
      d.value_type_name = t->name;
      d.cardinality = t->cardinality;
      ka.external_data.push_back(std::move(d));
    }
  }

  if (const xml::Element* exprs = detail::knart_child(root, "expressions")) {
    std::set<std::string> seen;
    for (const auto& def : exprs->children) {
      if (def.local != "def") continue;
      NamedExpressionDef d;
      d.name = read_def(def);
      if (!seen.insert(d.name).second) {
        throw Error(ErrorKind::SchemaViolation, "expression '" + d.name + "' defined twice", def.path);
      }
      d.source_path = def.path;
      d.expression = detail::expression_of(def);
      if (auto t = detail::derive_type(def, d.expression)) {
        d.value_type_name = t->name;
        d.cardinality = t->cardinality;
      }
      ka.expressions.push_back(std::move(d));
    }
  }

  std::vector<const xml::Element*> conditions;
  detail::collect_conditions(root, conditions);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const xml::Element& c = *conditions[i];
    ConditionUnit unit;
    const std::string* given = c.attribute("id");
    unit.id = (given && !given->empty()) ? *given : "cond-" + std::to_string(i + 1);
    if (!ids.insert(unit.id).second) {
      throw Error(ErrorKind::SchemaViolation, "duplicate condition id '" + unit.id + "'", c.path);
    }
    unit.source_path = c.path;
    unit.raw_expression = detail::knart_child(c, "logic");
    if (!unit.raw_expression) throw Error(ErrorKind::SchemaViolation, "condition without logic", c.path);
    ka.conditions.push_back(std::move(unit));
  }

  ka.load_time = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
  return ka;
}

/// External data first, then typed named expressions, each in document order.
inline SymbolEnv extract_symbol_env(const KnowledgeArtifact& artifact) {
  SymbolEnv env;
  for (const auto& d : artifact.external_data) {
    env.add({d.name, d.value_type_name, d.cardinality, false, d.source_path});
  }
  for (const auto& d : artifact.expressions) {
    if (d.value_type_name.empty()) continue;
    env.add({d.name, d.value_type_name, d.cardinality, false, d.source_path});
  }
  return env;
}

}  // namespace knart
