#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace knart {

enum class ErrorKind {
  MalformedXml,
  UnrecognizedRoot,
  SchemaViolation,
  DuplicateSymbol,
  UnknownOperator,
  ArityMismatch,
  CyclicDefinition,
  UnboundSymbol,
  TypeMismatch,
  DivisionByZero,
  SortConflict,
  NonBooleanCondition,
  UnsupportedOperator,
  UndeclaredSymbol,
  SpecFormat,
  SolverNotFound,
  SolverError,
  ProtocolError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedXml: return "MalformedXml";
    case ErrorKind::UnrecognizedRoot: return "UnrecognizedRoot";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::DuplicateSymbol: return "DuplicateSymbol";
    case ErrorKind::UnknownOperator: return "UnknownOperator";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::CyclicDefinition: return "CyclicDefinition";
    case ErrorKind::UnboundSymbol: return "UnboundSymbol";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::SortConflict: return "SortConflict";
    case ErrorKind::NonBooleanCondition: return "NonBooleanCondition";
    case ErrorKind::UnsupportedOperator: return "UnsupportedOperator";
    case ErrorKind::UndeclaredSymbol: return "UndeclaredSymbol";
    case ErrorKind::SpecFormat: return "SpecFormat";
    case ErrorKind::SolverNotFound: return "SolverNotFound";
    case ErrorKind::SolverError: return "SolverError";
    case ErrorKind::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

/// Every failure raised by the library. `source_path` points into the input
/// document when the failure can be localized; `related_path` carries the
/// second location of two-sided failures such as sort conflicts.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string source_path = {},
        std::string related_path = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message),
        source_path_(std::move(source_path)),
        related_path_(std::move(related_path)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& source_path() const noexcept { return source_path_; }
  const std::string& related_path() const noexcept { return related_path_; }

  std::optional<std::size_t> byte_offset() const noexcept { return offset_; }
  Error& with_offset(std::size_t offset) {
    offset_ = offset;
    return *this;
  }

  /// Operator category of an untranslatable construct, e.g. "Aggregation".
  const std::string& category() const noexcept { return category_; }
  Error& with_category(std::string category) {
    category_ = std::move(category);
    return *this;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
  std::string source_path_;
  std::string related_path_;
  std::optional<std::size_t> offset_;
  std::string category_;
};

}  // namespace knart
