#pragma once

// Namespace-aware XML tree built with expat. Every element records its byte
// offset and a positional path (`/knowledgeDocument/conditions[1]/condition[2]`)
// that resolves back to exactly one node of the same document.

#include <expat.h>

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "knart/error.hpp"

namespace knart::xml {

inline constexpr std::string_view kXsiNamespace = "http://www.w3.org/2001/XMLSchema-instance";

/// Maximum element nesting accepted; deeper documents are rejected rather
/// than risking unbounded recursion downstream.
inline constexpr std::size_t kMaxDepth = 256;

struct Attribute {
  std::string ns;
  std::string local;
  std::string value;
};

using NamespaceScope = std::map<std::string, std::string>;  // prefix -> uri ("" = default)

struct Element {
  std::string ns;
  std::string local;
  std::vector<Attribute> attributes;
  std::vector<Element> children;
  std::string text;
  std::string path;
  std::size_t byte_offset = 0;
  std::shared_ptr<const NamespaceScope> scope;

  const std::string* attribute(std::string_view local_name, std::string_view ns_uri = {}) const {
    for (const auto& a : attributes) {
      if (a.local == local_name && a.ns == ns_uri) return &a.value;
    }
    return nullptr;
  }

  /// Resolves a QName-valued attribute (`elm:And`) to (namespace uri, local).
  std::pair<std::string, std::string> resolve_qname(std::string_view qname) const {
    auto colon = qname.find(':');
    std::string prefix = colon == std::string_view::npos ? "" : std::string(qname.substr(0, colon));
    std::string local =
        colon == std::string_view::npos ? std::string(qname) : std::string(qname.substr(colon + 1));
    std::string uri;
    if (scope) {
      auto it = scope->find(prefix);
      if (it != scope->end()) uri = it->second;
    }
    return {uri, local};
  }

  /// `xsi:type` resolved to its local name, or empty when absent.
  std::string xsi_type() const {
    const std::string* t = attribute("type", kXsiNamespace);
    return t ? resolve_qname(*t).second : std::string{};
  }

  const Element* child(std::string_view local_name) const {
    for (const auto& c : children) {
      if (c.local == local_name) return &c;
    }
    return nullptr;
  }
};

struct Document {
  Element root;
};

namespace detail {

inline constexpr char kSeparator = '\x1f';

inline std::pair<std::string, std::string> split_name(const XML_Char* name) {
  std::string_view s(name);
  auto sep = s.find(kSeparator);
  if (sep == std::string_view::npos) return {"", std::string(s)};
  return {std::string(s.substr(0, sep)), std::string(s.substr(sep + 1))};
}

struct Builder {
  XML_Parser parser = nullptr;
  std::unique_ptr<Element> root;
  std::vector<Element*> stack;
  std::vector<std::map<std::string, std::size_t>> sibling_counts{1};
  std::vector<std::pair<std::string, std::string>> pending_ns;
  std::vector<std::shared_ptr<const NamespaceScope>> scopes{std::make_shared<NamespaceScope>()};
  bool too_deep = false;

  static void XMLCALL on_ns_start(void* data, const XML_Char* prefix, const XML_Char* uri) {
    auto* self = static_cast<Builder*>(data);
    self->pending_ns.emplace_back(prefix ? prefix : "", std::string(uri ? uri : ""));
  }

  static void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<Builder*>(data);
    if (self->stack.size() >= kMaxDepth) {
      self->too_deep = true;
      XML_StopParser(self->parser, XML_FALSE);
      return;
    }
    auto scope = self->scopes.back();
    if (!self->pending_ns.empty()) {
      auto next = std::make_shared<NamespaceScope>(*scope);
      for (auto& [prefix, uri] : self->pending_ns) (*next)[prefix] = uri;
      scope = next;
      self->pending_ns.clear();
    }
    self->scopes.push_back(scope);

    Element element;
    std::tie(element.ns, element.local) = split_name(name);
    element.byte_offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(self->parser));
    element.scope = scope;
    for (std::size_t i = 0; atts[i]; i += 2) {
      auto [ns, local] = split_name(atts[i]);
      element.attributes.push_back({std::move(ns), std::move(local), atts[i + 1]});
    }

    auto& counts = self->sibling_counts.back();
    std::size_t ordinal = ++counts[element.local];
    if (self->stack.empty()) {
      element.path = "/" + element.local;
      self->root = std::make_unique<Element>(std::move(element));
      self->stack.push_back(self->root.get());
    } else {
      Element* parent = self->stack.back();
      element.path = parent->path + "/" + element.local + "[" + std::to_string(ordinal) + "]";
      parent->children.push_back(std::move(element));
      self->stack.push_back(&parent->children.back());
    }
    self->sibling_counts.emplace_back();
  }

  static void XMLCALL on_end(void* data, const XML_Char*) {
    auto* self = static_cast<Builder*>(data);
    self->stack.pop_back();
    self->sibling_counts.pop_back();
    self->scopes.pop_back();
  }

  static void XMLCALL on_text(void* data, const XML_Char* s, int len) {
    auto* self = static_cast<Builder*>(data);
    if (!self->stack.empty()) self->stack.back()->text.append(s, static_cast<std::size_t>(len));
  }
};

}  // namespace detail

/// Parses a UTF-8 document. Throws MalformedXml (with byte offset) for any
/// input that is not well-formed, including empty input.
inline Document parse(std::string_view bytes) {
  detail::Builder builder;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreateNS("UTF-8", detail::kSeparator), &XML_ParserFree);
  if (!parser) throw Error(ErrorKind::MalformedXml, "cannot allocate XML parser");
  builder.parser = parser.get();
  XML_SetUserData(parser.get(), &builder);
  XML_SetElementHandler(parser.get(), &detail::Builder::on_start, &detail::Builder::on_end);
  XML_SetCharacterDataHandler(parser.get(), &detail::Builder::on_text);
  XML_SetStartNamespaceDeclHandler(parser.get(), &detail::Builder::on_ns_start);

  // Stack pointers stay valid: a child vector only grows after its open child
  // has been closed and popped.
  auto status = XML_Parse(parser.get(), bytes.data(), static_cast<int>(bytes.size()), XML_TRUE);
  if (builder.too_deep) {
    throw Error(ErrorKind::MalformedXml,
                "element nesting exceeds " + std::to_string(kMaxDepth) + " levels")
        .with_offset(static_cast<std::size_t>(XML_GetCurrentByteIndex(parser.get())));
  }
  if (status != XML_STATUS_OK || !builder.root) {
    auto offset = XML_GetCurrentByteIndex(parser.get());
    std::string message = XML_ErrorString(XML_GetErrorCode(parser.get()));
    std::size_t at = offset < 0 ? bytes.size() : static_cast<std::size_t>(offset);
    throw Error(ErrorKind::MalformedXml, message + " at byte offset " + std::to_string(at))
        .with_offset(at);
  }
  return Document{std::move(*builder.root)};
}

/// Finds the element addressed by `path`, or nullptr.
inline const Element* resolve_path(const Document& doc, std::string_view path) {
  if (path.empty() || path.front() != '/') return nullptr;
  path.remove_prefix(1);
  auto slash = path.find('/');
  std::string_view head = path.substr(0, slash);
  if (head != doc.root.local) return nullptr;
  const Element* current = &doc.root;
  while (slash != std::string_view::npos) {
    path.remove_prefix(slash + 1);
    slash = path.find('/');
    std::string_view step = path.substr(0, slash);
    auto bracket = step.find('[');
    if (bracket == std::string_view::npos || step.back() != ']') return nullptr;
    std::string name(step.substr(0, bracket));
    std::size_t ordinal = 0;
    for (char c : step.substr(bracket + 1, step.size() - bracket - 2)) {
      if (c < '0' || c > '9') return nullptr;
      ordinal = ordinal * 10 + static_cast<std::size_t>(c - '0');
    }
    const Element* next = nullptr;
    std::size_t seen = 0;
    for (const auto& c : current->children) {
      if (c.local == name && ++seen == ordinal) {
        next = &c;
        break;
      }
    }
    if (!next) return nullptr;
    current = next;
  }
  return current;
}

}  // namespace knart::xml
