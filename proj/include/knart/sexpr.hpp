#pragma once

// Minimal SMT-LIB flavoured s-expression reader: symbols, |quoted symbols|,
// "strings" with doubled-quote escapes, ; line comments, and lists.

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "knart/error.hpp"

namespace knart::sexpr {

struct SExpr {
  enum class Kind { Atom, String, List };

  Kind kind = Kind::Atom;
  /// Atom text (quoted symbols without the bars), or the unescaped string.
  std::string text;
  bool quoted = false;
  std::vector<SExpr> children;
  /// Half-open byte range of this expression in the parsed text.
  std::size_t begin = 0;
  std::size_t end = 0;

  bool is_atom() const { return kind == Kind::Atom; }
  bool is_list() const { return kind == Kind::List; }
  bool is_string() const { return kind == Kind::String; }
  bool is_atom(std::string_view s) const { return kind == Kind::Atom && !quoted && text == s; }
};

namespace detail {

/// SMT-LIB simple symbol: letters, digits and ~!@$%^&*_-+=<>.?/ not
/// starting with a digit.
inline bool simple_symbol(std::string_view s) {
  static constexpr std::string_view extra = "~!@$%^&*_-+=<>.?/";
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && extra.find(c) == std::string_view::npos) return false;
  }
  return true;
}

inline bool is_delimiter(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';' ||
         c == '"' || c == '|';
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_trivia();
    return pos_ >= text_.size();
  }

  SExpr read() {
    skip_trivia();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    SExpr out;
    out.begin = pos_;
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      out.kind = SExpr::Kind::List;
      for (;;) {
        skip_trivia();
        if (pos_ >= text_.size()) fail("unbalanced parenthesis");
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        out.children.push_back(read());
      }
    } else if (c == ')') {
      fail("unexpected ')'");
    } else if (c == '"') {
      ++pos_;
      out.kind = SExpr::Kind::String;
      for (;;) {
        if (pos_ >= text_.size()) fail("unterminated string literal");
        char s = text_[pos_++];
        if (s == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            out.text.push_back('"');
            ++pos_;
            continue;
          }
          break;
        }
        out.text.push_back(s);
      }
    } else if (c == '|') {
      ++pos_;
      auto close = text_.find('|', pos_);
      if (close == std::string_view::npos) fail("unterminated quoted symbol");
      out.text = std::string(text_.substr(pos_, close - pos_));
      out.quoted = true;
      pos_ = close + 1;
    } else {
      std::size_t start = pos_;
      while (pos_ < text_.size() && !is_delimiter(text_[pos_])) ++pos_;
      out.text = std::string(text_.substr(start, pos_ - start));
    }
    out.end = pos_;
    return out;
  }

  std::size_t position() const { return pos_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ProtocolError, what + " at offset " + std::to_string(pos_) + " in: " +
                                              std::string(text_.substr(0, 200)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses every top-level expression in `text`. Throws ProtocolError on
/// unbalanced input.
inline std::vector<SExpr> parse_all(std::string_view text) {
  detail::Reader reader(text);
  std::vector<SExpr> out;
  while (!reader.at_end()) out.push_back(reader.read());
  return out;
}

inline SExpr parse_one(std::string_view text) {
  auto all = parse_all(text);
  if (all.size() != 1) {
    throw Error(ErrorKind::ProtocolError,
                "expected exactly one expression, found " + std::to_string(all.size()));
  }
  return std::move(all.front());
}

/// Length of the first complete top-level expression in `buffer` (including
/// leading whitespace and comments), or nullopt if more input is needed. A
/// bare atom is only complete once a delimiter follows it or `at_eof` holds.
inline std::optional<std::size_t> complete_prefix(std::string_view buffer, bool at_eof) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < buffer.size()) {
      char c = buffer[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == ';') {
        auto nl = buffer.find('\n', i);
        if (nl == std::string_view::npos) {
          i = buffer.size();
          return false;
        }
        i = nl + 1;
      } else {
        return true;
      }
    }
    return false;
  };
  if (!skip()) return std::nullopt;
  if (buffer[i] != '(') {
    if (buffer[i] == '"') {
      for (std::size_t j = i + 1; j < buffer.size(); ++j) {
        if (buffer[j] == '"') {
          if (j + 1 < buffer.size() && buffer[j + 1] == '"') {
            ++j;
            continue;
          }
          if (j + 1 == buffer.size() && !at_eof) return std::nullopt;
          return j + 1;
        }
      }
      return std::nullopt;
    }
    if (buffer[i] == '|') {
      auto close = buffer.find('|', i + 1);
      if (close == std::string_view::npos) return std::nullopt;
      return close + 1;
    }
    std::size_t j = i;
    while (j < buffer.size() && !detail::is_delimiter(buffer[j])) ++j;
    if (j == buffer.size() && !at_eof) return std::nullopt;
    return j == i ? i + 1 : j;
  }
  int depth = 0;
  for (std::size_t j = i; j < buffer.size(); ++j) {
    char c = buffer[j];
    if (c == '"') {
      for (++j; j < buffer.size(); ++j) {
        if (buffer[j] == '"') {
          if (j + 1 < buffer.size() && buffer[j + 1] == '"') {
            ++j;
            continue;
          }
          break;
        }
      }
    } else if (c == '|') {
      auto close = buffer.find('|', j + 1);
      if (close == std::string_view::npos) return std::nullopt;
      j = close;
    } else if (c == ';') {
      auto nl = buffer.find('\n', j);
      if (nl == std::string_view::npos) return std::nullopt;
      j = nl;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth == 0) return j + 1;
    }
  }
  return std::nullopt;
}

inline std::string quote_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Canonical single-line rendering (single spaces, no comments).
inline std::string to_string(const SExpr& e) {
  switch (e.kind) {
    case SExpr::Kind::Atom:
      return e.quoted ? "|" + e.text + "|" : e.text;
    case SExpr::Kind::String:
      return quote_string(e.text);
    case SExpr::Kind::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out.push_back(' ');
        out += to_string(e.children[i]);
      }
      out.push_back(')');
      return out;
    }
  }
  return {};
}

}  // namespace knart::sexpr
