// Copyright 2026 The GeoQA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/query.hpp"
#include "geoqa/query_lexer.hpp"

namespace geoqa::geoencode {

/// Raw query contains something the alphabetic encoding cannot represent.
class EncodeError : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnsupportedNameError : public Error {
 public:
  using Error::Error;
};

/// Token stream cannot be turned back into a query.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class StructuralError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

/// Alphabetic token stream, one `[A-Za-z]+` word per token.
struct EncodedQuery {
  std::vector<std::string> tokens;

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }

  static EncodedQuery from_text(std::string_view text) {
    EncodedQuery q;
    std::istringstream in{std::string(text)};
    for (std::string tok; in >> tok;) q.tokens.push_back(tok);
    return q;
  }

  bool operator==(const EncodedQuery&) const = default;
};

inline constexpr std::array<std::string_view, 9> kNumberWords = {
    "One", "Two", "Three", "Four", "Five", "Six", "Seven", "Eight", "Nine"};

// Number words the encoding never produces; seeing one in a variable is a decode error.
inline constexpr std::array<std::string_view, 13> kUnsupportedNumberWords = {
    "zero", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen", "twenty", "hundred"};

inline constexpr std::string_view kOpenBracket = "openBracket";
inline constexpr std::string_view kCloseBracket = "closeBracket";
inline constexpr std::string_view kOpenParen = "openParanthesis";
inline constexpr std::string_view kCloseParen = "closeParanthesis";
inline constexpr std::string_view kDot = "dot";
inline constexpr std::string_view kComma = "comma";

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

namespace detail {

inline void require_alpha(const Lexeme& lx, std::string_view text, std::size_t base) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_ascii_alpha(text[i])) {
      throw EncodeError(lx.offset + base + i, std::string("cannot encode character '") + text[i] + "'");
    }
  }
}

inline std::string encode_variable(const Lexeme& lx) {
  const std::string& name = lx.text;
  std::size_t split = name.size();
  while (split > 0 && is_ascii_digit(name[split - 1])) --split;
  const std::string letters = name.substr(0, split);
  const std::string digits = name.substr(split);
  for (char c : letters) {
    if (!(c >= 'a' && c <= 'z')) {
      throw UnsupportedNameError("variable ?" + name + " must be lowercase letters with an optional digit");
    }
  }
  if (digits.size() > 1 || digits == "0") {
    throw UnsupportedNameError("variable ?" + name + " has a digit suffix outside 1-9");
  }
  for (auto w : kNumberWords) {
    if (ends_with(letters, ascii_lower(w))) {
      throw UnsupportedNameError("variable ?" + name + " ends in a number word");
    }
  }
  for (auto w : kUnsupportedNumberWords) {
    if (ends_with(letters, w)) throw UnsupportedNameError("variable ?" + name + " ends in a number word");
  }
  std::string out = "var";
  out += static_cast<char>(std::toupper(static_cast<unsigned char>(letters[0])));
  out += letters.substr(1);
  if (!digits.empty()) out += kNumberWords[static_cast<std::size_t>(digits[0] - '1')];
  return out;
}

}  // namespace detail

/// Rewrites query punctuation as words: `?area1` -> `varAreaOne`, `{` ->
/// `openBracket`, `(` -> `openParanthesis`, `.` -> `dot`, `,` -> `comma`,
/// `corine:hasLandUse` -> `corine hasLandUse`.
inline EncodedQuery encode_query(std::string_view raw) {
  std::vector<Lexeme> lexemes;
  try {
    lexemes = lex_query(raw);
  } catch (const EncodeError&) {
    throw;
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    throw EncodeError(e.offset(), msg.substr(msg.find(": ") + 2));
  }
  EncodedQuery out;
  for (const Lexeme& lx : lexemes) {
    switch (lx.kind) {
      case Lexeme::Kind::Variable: out.tokens.push_back(detail::encode_variable(lx)); break;
      case Lexeme::Kind::Word:
        detail::require_alpha(lx, lx.text, 0);
        out.tokens.push_back(lx.text);
        break;
      case Lexeme::Kind::PrefixedName: {
        const auto colon = lx.text.find(':');
        const std::string prefix = lx.text.substr(0, colon);
        const std::string local = lx.text.substr(colon + 1);
        detail::require_alpha(lx, prefix, 0);
        detail::require_alpha(lx, local, colon + 1);
        out.tokens.push_back(prefix);
        out.tokens.push_back(local);
        break;
      }
      case Lexeme::Kind::LBrace: out.tokens.emplace_back(kOpenBracket); break;
      case Lexeme::Kind::RBrace: out.tokens.emplace_back(kCloseBracket); break;
      case Lexeme::Kind::LParen: out.tokens.emplace_back(kOpenParen); break;
      case Lexeme::Kind::RParen: out.tokens.emplace_back(kCloseParen); break;
      case Lexeme::Kind::Dot: out.tokens.emplace_back(kDot); break;
      case Lexeme::Kind::Comma: out.tokens.emplace_back(kComma); break;
    }
  }
  return out;
}

/// Lowercase-keyed table restoring the canonical spelling of known words.
class ReservedWords {
 public:
  ReservedWords() {
    for (std::string_view w : {"select", "distinct", "where", "filter", "corine", "geof", "hasLandUse",
                               "hasGeometry", "sfTouches", "sfContains"}) {
      add(w);
    }
  }

  explicit ReservedWords(const std::vector<std::string>& class_names) : ReservedWords() {
    for (const auto& c : class_names) add(c);
  }

  void add(std::string_view word) { table_[ascii_lower(word)] = std::string(word); }

  std::optional<std::string> lookup(std::string_view word) const {
    auto it = table_.find(ascii_lower(word));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  bool is_prefix(std::string_view word) const {
    const std::string w = ascii_lower(word);
    return w == "corine" || w == "geof";
  }

 private:
  std::map<std::string, std::string> table_;
};

namespace detail {

inline std::optional<Lexeme::Kind> structural_kind(std::string_view lower) {
  if (lower == "openbracket") return Lexeme::Kind::LBrace;
  if (lower == "closebracket") return Lexeme::Kind::RBrace;
  if (lower == "openparanthesis") return Lexeme::Kind::LParen;
  if (lower == "closeparanthesis") return Lexeme::Kind::RParen;
  if (lower == "dot") return Lexeme::Kind::Dot;
  if (lower == "comma") return Lexeme::Kind::Comma;
  return std::nullopt;
}

inline std::string decode_variable(std::string_view token) {
  const std::string lower = ascii_lower(token);
  const std::string rest = lower.substr(3);
  // With case intact, a camel-case tail after the name must be a number word.
  std::size_t last_upper = std::string_view::npos;
  for (std::size_t i = 4; i < token.size(); ++i) {
    if (token[i] >= 'A' && token[i] <= 'Z') last_upper = i;
  }
  for (std::size_t d = 0; d < kNumberWords.size(); ++d) {
    const std::string word = ascii_lower(kNumberWords[d]);
    if (rest.size() > word.size() && ends_with(rest, word)) {
      return rest.substr(0, rest.size() - word.size()) + static_cast<char>('1' + d);
    }
  }
  for (auto w : kUnsupportedNumberWords) {
    if (ends_with(rest, w)) throw DecodeError("unrecognized number word in " + std::string(token));
  }
  if (last_upper != std::string_view::npos) {
    throw DecodeError("unrecognized number word in " + std::string(token));
  }
  return rest;
}

}  // namespace detail

/// Inverse of encode_query up to canonical whitespace. Case-insensitive:
/// spelling of known words comes from `reserved`, everything else is
/// lowercased.
inline std::string decode_query(const EncodedQuery& encoded, const ReservedWords& reserved = ReservedWords()) {
  std::vector<Lexeme> lexemes;
  std::vector<Lexeme::Kind> open;
  const auto& toks = encoded.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string lower = ascii_lower(toks[i]);
    for (char c : toks[i]) {
      if (!is_ascii_alpha(c)) throw DecodeError("non-alphabetic token '" + toks[i] + "'");
    }
    if (auto kind = detail::structural_kind(lower)) {
      if (*kind == Lexeme::Kind::LBrace || *kind == Lexeme::Kind::LParen) open.push_back(*kind);
      if (*kind == Lexeme::Kind::RBrace || *kind == Lexeme::Kind::RParen) {
        const auto want = *kind == Lexeme::Kind::RBrace ? Lexeme::Kind::LBrace : Lexeme::Kind::LParen;
        if (open.empty() || open.back() != want) {
          throw StructuralError("unbalanced '" + toks[i] + "' at token " + std::to_string(i));
        }
        open.pop_back();
      }
      static constexpr std::string_view kText = "{}().,";
      const char c = *kind == Lexeme::Kind::LBrace   ? kText[0]
                     : *kind == Lexeme::Kind::RBrace ? kText[1]
                     : *kind == Lexeme::Kind::LParen ? kText[2]
                     : *kind == Lexeme::Kind::RParen ? kText[3]
                     : *kind == Lexeme::Kind::Dot    ? kText[4]
                                                     : kText[5];
      lexemes.push_back({*kind, std::string(1, c), i});
      continue;
    }
    if (reserved.is_prefix(lower) && i + 1 < toks.size() && !detail::structural_kind(ascii_lower(toks[i + 1]))) {
      const std::string& local = toks[i + 1];
      const std::string local_text = reserved.lookup(local).value_or(ascii_lower(local));
      lexemes.push_back({Lexeme::Kind::PrefixedName, lower + ":" + local_text, i});
      ++i;
      continue;
    }
    if (auto known = reserved.lookup(lower)) {
      lexemes.push_back({Lexeme::Kind::Word, *known, i});
      continue;
    }
    if (lower.size() > 3 && lower.rfind("var", 0) == 0) {
      lexemes.push_back({Lexeme::Kind::Variable, detail::decode_variable(toks[i]), i});
      continue;
    }
    lexemes.push_back({Lexeme::Kind::Word, lower, i});
  }
  if (!open.empty()) throw StructuralError("unclosed bracket in encoded query");
  return render_query(lexemes);
}

inline std::string decode_query(std::string_view encoded_text, const ReservedWords& reserved = ReservedWords()) {
  return decode_query(EncodedQuery::from_text(encoded_text), reserved);
}

/// Canonical spacing and keyword case of a parseable query. Idempotent.
inline std::string canonicalize(std::string_view raw) {
  triplestore::parse_query(raw);
  return render_query(lex_query(raw));
}

}  // namespace geoqa::geoencode
