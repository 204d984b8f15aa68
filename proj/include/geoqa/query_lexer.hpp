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

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "geoqa/error.hpp"

namespace geoqa {

/// Lexical unit of the restricted GeoSPARQL dialect.
struct Lexeme {
  enum class Kind { Word, Variable, PrefixedName, LBrace, RBrace, LParen, RParen, Dot, Comma };

  Kind kind;
  std::string text;    // Word: as written; Variable: name without '?'; PrefixedName: "p:l"
  std::size_t offset;  // 0-based character offset in the source text

  bool operator==(const Lexeme& other) const {
    return kind == other.kind && text == other.text;
  }
};

inline bool is_ascii_alpha(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_keyword(std::string_view word) {
  const std::string w = ascii_lower(word);
  return w == "select" || w == "distinct" || w == "where" || w == "filter";
}

inline std::vector<Lexeme> lex_query(std::string_view src) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  const auto punct = [&](Lexeme::Kind k) {
    out.push_back({k, std::string(1, src[i]), i});
    ++i;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    switch (c) {
      case '{': punct(Lexeme::Kind::LBrace); continue;
      case '}': punct(Lexeme::Kind::RBrace); continue;
      case '(': punct(Lexeme::Kind::LParen); continue;
      case ')': punct(Lexeme::Kind::RParen); continue;
      case '.': punct(Lexeme::Kind::Dot); continue;
      case ',': punct(Lexeme::Kind::Comma); continue;
      default: break;
    }
    if (c == '?') {
      const std::size_t start = i++;
      if (i >= src.size() || !is_ascii_alpha(src[i])) {
        throw ParseError(start, "variable name must start with a letter");
      }
      const std::size_t name_start = i;
      while (i < src.size() && (is_ascii_alpha(src[i]) || is_ascii_digit(src[i]))) ++i;
      out.push_back({Lexeme::Kind::Variable, std::string(src.substr(name_start, i - name_start)), start});
      continue;
    }
    if (is_ascii_alpha(c)) {
      const std::size_t start = i;
      while (i < src.size() && (is_ascii_alpha(src[i]) || is_ascii_digit(src[i]))) ++i;
      if (i + 1 < src.size() && src[i] == ':' && is_ascii_alpha(src[i + 1])) {
        ++i;
        while (i < src.size() && (is_ascii_alpha(src[i]) || is_ascii_digit(src[i]))) ++i;
        out.push_back({Lexeme::Kind::PrefixedName, std::string(src.substr(start, i - start)), start});
      } else {
        out.push_back({Lexeme::Kind::Word, std::string(src.substr(start, i - start)), start});
      }
      continue;
    }
    throw ParseError(i, std::string("unexpected character '") + c + "'");
  }
  return out;
}

/// Renders lexemes in canonical spacing: single spaces, no space inside
/// parentheses or before a comma, function names glued to their '('.
/// Keywords are lowercased.
inline std::string render_query(const std::vector<Lexeme>& lexemes) {
  std::string out;
  const Lexeme* prev = nullptr;
  for (const Lexeme& lx : lexemes) {
    if (prev != nullptr) {
      const bool glue = lx.kind == Lexeme::Kind::Comma || lx.kind == Lexeme::Kind::RParen ||
                        prev->kind == Lexeme::Kind::LParen ||
                        (lx.kind == Lexeme::Kind::LParen && prev->kind == Lexeme::Kind::PrefixedName);
      if (!glue) out += ' ';
    }
    switch (lx.kind) {
      case Lexeme::Kind::Variable: out += '?'; out += lx.text; break;
      case Lexeme::Kind::Word: out += is_keyword(lx.text) ? ascii_lower(lx.text) : lx.text; break;
      default: out += lx.text; break;
    }
    prev = &lx;
  }
  return out;
}

}  // namespace geoqa
