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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/query_lexer.hpp"

namespace geoqa::triplestore {

inline constexpr std::string_view kCorineNs = "http://geo.linkedopendata.gr/corine/ontology#";
inline constexpr std::string_view kGeofNs = "http://www.opengis.net/def/function/geosparql/";
inline constexpr std::string_view kWktDatatype = "http://strdf.di.uoa.gr/ontology#WKT";

enum class SpatialFunction { Touches, Contains };

inline std::string_view function_name(SpatialFunction f) {
  return f == SpatialFunction::Touches ? "sfTouches" : "sfContains";
}

struct LandUseConstraint {
  std::string var;
  std::string class_name;  // local name in the corine namespace
  bool operator==(const LandUseConstraint&) const = default;
};

struct GeometryBinding {
  std::string subject_var;
  std::string geometry_var;
  bool operator==(const GeometryBinding&) const = default;
};

struct SpatialFilter {
  SpatialFunction function;
  std::string lhs;
  std::string rhs;
  bool operator==(const SpatialFilter&) const = default;
};

struct QueryAST {
  bool distinct = false;
  std::vector<std::string> projected;
  std::vector<LandUseConstraint> land_use;
  std::vector<GeometryBinding> geometry;
  std::optional<SpatialFilter> filter;

  bool operator==(const QueryAST&) const = default;
};

namespace detail {

class QueryParser {
 public:
  QueryParser(std::vector<Lexeme> lexemes, std::size_t end_offset)
      : lx_(std::move(lexemes)), end_offset_(end_offset) {}

  QueryAST parse() {
    QueryAST ast;
    expect_keyword("select");
    if (peek_keyword("distinct")) {
      ++pos_;
      ast.distinct = true;
    }
    while (peek(Lexeme::Kind::Variable)) ast.projected.push_back(lx_[pos_++].text);
    if (ast.projected.empty()) fail("expected at least one projected variable");
    expect_keyword("where");
    expect(Lexeme::Kind::LBrace, "'{'");
    parse_body(ast);
    expect(Lexeme::Kind::RBrace, "'}'");
    if (pos_ != lx_.size()) fail("unexpected text after closing '}'");
    check_semantics(ast);
    return ast;
  }

 private:
  void parse_body(QueryAST& ast) {
    bool need_separator = false;
    while (true) {
      if (peek(Lexeme::Kind::RBrace)) return;
      if (peek_keyword("filter")) {
        parse_filter(ast);
        return;
      }
      if (need_separator) fail("expected '.' between triple patterns");
      parse_pattern(ast);
      need_separator = true;
      if (peek(Lexeme::Kind::Dot)) {
        ++pos_;
        need_separator = false;
      }
    }
  }

  void parse_pattern(QueryAST& ast) {
    const std::string subject = expect(Lexeme::Kind::Variable, "subject variable").text;
    const Lexeme& pred = expect(Lexeme::Kind::PrefixedName, "predicate");
    if (pred.text == "corine:hasLandUse") {
      const Lexeme& obj = expect(Lexeme::Kind::PrefixedName, "land-use class");
      if (obj.text.rfind("corine:", 0) != 0) {
        throw ParseError(obj.offset, "land-use class must be in the corine namespace");
      }
      ast.land_use.push_back({subject, obj.text.substr(7)});
    } else if (pred.text == "corine:hasGeometry") {
      ast.geometry.push_back({subject, expect(Lexeme::Kind::Variable, "geometry variable").text});
    } else {
      throw ParseError(pred.offset, "unknown predicate " + pred.text);
    }
  }

  void parse_filter(QueryAST& ast) {
    ++pos_;
    expect(Lexeme::Kind::LParen, "'('");
    const Lexeme& fn = expect(Lexeme::Kind::PrefixedName, "spatial function");
    SpatialFunction f;
    if (fn.text == "geof:sfTouches") {
      f = SpatialFunction::Touches;
    } else if (fn.text == "geof:sfContains") {
      f = SpatialFunction::Contains;
    } else {
      throw ParseError(fn.offset, "unsupported filter function " + fn.text);
    }
    expect(Lexeme::Kind::LParen, "'('");
    const std::string lhs = expect(Lexeme::Kind::Variable, "variable").text;
    expect(Lexeme::Kind::Comma, "','");
    const std::string rhs = expect(Lexeme::Kind::Variable, "variable").text;
    expect(Lexeme::Kind::RParen, "')'");
    expect(Lexeme::Kind::RParen, "')'");
    ast.filter = SpatialFilter{f, lhs, rhs};
  }

  static void check_semantics(const QueryAST& ast) {
    const auto is_geometry_var = [&](const std::string& v) {
      for (const auto& g : ast.geometry) {
        if (g.geometry_var == v) return true;
      }
      return false;
    };
    if (ast.filter) {
      for (const std::string* v : {&ast.filter->lhs, &ast.filter->rhs}) {
        if (!is_geometry_var(*v)) throw SemanticError("unbound filter variable ?" + *v);
      }
    }
    for (const auto& g : ast.geometry) {
      bool ok = false;
      for (const auto& c : ast.land_use) ok = ok || c.var == g.subject_var;
      for (const auto& p : ast.projected) ok = ok || p == g.subject_var;
      if (!ok) {
        throw SemanticError("geometry subject ?" + g.subject_var +
                            " has no land-use constraint and is not projected");
      }
    }
  }

  bool peek(Lexeme::Kind k) const { return pos_ < lx_.size() && lx_[pos_].kind == k; }

  bool peek_keyword(std::string_view kw) const {
    return peek(Lexeme::Kind::Word) && ascii_lower(lx_[pos_].text) == kw;
  }

  const Lexeme& expect(Lexeme::Kind k, std::string_view what) {
    if (!peek(k)) fail("expected " + std::string(what));
    return lx_[pos_++];
  }

  void expect_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) fail("expected '" + std::string(kw) + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const std::size_t offset = pos_ < lx_.size() ? lx_[pos_].offset : end_offset_;
    throw ParseError(offset, what);
  }

  std::vector<Lexeme> lx_;
  std::size_t end_offset_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the restricted dialect:
///   select [distinct] ?v+ where { (?s corine:hasLandUse corine:C | ?s corine:hasGeometry ?g)
///   separated by '.' [filter (geof:sfTouches|sfContains(?g1, ?g2))] }
inline QueryAST parse_query(std::string_view text) {
  return detail::QueryParser(lex_query(text), text.size()).parse();
}

}  // namespace geoqa::triplestore
