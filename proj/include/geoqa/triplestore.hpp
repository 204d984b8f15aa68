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
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/geometry.hpp"
#include "geoqa/query.hpp"
#include "geoqa/random.hpp"

namespace geoqa::triplestore {

struct Term {
  bool is_literal = false;
  std::string value;     // IRI without angle brackets, or the literal lexical form
  std::string datatype;  // literal datatype IRI, empty for plain literals and IRIs

  bool operator==(const Term&) const = default;
};

struct Triple {
  std::string subject;
  std::string predicate;
  Term object;

  bool operator==(const Triple&) const = default;
};

inline std::string corine_iri(std::string_view local) { return std::string(kCorineNs) + std::string(local); }

/// Local name of a land-use class IRI with its first letter uppercased, so
/// `ontology#continuousUrbanFabric` and `corine:ContinuousUrbanFabric` agree.
inline std::string class_local_name(std::string_view iri) {
  const auto cut = iri.find_last_of("#/");
  std::string local(cut == std::string_view::npos ? iri : iri.substr(cut + 1));
  if (!local.empty()) local[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(local[0])));
  return local;
}

/// In-memory triple set with land-use and geometry indexes. Immutable once loaded.
class Store {
 public:
  struct Geometry {
    geom::Polygon polygon;
    std::string wkt;
  };

  void add(Triple t) {
    const std::size_t idx = triples_.size();
    by_predicate_[t.predicate].push_back(idx);
    by_predicate_object_[{t.predicate, t.object.value}].push_back(idx);
    if (t.predicate == corine_iri("hasLandUse") && !t.object.is_literal) {
      const std::string cls = class_local_name(t.object.value);
      land_use_[t.subject] = cls;
      auto& members = by_class_[cls];
      if (std::find(members.begin(), members.end(), t.subject) == members.end()) {
        members.push_back(t.subject);
      }
    }
    triples_.push_back(std::move(t));
  }

  void add_geometry(const std::string& subject, geom::Polygon polygon, std::string wkt) {
    geometry_[subject] = Geometry{std::move(polygon), std::move(wkt)};
  }

  const std::vector<Triple>& triples() const { return triples_; }

  std::vector<const Triple*> with_predicate(const std::string& predicate) const {
    std::vector<const Triple*> out;
    if (auto it = by_predicate_.find(predicate); it != by_predicate_.end()) {
      for (std::size_t i : it->second) out.push_back(&triples_[i]);
    }
    return out;
  }

  std::vector<const Triple*> with_predicate_object(const std::string& predicate,
                                                   const std::string& object) const {
    std::vector<const Triple*> out;
    if (auto it = by_predicate_object_.find({predicate, object}); it != by_predicate_object_.end()) {
      for (std::size_t i : it->second) out.push_back(&triples_[i]);
    }
    return out;
  }

  const Geometry* geometry(const std::string& subject) const {
    auto it = geometry_.find(subject);
    return it == geometry_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, Geometry>& geometries() const { return geometry_; }

  std::optional<std::string> land_use(const std::string& subject) const {
    auto it = land_use_.find(subject);
    if (it == land_use_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<std::string>& members(const std::string& class_name) const {
    static const std::vector<std::string> kEmpty;
    auto it = by_class_.find(class_name);
    return it == by_class_.end() ? kEmpty : it->second;
  }

  /// Distinct subjects carrying a land use or a geometry.
  std::size_t area_count() const {
    std::vector<std::string> subjects;
    for (const auto& [s, _] : land_use_) subjects.push_back(s);
    for (const auto& [s, _] : geometry_) subjects.push_back(s);
    std::sort(subjects.begin(), subjects.end());
    return static_cast<std::size_t>(std::unique(subjects.begin(), subjects.end()) - subjects.begin());
  }

 private:
  std::vector<Triple> triples_;
  std::map<std::string, std::vector<std::size_t>> by_predicate_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_predicate_object_;
  std::map<std::string, std::string> land_use_;
  std::map<std::string, std::vector<std::string>> by_class_;
  std::map<std::string, Geometry> geometry_;
};

namespace detail {

class LineReader {
 public:
  LineReader(std::string_view line, std::size_t number) : s_(line), line_(number) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
  }

  bool at_end() {
    skip_ws();
    return i_ >= s_.size();
  }

  std::string iri() {
    skip_ws();
    if (i_ >= s_.size() || s_[i_] != '<') fail("expected '<'");
    const auto close = s_.find('>', i_ + 1);
    if (close == std::string_view::npos) fail("unterminated IRI");
    std::string out(s_.substr(i_ + 1, close - i_ - 1));
    if (out.find("://") == std::string::npos) fail("IRI is not absolute: " + out);
    i_ = close + 1;
    return out;
  }

  Term object() {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == '<') return Term{false, iri(), {}};
    if (i_ >= s_.size() || s_[i_] != '"') fail("expected IRI or literal object");
    std::string value;
    ++i_;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated literal");
      const char c = s_[i_++];
      if (c == '"') break;
      if (c == '\\') {
        if (i_ >= s_.size()) fail("dangling escape in literal");
        const char e = s_[i_++];
        value += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        continue;
      }
      value += c;
    }
    std::string datatype;
    if (s_.substr(i_, 2) == "^^") {
      i_ += 2;
      datatype = iri();
    }
    return Term{true, std::move(value), std::move(datatype)};
  }

  void terminator() {
    skip_ws();
    if (i_ >= s_.size() || s_[i_] != '.') fail("expected '.' terminating the statement");
    ++i_;
    if (!at_end()) fail("unexpected text after '.'");
  }

  [[noreturn]] void fail(const std::string& what) const { throw FormatError(line_, what); }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

}  // namespace detail

/// Loads one statement per line: `<s> <p> <o> .` or `<s> <p> "lit"^^<type> .`.
/// Blank lines and `#` comments are skipped. Polygons under hasGeometry are
/// parsed and validated; failures name the line and the subject.
inline Store load_ntriples(std::string_view text) {
  Store store;
  const std::string geometry_predicate = corine_iri("hasGeometry");
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    detail::LineReader in(line, line_no);
    if (in.at_end()) continue;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos && line[line.find_first_not_of(" \t\r")] == '#') {
      continue;
    }
    Triple t;
    t.subject = in.iri();
    t.predicate = in.iri();
    t.object = in.object();
    in.terminator();
    if (t.predicate == geometry_predicate) {
      if (!t.object.is_literal) in.fail("geometry of <" + t.subject + "> must be a WKT literal");
      try {
        store.add_geometry(t.subject, geom::parse_wkt_polygon(t.object.value), t.object.value);
      } catch (const geom::WktError& e) {
        in.fail("invalid polygon for <" + t.subject + ">: " + e.what());
      }
    }
    store.add(std::move(t));
  }
  return store;
}

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const ResultTable&) const = default;

  /// Header of variable names, then one tab-separated row per binding.
  std::string to_tsv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += '\t';
      out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += '\t';
        out += row[i];
      }
      out += '\n';
    }
    return out;
  }
};

inline bool evaluate_spatial(SpatialFunction f, const geom::Polygon& a, const geom::Polygon& b) {
  return f == SpatialFunction::Touches ? geom::sf_touches(a, b) : geom::sf_contains(a, b);
}

/// Natural join of the query's patterns, then the spatial filter, then
/// projection. Rows are sorted; `distinct` removes duplicates.
inline ResultTable execute(const Store& store, const QueryAST& ast) {
  struct Value {
    std::string text;
    const Store::Geometry* geometry = nullptr;
  };
  using Binding = std::map<std::string, Value>;

  for (const auto& v : ast.projected) {
    bool bound = false;
    for (const auto& c : ast.land_use) bound = bound || c.var == v;
    for (const auto& g : ast.geometry) bound = bound || g.subject_var == v || g.geometry_var == v;
    if (!bound) throw SemanticError("projected variable ?" + v + " is not bound by any pattern");
  }

  std::vector<Binding> rows(1);
  for (const auto& c : ast.land_use) {
    std::vector<Binding> next;
    for (const Binding& b : rows) {
      if (auto it = b.find(c.var); it != b.end()) {
        if (store.land_use(it->second.text) == c.class_name) next.push_back(b);
        continue;
      }
      for (const std::string& subject : store.members(c.class_name)) {
        Binding nb = b;
        nb[c.var] = Value{subject, nullptr};
        next.push_back(std::move(nb));
      }
    }
    rows = std::move(next);
  }
  for (const auto& g : ast.geometry) {
    std::vector<Binding> next;
    const auto bind = [&](const Binding& b, const std::string& subject, const Store::Geometry& geo) {
      if (auto it = b.find(g.geometry_var); it != b.end()) {
        if (it->second.geometry == &geo) next.push_back(b);
        return;
      }
      Binding nb = b;
      nb[g.subject_var] = Value{subject, nullptr};
      nb[g.geometry_var] = Value{geo.wkt, &geo};
      next.push_back(std::move(nb));
    };
    for (const Binding& b : rows) {
      if (auto it = b.find(g.subject_var); it != b.end()) {
        if (it->second.geometry != nullptr) {
          throw SemanticError("?" + g.subject_var + " is bound to a geometry, not an area");
        }
        if (const auto* geo = store.geometry(it->second.text)) bind(b, it->second.text, *geo);
        continue;
      }
      for (const auto& [subject, geo] : store.geometries()) bind(b, subject, geo);
    }
    rows = std::move(next);
  }
  if (ast.filter) {
    std::vector<Binding> kept;
    for (const Binding& b : rows) {
      const Value& lhs = b.at(ast.filter->lhs);
      const Value& rhs = b.at(ast.filter->rhs);
      if (lhs.geometry == nullptr || rhs.geometry == nullptr) {
        throw SemanticError("filter argument has no geometry");
      }
      if (evaluate_spatial(ast.filter->function, lhs.geometry->polygon, rhs.geometry->polygon)) {
        kept.push_back(b);
      }
    }
    rows = std::move(kept);
  }

  ResultTable table;
  table.columns = ast.projected;
  for (const Binding& b : rows) {
    std::vector<std::string> row;
    for (const auto& v : ast.projected) row.push_back(b.at(v).text);
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end());
  if (ast.distinct) {
    table.rows.erase(std::unique(table.rows.begin(), table.rows.end()), table.rows.end());
  }
  return table;
}

inline ResultTable execute(const Store& store, std::string_view query) {
  return execute(store, parse_query(query));
}

struct FixtureConfig {
  std::size_t rows = 6;
  std::size_t cols = 6;
  std::uint64_t seed = 0;
  std::vector<std::string> class_list;
};

inline std::string area_iri(std::size_t index) {
  return "http://geo.linkedopendata.gr/corine/Area_" + std::to_string(index);
}

/// Synthetic land-cover map: a grid of unit cells with seeded land uses, plus
/// one nested square per five cells, placed inside randomly chosen cells.
/// Shared cell edges give sfTouches witnesses and nested squares give
/// sfContains witnesses.
inline std::string generate_fixture(const FixtureConfig& cfg) {
  if (cfg.rows < 2 || cfg.cols < 2) throw ArgumentError("fixture grid must be at least 2x2");
  if (cfg.class_list.empty()) throw ArgumentError("fixture needs at least one land-use class");
  Rng rng(cfg.seed);
  const std::size_t n_classes = cfg.class_list.size();
  std::ostringstream out;
  std::size_t next_area = 0;
  const auto emit = [&](std::size_t class_idx, double x0, double y0, double x1, double y1) {
    const std::string subject = area_iri(next_area++);
    geom::Polygon p{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}};
    out << '<' << subject << "> <" << corine_iri("hasLandUse") << "> <"
        << corine_iri(cfg.class_list[class_idx]) << "> .\n";
    out << '<' << subject << "> <" << corine_iri("hasGeometry") << "> \"" << geom::to_wkt(p)
        << "\"^^<" << kWktDatatype << "> .\n";
  };

  std::vector<std::size_t> cell_class(cfg.rows * cfg.cols);
  for (auto& c : cell_class) c = static_cast<std::size_t>(rng.below(n_classes));
  for (std::size_t r = 0; r < cfg.rows; ++r) {
    for (std::size_t c = 0; c < cfg.cols; ++c) {
      emit(cell_class[r * cfg.cols + c], double(c), double(r), double(c + 1), double(r + 1));
    }
  }
  const std::size_t nested = cfg.rows * cfg.cols / 5;
  std::vector<std::size_t> hosts(cell_class.size());
  for (std::size_t i = 0; i < hosts.size(); ++i) hosts[i] = i;
  rng.shuffle(hosts);
  for (std::size_t k = 0; k < nested; ++k) {
    const std::size_t cell = hosts[k];
    const std::size_t host_class = cell_class[cell];
    const std::size_t cls =
        n_classes > 1 ? (host_class + 1 + static_cast<std::size_t>(rng.below(n_classes - 1))) % n_classes
                      : host_class;
    const double x = double(cell % cfg.cols);
    const double y = double(cell / cfg.cols);
    emit(cls, x + 0.25, y + 0.25, x + 0.75, y + 0.75);
  }
  return out.str();
}

}  // namespace geoqa::triplestore
