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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/geoencode.hpp"
#include "geoqa/random.hpp"

namespace geoqa::corpus {

enum class QuestionKind { What, Where, Which };
enum class SpatialPredicate { Touches, Contains };

inline std::string_view to_string(QuestionKind k) {
  switch (k) {
    case QuestionKind::What: return "what";
    case QuestionKind::Where: return "where";
    case QuestionKind::Which: return "which";
  }
  return "";
}

inline std::string_view to_string(std::optional<SpatialPredicate> p) {
  if (!p) return "none";
  return *p == SpatialPredicate::Touches ? "touches" : "contains";
}

struct QueryPair {
  std::string question;
  std::string encoded_query;
  QuestionKind kind = QuestionKind::Which;
  std::optional<SpatialPredicate> spatial;

  bool operator==(const QueryPair&) const = default;
};

struct SplitCorpus {
  std::vector<QueryPair> train;
  std::vector<QueryPair> validation;
};

inline const std::vector<std::string>& default_classes() {
  static const std::vector<std::string> kClasses = {
      "ContinuousUrbanFabric", "MixedForest", "MineralExtractionSites", "Airports", "ConstructionSites"};
  return kClasses;
}

struct CorpusConfig {
  std::vector<std::string> class_list = default_classes();
  int paraphrase_count = 5;
  double spatial_fraction_target = 0.6;
  std::size_t pair_target = 528;
  std::uint64_t seed = 0;

  void validate() const {
    if (class_list.empty()) throw ArgumentError("class list is empty");
    std::set<std::string> seen;
    for (const auto& c : class_list) {
      if (c.empty()) throw ArgumentError("empty class name");
      for (char ch : c) {
        if (!is_ascii_alpha(ch)) throw ArgumentError("class name '" + c + "' must match [A-Za-z]+");
      }
      if (!seen.insert(c).second) throw ArgumentError("duplicate class name '" + c + "'");
    }
    if (paraphrase_count < 1 || paraphrase_count > 5) throw ArgumentError("paraphrase_count must be in 1..5");
    if (!(spatial_fraction_target >= 0.0 && spatial_fraction_target <= 1.0)) {
      throw ArgumentError("spatial_fraction_target must be in [0, 1]");
    }
    if (pair_target == 0) throw ArgumentError("pair_target must be positive");
  }
};

/// Too few distinct (template, paraphrase, class) combinations for the request.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// "MineralExtractionSites" -> "mineral extraction sites", "MixedForest" -> "mixed forests".
inline std::string natural_mention(std::string_view cls) {
  std::string out;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (i > 0 && cls[i] >= 'A' && cls[i] <= 'Z') out += ' ';
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(cls[i])));
  }
  if (!out.empty() && out.back() != 's') out += 's';
  return out;
}

/// "MixedForest" -> "mixedforest".
inline std::string fused_mention(std::string_view cls) { return ascii_lower(cls); }

inline std::string areas_query(std::string_view cls) {
  return "select distinct ?area where { ?area corine:hasLandUse corine:" + std::string(cls) + " }";
}

inline std::string geometry_query(std::string_view cls) {
  return "select distinct ?area ?geom where { ?area corine:hasLandUse corine:" + std::string(cls) +
         " . ?area corine:hasGeometry ?geom }";
}

inline std::string spatial_query(std::string_view first, std::string_view second, SpatialPredicate p) {
  const std::string fn = p == SpatialPredicate::Touches ? "sfTouches" : "sfContains";
  return "select distinct ?area1 ?area2 where { ?area1 corine:hasLandUse corine:" + std::string(first) +
         " . ?area2 corine:hasLandUse corine:" + std::string(second) +
         " . ?area1 corine:hasGeometry ?geom1 . ?area2 corine:hasGeometry ?geom2 . filter (geof:" + fn +
         "(?geom1, ?geom2)) }";
}

namespace detail {

using Bank = std::array<std::array<std::string_view, 5>, 3>;  // indexed by kind: which, what, where

inline constexpr std::array<QuestionKind, 3> kKindOrder = {QuestionKind::Which, QuestionKind::What,
                                                           QuestionKind::Where};

inline constexpr Bank kAreaTemplates = {{
    {"which areas are covered by {X}", "which are the areas covered by {X}", "which areas have {X}",
     "which regions are classified as {X}", "which areas are of type {X}"},
    {"what are the areas covered by {X}", "what areas are covered by {X}", "what are the areas of {X}",
     "what regions are classified as {X}", "what are the regions with {X}"},
    {"where are the {X}", "where can i find {X}", "where are the areas covered by {X}",
     "where are {X} located", "where are the regions of {X}"},
}};

inline constexpr Bank kGeometryTemplates = {{
    {"which geometries belong to {X}", "which polygons represent {X}",
     "which areas are covered by {X} and what are their geometries",
     "which areas have {X} and what are their shapes", "which shapes outline the {X}"},
    {"what are the geometries of {X}", "what are the geometries of areas covered by {X}",
     "what are the shapes of {X}", "what polygons represent {X}", "what are the boundaries of the {X}"},
    {"where are the {X} and what are their geometries", "where are the {X} with their shapes",
     "where are areas of {X} and their polygons", "where are the {X} shown with geometry",
     "where do {X} lie and what are their geometries"},
}};

inline constexpr Bank kTouchesTemplates = {{
    {"which are the areas that have {X} adjacent to {Y}", "which areas of {X} are adjacent to {Y}",
     "which {X} are adjacent to {Y}", "which {X} areas touch {Y}", "which areas have {X} bordering {Y}"},
    {"what are the areas that have {X} adjacent to {Y}", "what areas of {X} are adjacent to {Y}",
     "what are the {X} adjacent to {Y}", "what {X} areas lie adjacent to {Y}",
     "what are the areas with {X} next to {Y}"},
    {"where are the {X} adjacent to {Y}", "where are areas of {X} that are adjacent to {Y}",
     "where do {X} lie adjacent to {Y}", "where are {X} bordering {Y}", "where can i find {X} adjacent to {Y}"},
}};

inline constexpr Bank kContainsTemplates = {{
    {"which areas of {X} contain {Y}", "which {X} contain {Y}", "which are the {X} containing {Y}",
     "which areas have {X} that contain {Y}", "which {Y} lie within {X}"},
    {"what are the areas of {X} that contain {Y}", "what {X} contain {Y}", "what are the {X} containing {Y}",
     "what areas have {X} enclosing {Y}", "what are the areas where {Y} lies within {X}"},
    {"where are the {X} that contain {Y}", "where are {X} containing {Y}", "where do {X} contain {Y}",
     "where are areas of {X} which contain {Y}", "where is {Y} located within {X}"},
}};

// Reference phrasings; kept whenever their classes are configured.
inline constexpr std::array<std::string_view, 3> kPinnedQuestions = {
    "which areas are covered by airports",
    "which are the areas that have mixed forests adjacent to mineral extraction sites",
    "what are the areas that have constructionsites adjacent to mixedforest",
};

inline std::string fill(std::string_view tmpl, std::string_view x, std::string_view y) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.substr(i, 3) == "{X}") {
      out += x;
      i += 2;
    } else if (tmpl.substr(i, 3) == "{Y}") {
      out += y;
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

struct Candidate {
  QuestionKind kind;
  std::string question;
  std::string raw_query;
  std::optional<SpatialPredicate> spatial;
};

struct Category {
  std::string name;
  std::vector<Candidate> candidates;
};

inline Category enumerate(std::string name, const Bank& bank, const CorpusConfig& cfg, bool two_classes,
                          std::optional<SpatialPredicate> spatial, bool geometry) {
  Category cat{std::move(name), {}};
  std::set<std::string> seen;
  const auto& classes = cfg.class_list;
  for (std::size_t k = 0; k < kKindOrder.size(); ++k) {
    for (int p = 0; p < cfg.paraphrase_count; ++p) {
      for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = 0; b < (two_classes ? classes.size() : 1); ++b) {
          if (two_classes && a == b) continue;
          for (int style = 0; style < 2; ++style) {
            const auto mention = style == 0 ? natural_mention : fused_mention;
            std::string q = fill(bank[k][static_cast<std::size_t>(p)], mention(classes[a]),
                                 two_classes ? mention(classes[b]) : std::string());
            if (!seen.insert(q).second) continue;
            std::string raw = two_classes ? spatial_query(classes[a], classes[b], *spatial)
                              : geometry ? geometry_query(classes[a])
                                         : areas_query(classes[a]);
            cat.candidates.push_back({kKindOrder[k], std::move(q), std::move(raw), spatial});
          }
        }
      }
    }
  }
  return cat;
}

// Pinned questions first, then a per-kind seeded shuffle drawn round-robin
// over kinds so no kind dominates.
inline std::vector<Candidate> select(const Category& cat, std::size_t count, Rng& rng) {
  if (cat.candidates.size() < count) {
    throw CapacityError("cannot generate " + std::to_string(count) + " " + cat.name + " pairs: only " +
                        std::to_string(cat.candidates.size()) + " distinct combinations (short by " +
                        std::to_string(count - cat.candidates.size()) + ")");
  }
  std::vector<Candidate> chosen;
  std::array<std::vector<const Candidate*>, 3> by_kind;
  for (const Candidate& c : cat.candidates) {
    bool pinned = false;
    for (auto q : kPinnedQuestions) pinned = pinned || c.question == q;
    if (pinned && chosen.size() < count) {
      chosen.push_back(c);
      continue;
    }
    by_kind[static_cast<std::size_t>(c.kind == QuestionKind::Which ? 0 : c.kind == QuestionKind::What ? 1 : 2)]
        .push_back(&c);
  }
  for (auto& group : by_kind) rng.shuffle(group);
  std::array<std::size_t, 3> next{};
  while (chosen.size() < count) {
    for (std::size_t k = 0; k < 3 && chosen.size() < count; ++k) {
      if (next[k] < by_kind[k].size()) chosen.push_back(*by_kind[k][next[k]++]);
    }
  }
  return chosen;
}

}  // namespace detail

/// Deterministic templated corpus. The spatial share is exact up to
/// rounding and split evenly between sfTouches and sfContains; the
/// non-spatial share is split between area and geometry lookups.
inline std::vector<QueryPair> generate_pairs(const CorpusConfig& cfg) {
  cfg.validate();
  const std::size_t total = cfg.pair_target;
  const auto n_spatial = static_cast<std::size_t>(std::floor(cfg.spatial_fraction_target * double(total) + 0.5));
  const std::size_t n_touches = (n_spatial + 1) / 2;
  const std::size_t n_contains = n_spatial - n_touches;
  const std::size_t n_plain = total - n_spatial;
  const std::size_t n_areas = (n_plain + 1) / 2;
  const std::size_t n_geometry = n_plain - n_areas;

  using detail::enumerate;
  const std::array<std::pair<detail::Category, std::size_t>, 4> plan = {{
      {enumerate("area-lookup", detail::kAreaTemplates, cfg, false, std::nullopt, false), n_areas},
      {enumerate("geometry-lookup", detail::kGeometryTemplates, cfg, false, std::nullopt, true), n_geometry},
      {enumerate("sfTouches", detail::kTouchesTemplates, cfg, true, SpatialPredicate::Touches, false), n_touches},
      {enumerate("sfContains", detail::kContainsTemplates, cfg, true, SpatialPredicate::Contains, false),
       n_contains},
  }};

  Rng rng(cfg.seed);
  std::vector<QueryPair> pairs;
  pairs.reserve(total);
  for (const auto& [category, count] : plan) {
    for (auto& c : detail::select(category, count, rng)) {
      pairs.push_back({c.question, geoencode::encode_query(c.raw_query).text(), c.kind, c.spatial});
    }
  }
  rng.shuffle(pairs);
  return pairs;
}

/// Seeded partition; the validation side gets round-half-up(fraction * n)
/// pairs. Both sides keep the input order.
inline SplitCorpus split(const std::vector<QueryPair>& pairs, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ArgumentError("validation fraction must be in (0, 1)");
  }
  if (pairs.empty()) throw ArgumentError("cannot split an empty corpus");
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * double(pairs.size()) + 0.5));
  const auto perm = shuffled_indices(pairs.size(), seed);
  std::vector<bool> is_val(pairs.size(), false);
  for (std::size_t i = 0; i < n_val; ++i) is_val[perm[i]] = true;
  SplitCorpus out;
  for (std::size_t i = 0; i < pairs.size(); ++i) (is_val[i] ? out.validation : out.train).push_back(pairs[i]);
  return out;
}

inline std::string to_tsv(const std::vector<QueryPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    for (const std::string* field : {&p.question, &p.encoded_query}) {
      if (field->find_first_of("\t\n") != std::string::npos) {
        throw ArgumentError("corpus fields may not contain tabs or newlines");
      }
    }
    out += p.question;
    out += '\t';
    out += p.encoded_query;
    out += '\t';
    out += to_string(p.kind);
    out += '\t';
    out += to_string(p.spatial);
    out += '\n';
  }
  return out;
}

inline std::vector<QueryPair> from_tsv(std::string_view text) {
  std::vector<QueryPair> pairs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) {
      throw FormatError(line_no, "expected 4 tab-separated columns, found " + std::to_string(cols.size()));
    }
    QueryPair p{std::string(cols[0]), std::string(cols[1]), QuestionKind::What, std::nullopt};
    if (cols[2] == "what") p.kind = QuestionKind::What;
    else if (cols[2] == "where") p.kind = QuestionKind::Where;
    else if (cols[2] == "which") p.kind = QuestionKind::Which;
    else throw FormatError(line_no, "unknown question kind '" + std::string(cols[2]) + "'");
    if (cols[3] == "touches") p.spatial = SpatialPredicate::Touches;
    else if (cols[3] == "contains") p.spatial = SpatialPredicate::Contains;
    else if (cols[3] != "none") throw FormatError(line_no, "unknown spatial tag '" + std::string(cols[3]) + "'");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void save_pairs(const std::vector<QueryPair>& pairs, const std::string& path) {
  const std::string text = to_tsv(pairs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

inline std::vector<QueryPair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_tsv(buf.str());
}

}  // namespace geoqa::corpus
