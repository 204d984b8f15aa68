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
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "geoqa/error.hpp"

namespace geoqa::bleu {

using Sentence = std::vector<std::string>;

struct Precision {
  std::size_t matched = 0;  // clipped n-gram matches summed over the corpus
  std::size_t total = 0;    // candidate n-grams summed over the corpus
  bool degenerate = false;  // no candidate n-grams at all

  double value() const { return total == 0 ? 0.0 : double(matched) / double(total); }
};

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<std::string>(s.begin() + std::ptrdiff_t(i), s.begin() + std::ptrdiff_t(i + n))];
  }
  return counts;
}

inline void check_sizes(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.size() != references.size()) {
    throw ArgumentError("candidate and reference lists differ in length");
  }
}

}  // namespace detail

/// Corpus-level clipped n-gram precision.
inline Precision modified_precision(const std::vector<Sentence>& candidates,
                                    const std::vector<Sentence>& references, std::size_t n) {
  detail::check_sizes(candidates, references);
  if (n == 0) throw ArgumentError("n-gram order must be at least 1");
  Precision p;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto cand = detail::ngram_counts(candidates[i], n);
    const auto ref = detail::ngram_counts(references[i], n);
    for (const auto& [gram, count] : cand) {
      p.total += count;
      if (auto it = ref.find(gram); it != ref.end()) p.matched += std::min(count, it->second);
    }
  }
  p.degenerate = p.total == 0;
  return p;
}

inline double brevity_penalty(std::size_t candidate_length, std::size_t reference_length) {
  if (candidate_length == 0) return 0.0;
  if (candidate_length > reference_length) return 1.0;
  return std::exp(1.0 - double(reference_length) / double(candidate_length));
}

/// BP * exp(sum_n w_n ln p_n) with weights for n = 1..weights.size().
inline double corpus_bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references,
                          const std::vector<double>& weights) {
  detail::check_sizes(candidates, references);
  if (weights.empty()) throw ArgumentError("BLEU needs at least one weight");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ArgumentError("BLEU weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ArgumentError("BLEU weights must sum to 1");

  std::size_t c = 0;
  std::size_t r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += candidates[i].size();
    r += references[i].size();
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= weights.size(); ++n) {
    const double w = weights[n - 1];
    if (w == 0.0) continue;
    const double p = modified_precision(candidates, references, n).value();
    if (p == 0.0) return 0.0;
    log_sum += w * std::log(p);
  }
  return brevity_penalty(c, r) * std::exp(log_sum);
}

/// Individual (single-order) and cumulative (uniform 1..n) scores for n = 1..4.
struct BleuReport {
  std::array<double, 4> individual{};
  std::array<double, 4> cumulative{};
  std::size_t candidate_count = 0;

  /// Two-row table scaled by 100, two decimals.
  std::string to_tsv() const {
    std::string out = "type\t1-gram\t2-gram\t3-gram\t4-gram\n";
    char buf[32];
    for (const auto* row : {&individual, &cumulative}) {
      out += row == &individual ? "individual" : "cumulative";
      for (double v : *row) {
        std::snprintf(buf, sizeof buf, "\t%.2f", 100.0 * v);
        out += buf;
      }
      out += '\n';
    }
    return out;
  }
};

inline BleuReport report(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.empty()) throw ArgumentError("BLEU report needs at least one candidate");
  BleuReport rep;
  rep.candidate_count = candidates.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<double> single(n, 0.0);
    single[n - 1] = 1.0;
    rep.individual[n - 1] = corpus_bleu(candidates, references, single);
    rep.cumulative[n - 1] = corpus_bleu(candidates, references, std::vector<double>(n, 1.0 / double(n)));
  }
  return rep;
}

}  // namespace geoqa::bleu
