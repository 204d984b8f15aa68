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
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "geoqa/error.hpp"
#include "geoqa/nmt.hpp"

namespace geoqa::nmt {

/// Plain-text PGM (P2): one pixel per (output token, input token) cell,
/// weight scaled to 0..255.
inline std::string attention_pgm(const AttentionMatrix& m) {
  std::ostringstream out;
  out << "P2\n" << m.weights.cols() << ' ' << m.weights.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) {
      if (c) out << ' ';
      out << static_cast<int>(std::lround(std::clamp(m.weights(r, c), 0.0, 1.0) * 255.0));
    }
    out << '\n';
  }
  return out.str();
}

/// Sidecar listing `row<TAB>i<TAB>token` then `col<TAB>j<TAB>token`.
inline std::string attention_labels(const Translation& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.row_labels.size(); ++i) out << "row\t" << i << '\t' << t.row_labels[i] << '\n';
  for (std::size_t j = 0; j < t.column_labels.size(); ++j) out << "col\t" << j << '\t' << t.column_labels[j] << '\n';
  return out.str();
}

inline void write_attention(const Translation& t, const std::string& pgm_path, const std::string& labels_path) {
  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw IoError("cannot open " + pgm_path + " for writing");
  pgm << attention_pgm(t.attention);
  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot open " + labels_path + " for writing");
  labels << attention_labels(t);
}

}  // namespace geoqa::nmt
