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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/query_lexer.hpp"

namespace geoqa::textpipe {

inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kStart = "<start>";
inline constexpr std::string_view kEnd = "<end>";
inline constexpr std::string_view kUnk = "<unk>";

inline constexpr int kPadId = 0;
inline constexpr int kStartId = 1;
inline constexpr int kEndId = 2;
inline constexpr int kUnkId = 3;

inline bool is_marker(std::string_view tok) { return tok == kPad || tok == kStart || tok == kEnd || tok == kUnk; }

/// Lowercases, drops `?`, `.` and `,`, splits on whitespace and wraps the
/// result in `<start>` ... `<end>`.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out{std::string(kStart)};
  std::string cur;
  for (char c : text) {
    if (c == '?' || c == '.' || c == ',') continue;
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  out.emplace_back(kEnd);
  return out;
}

/// Token list without the `<start>`/`<end>` wrapping.
inline std::vector<std::string> strip_markers(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t != kStart && t != kEnd) out.push_back(t);
  }
  return out;
}

class Vocab {
 public:
  Vocab() {
    for (auto t : {kPad, kStart, kEnd, kUnk}) insert(std::string(t));
  }

  /// Reserved block, then every distinct token in first-occurrence order.
  static Vocab build(const std::vector<std::vector<std::string>>& corpus) {
    Vocab v;
    for (const auto& seq : corpus) {
      for (const auto& tok : seq) v.insert(ascii_lower(tok));
    }
    return v;
  }

  /// One token per line; line number minus one is the id.
  static Vocab from_lines(const std::vector<std::string>& lines) {
    if (lines.size() < 4 || lines[0] != kPad || lines[1] != kStart || lines[2] != kEnd || lines[3] != kUnk) {
      throw ArgumentError("vocabulary must begin with <pad> <start> <end> <unk>");
    }
    Vocab v;
    for (std::size_t i = 4; i < lines.size(); ++i) {
      if (v.contains(lines[i])) throw ArgumentError("duplicate vocabulary token '" + lines[i] + "'");
      v.insert(lines[i]);
    }
    return v;
  }

  std::size_t size() const { return id_to_token_.size(); }

  bool contains(const std::string& tok) const { return token_to_id_.count(tok) != 0; }

  int id(const std::string& tok) const {
    auto it = token_to_id_.find(tok);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(size()));
    }
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::string to_text() const {
    std::string out;
    for (const auto& t : id_to_token_) {
      out += t;
      out += '\n';
    }
    return out;
  }

  /// FNV-1a over the serialized vocabulary.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_text()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  void insert(const std::string& tok) {
    if (token_to_id_.count(tok)) return;
    token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(tok);
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

inline std::vector<int> numericalize(const Vocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

inline std::vector<std::string> denumericalize(const Vocab& vocab, const std::vector<int>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab.token(id));
  return out;
}

/// Row-major id matrix padded with `<pad>` to the longest row.
struct PaddedIds {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> ids;
  std::vector<std::size_t> lengths;

  int at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
};

inline PaddedIds pad_sequences(const std::vector<std::vector<int>>& seqs) {
  PaddedIds out;
  out.rows = seqs.size();
  for (const auto& s : seqs) out.cols = std::max(out.cols, s.size());
  out.ids.assign(out.rows * out.cols, kPadId);
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    out.lengths.push_back(seqs[r].size());
    for (std::size_t c = 0; c < seqs[r].size(); ++c) out.ids[r * out.cols + c] = seqs[r][c];
  }
  return out;
}

struct Batch {
  PaddedIds inputs;
  PaddedIds targets;
};

inline PaddedIds pad_batch(const std::vector<std::vector<int>>& seqs) {
  if (seqs.empty()) throw ArgumentError("cannot pad an empty batch");
  return pad_sequences(seqs);
}

inline Batch make_batch(const std::vector<std::vector<int>>& sources, const std::vector<std::vector<int>>& targets) {
  if (sources.size() != targets.size()) throw ArgumentError("source and target batch sizes differ");
  return Batch{pad_batch(sources), pad_batch(targets)};
}

inline void save_vocab(const Vocab& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << vocab.to_text();
}

inline Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return Vocab::from_lines(lines);
}

}  // namespace geoqa::textpipe
