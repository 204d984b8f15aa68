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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/nmt.hpp"
#include "geoqa/textpipe.hpp"

namespace geoqa::nmt {

inline constexpr std::string_view kCheckpointMagic = "geoqa-ckpt v1";

class CheckpointError : public Error {
 public:
  using Error::Error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  Hyperparams hp;
  ModelParams params;
  OptimizerState opt;
  textpipe::Vocab src_vocab;
  textpipe::Vocab tgt_vocab;
  std::vector<std::pair<std::string, std::string>> meta;  // free-form key=value, saved in order

  std::optional<std::string> meta_value(std::string_view key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& in) : in_(in) {}

  std::string line(std::string_view what) {
    std::string s;
    if (!std::getline(in_, s)) throw CheckpointTruncatedError("checkpoint truncated while reading " + std::string(what));
    ++line_no_;
    return s;
  }

  bool eof() { return in_.peek() == std::char_traits<char>::eof(); }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw CheckpointError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

inline void read_matrix(CheckpointReader& r, std::string_view expected_name, Eigen::Index rows, Eigen::Index cols,
                        Matrix& m) {
  std::istringstream head(r.line("parameter header"));
  std::string tag, name;
  Eigen::Index fr = -1, fc = -1;
  head >> tag >> name >> fr >> fc;
  if (tag != "param" || name != expected_name) {
    throw CheckpointError("expected parameter block " + std::string(expected_name) + ", found '" + tag + " " + name + "'");
  }
  if (fr != rows || fc != cols) {
    throw CheckpointShapeError("parameter " + name + " is " + std::to_string(fr) + "x" + std::to_string(fc) +
                               ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  m.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string text = r.line("parameter values");
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (Eigen::Index j = 0; j < cols; ++j) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) {
        throw CheckpointTruncatedError("parameter " + name + " row " + std::to_string(i) + " is short");
      }
      m(i, j) = v;
      p = ptr;
    }
  }
}

}  // namespace detail

/// Text checkpoint: magic line, key=value header, both vocabularies, then
/// every parameter and Adam moment as `param name rows cols` followed by
/// row-major shortest-round-trip decimals.
inline std::string checkpoint_text(const Checkpoint& ck) {
  std::ostringstream out;
  const auto& hp = ck.hp;
  out << kCheckpointMagic << '\n';
  out << "embed_dim=" << hp.embed_dim << '\n';
  out << "hidden_dim=" << hp.hidden_dim << '\n';
  out << "attn_dim=" << hp.attn_dim << '\n';
  out << "batch_size=" << hp.batch_size << '\n';
  out << "learning_rate=" << detail::format_double(hp.learning_rate) << '\n';
  out << "adam_beta1=" << detail::format_double(hp.adam_beta1) << '\n';
  out << "adam_beta2=" << detail::format_double(hp.adam_beta2) << '\n';
  out << "adam_eps=" << detail::format_double(hp.adam_eps) << '\n';
  out << "epochs=" << hp.epochs << '\n';
  out << "max_decode_len=" << hp.max_decode_len << '\n';
  out << "seed=" << hp.seed << '\n';
  out << "bridge=forward-final\n";
  out << "src_vocab_size=" << ck.src_vocab.size() << '\n';
  out << "tgt_vocab_size=" << ck.tgt_vocab.size() << '\n';
  out << "adam_step=" << ck.opt.t << '\n';
  for (const auto& [k, v] : ck.meta) out << "meta." << k << '=' << v << '\n';
  out << "end_header\n";
  out << "vocab src " << ck.src_vocab.size() << '\n' << ck.src_vocab.to_text();
  out << "vocab tgt " << ck.tgt_vocab.size() << '\n' << ck.tgt_vocab.to_text();
  const auto ps = ck.params.tensors();
  const auto ms = ck.opt.m.tensors();
  const auto vs = ck.opt.v.tensors();
  for (std::size_t i = 0; i < ps.size(); ++i) detail::write_matrix(out, ModelParams::name(i), *ps[i]);
  for (std::size_t i = 0; i < ms.size(); ++i) detail::write_matrix(out, "adam.m." + std::string(ModelParams::name(i)), *ms[i]);
  for (std::size_t i = 0; i < vs.size(); ++i) detail::write_matrix(out, "adam.v." + std::string(ModelParams::name(i)), *vs[i]);
  out << "end\n";
  return out.str();
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::string text = checkpoint_text(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

/// Parses a checkpoint. With `expected` set, its model dimensions must match
/// the file's or a CheckpointShapeError is raised.
inline Checkpoint read_checkpoint(std::istream& in, const Hyperparams* expected = nullptr) {
  detail::CheckpointReader r(in);
  std::string magic;
  if (!std::getline(in, magic)) throw CheckpointTruncatedError("empty checkpoint");
  if (magic != kCheckpointMagic) throw CheckpointVersionError("unsupported checkpoint header '" + magic + "'");

  std::map<std::string, std::string> header;
  Checkpoint ck;
  while (true) {
    const std::string line = r.line("header");
    if (line == "end_header") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.rfind("meta.", 0) == 0) {
      ck.meta.emplace_back(key.substr(5), value);
    } else {
      header[key] = value;
    }
  }
  const auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw CheckpointError("checkpoint header lacks " + key);
    return it->second;
  };
  auto& hp = ck.hp;
  hp.embed_dim = detail::parse_value<int>("embed_dim", get("embed_dim"));
  hp.hidden_dim = detail::parse_value<int>("hidden_dim", get("hidden_dim"));
  hp.attn_dim = detail::parse_value<int>("attn_dim", get("attn_dim"));
  hp.batch_size = detail::parse_value<int>("batch_size", get("batch_size"));
  hp.learning_rate = detail::parse_value<double>("learning_rate", get("learning_rate"));
  hp.adam_beta1 = detail::parse_value<double>("adam_beta1", get("adam_beta1"));
  hp.adam_beta2 = detail::parse_value<double>("adam_beta2", get("adam_beta2"));
  hp.adam_eps = detail::parse_value<double>("adam_eps", get("adam_eps"));
  hp.epochs = detail::parse_value<int>("epochs", get("epochs"));
  hp.max_decode_len = detail::parse_value<int>("max_decode_len", get("max_decode_len"));
  hp.seed = detail::parse_value<std::uint64_t>("seed", get("seed"));
  ck.opt.t = detail::parse_value<std::int64_t>("adam_step", get("adam_step"));
  if (get("bridge") != "forward-final") throw CheckpointError("unsupported encoder bridge " + get("bridge"));
  const auto src_size = detail::parse_value<std::size_t>("src_vocab_size", get("src_vocab_size"));
  const auto tgt_size = detail::parse_value<std::size_t>("tgt_vocab_size", get("tgt_vocab_size"));
  if (expected != nullptr && (expected->embed_dim != hp.embed_dim || expected->hidden_dim != hp.hidden_dim ||
                              expected->attn_dim != hp.attn_dim)) {
    throw CheckpointShapeError("checkpoint dimensions (embed " + std::to_string(hp.embed_dim) + ", hidden " +
                               std::to_string(hp.hidden_dim) + ", attn " + std::to_string(hp.attn_dim) +
                               ") differ from the requested model");
  }

  const auto read_vocab = [&](std::string_view side, std::size_t size) {
    std::istringstream head(r.line("vocabulary header"));
    std::string tag, name;
    std::size_t n = 0;
    head >> tag >> name >> n;
    if (tag != "vocab" || name != side) throw CheckpointError("expected vocab " + std::string(side));
    if (n != size) throw CheckpointShapeError("vocab " + std::string(side) + " size disagrees with header");
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < n; ++i) lines.push_back(r.line("vocabulary"));
    return textpipe::Vocab::from_lines(lines);
  };
  ck.src_vocab = read_vocab("src", src_size);
  ck.tgt_vocab = read_vocab("tgt", tgt_size);

  const auto shapes = tensor_shapes(hp, Eigen::Index(src_size), Eigen::Index(tgt_size));
  auto ps = ck.params.tensors();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    detail::read_matrix(r, ModelParams::name(i), shapes[i].first, shapes[i].second, *ps[i]);
  }
  auto ms = ck.opt.m.tensors();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    detail::read_matrix(r, "adam.m." + std::string(ModelParams::name(i)), shapes[i].first, shapes[i].second, *ms[i]);
  }
  auto vs = ck.opt.v.tensors();
  for (std::size_t i = 0; i < vs.size(); ++i) {
    detail::read_matrix(r, "adam.v." + std::string(ModelParams::name(i)), shapes[i].first, shapes[i].second, *vs[i]);
  }
  if (r.line("trailer") != "end") throw CheckpointError("missing checkpoint trailer");
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path, const Hyperparams* expected = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_checkpoint(in, expected);
}

}  // namespace geoqa::nmt
