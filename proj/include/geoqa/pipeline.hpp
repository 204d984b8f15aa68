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

// Subcommand logic shared by the command-line tool and the acceptance suite.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "geoqa/attention_export.hpp"
#include "geoqa/bleu.hpp"
#include "geoqa/checkpoint.hpp"
#include "geoqa/corpus.hpp"
#include "geoqa/geoencode.hpp"
#include "geoqa/nmt.hpp"
#include "geoqa/textpipe.hpp"
#include "geoqa/triplestore.hpp"

namespace geoqa::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // computational failure (divergence)
inline constexpr int kExitUsage = 2;    // usage or I/O error

/// Every stage draws from one user seed through fixed offsets.
struct Seeds {
  std::uint64_t base = 0;
  std::uint64_t corpus() const { return base; }
  std::uint64_t split() const { return base + 1; }
  std::uint64_t model() const { return base + 2; }  // init; the epoch shuffle uses model() + 1
  std::uint64_t fixture() const { return base + 4; }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

inline std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

/// Land-use classes named in encoded queries, in first-occurrence order.
inline std::vector<std::string> classes_in(const std::vector<corpus::QueryPair>& pairs) {
  std::vector<std::string> out;
  for (const auto& p : pairs) {
    const auto toks = geoencode::EncodedQuery::from_text(p.encoded_query).tokens;
    for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
      if (toks[i] == "hasLandUse" && toks[i + 1] == "corine" &&
          std::find(out.begin(), out.end(), toks[i + 2]) == out.end()) {
        out.push_back(toks[i + 2]);
      }
    }
  }
  return out;
}

struct Vocabs {
  textpipe::Vocab src;
  textpipe::Vocab tgt;
};

inline Vocabs build_vocabs(const std::vector<corpus::QueryPair>& train) {
  std::vector<std::vector<std::string>> src, tgt;
  for (const auto& p : train) {
    src.push_back(textpipe::tokenize(p.question));
    tgt.push_back(textpipe::tokenize(p.encoded_query));
  }
  return {textpipe::Vocab::build(src), textpipe::Vocab::build(tgt)};
}

inline nmt::Dataset numericalize(const std::vector<corpus::QueryPair>& pairs, const Vocabs& v) {
  nmt::Dataset d;
  for (const auto& p : pairs) {
    d.sources.push_back(nmt::source_ids(v.src, p.question));
    d.targets.push_back(nmt::target_ids(v.tgt, p.encoded_query));
  }
  return d;
}

struct GenOptions {
  std::size_t pairs = 528;
  double spatial_frac = 0.6;
  std::vector<std::string> classes = corpus::default_classes();
  std::uint64_t seed = 0;
  std::size_t grid = 6;
  std::string out_corpus = "corpus.tsv";
  std::string out_fixture = "fixture.nt";
};

inline int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const Seeds seeds{o.seed};
    corpus::CorpusConfig cfg;
    cfg.class_list = o.classes;
    cfg.pair_target = o.pairs;
    cfg.spatial_fraction_target = o.spatial_frac;
    cfg.seed = seeds.corpus();
    const auto pairs = corpus::generate_pairs(cfg);
    const std::string fixture =
        triplestore::generate_fixture({o.grid, o.grid, seeds.fixture(), o.classes});
    write_file(o.out_corpus, corpus::to_tsv(pairs));
    write_file(o.out_fixture, fixture);
    std::size_t spatial = 0;
    for (const auto& p : pairs) spatial += p.spatial.has_value();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", double(spatial) / double(pairs.size()));
    out << "pairs\t" << pairs.size() << "\nspatial_fraction\t" << buf << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "gen: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct TrainOptions {
  std::string corpus;
  double split = 0.2;
  nmt::Hyperparams hp;
  std::uint64_t seed = 0;
  std::string out = "model.ckpt";
};

struct TrainOutcome {
  nmt::Checkpoint checkpoint;
  std::vector<double> loss_history;
};

/// Split, build vocabularies, train; the returned checkpoint records the
/// split parameters and class list for eval and answer.
inline TrainOutcome train_model(const std::vector<corpus::QueryPair>& pairs, double split_fraction,
                                nmt::Hyperparams hp, std::uint64_t seed, const nmt::ProgressSink& progress = {}) {
  const Seeds seeds{seed};
  const auto parts = corpus::split(pairs, split_fraction, seeds.split());
  if (parts.train.empty()) throw ArgumentError("training split is empty");
  Vocabs v = build_vocabs(parts.train);
  hp.seed = seeds.model();
  TrainOutcome out;
  auto& ck = out.checkpoint;
  ck.hp = hp;
  ck.params = nmt::init_model(hp, v.src.size(), v.tgt.size());
  ck.opt = nmt::OptimizerState::for_model(ck.params);
  out.loss_history = nmt::train(ck.params, ck.opt, numericalize(parts.train, v), hp, progress);
  ck.src_vocab = std::move(v.src);
  ck.tgt_vocab = std::move(v.tgt);
  ck.meta = {{"classes", join(classes_in(pairs), ',')},
             {"split_fraction", nmt::detail::format_double(split_fraction)},
             {"split_seed", std::to_string(seeds.split())},
             {"corpus_pairs", std::to_string(pairs.size())}};
  return out;
}

inline int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto pairs = corpus::load_pairs(o.corpus);
    char buf[64];
    auto outcome = train_model(pairs, o.split, o.hp, o.seed, [&](int epoch, double loss) {
      std::snprintf(buf, sizeof buf, "%d\t%.6f", epoch + 1, loss);
      out << buf << '\n' << std::flush;
    });
    nmt::save_checkpoint(outcome.checkpoint, o.out);
    return kExitOk;
  } catch (const nmt::DivergedError& e) {
    err << "train: " << e.what() << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    err << "train: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline geoencode::ReservedWords reserved_words(const nmt::Checkpoint& ck) {
  return geoencode::ReservedWords(split_list(ck.meta_value("classes").value_or(""), ','));
}

struct Prediction {
  std::string question;
  std::vector<std::string> predicted;  // lowercase encoded tokens
  std::vector<std::string> reference;
  std::optional<std::string> decoded;  // set when the prediction decodes and parses
};

struct Evaluation {
  bleu::BleuReport report;
  double validity = 0.0;
  std::vector<Prediction> predictions;
  std::vector<corpus::QueryPair> validation;

  std::string to_tsv() const {
    std::string out = report.to_tsv();
    char buf[64];
    std::snprintf(buf, sizeof buf, "bleu\t%.2f\nvalidity\t%.4f\n", 100.0 * report.cumulative[3], validity);
    return out + buf;
  }
};

/// Validation split recorded in the checkpoint, after checking that the
/// corpus reproduces the checkpoint's vocabularies.
inline std::vector<corpus::QueryPair> validation_split(const nmt::Checkpoint& ck,
                                                       const std::vector<corpus::QueryPair>& pairs) {
  const auto frac = ck.meta_value("split_fraction");
  const auto seed = ck.meta_value("split_seed");
  if (!frac || !seed) throw ArgumentError("checkpoint does not record its training split");
  const auto parts = corpus::split(pairs, std::stod(*frac), std::stoull(*seed));
  const Vocabs v = build_vocabs(parts.train);
  if (v.src.hash() != ck.src_vocab.hash() || v.tgt.hash() != ck.tgt_vocab.hash()) {
    throw ArgumentError("corpus does not match the checkpoint (vocabulary hash differs)");
  }
  if (parts.validation.empty()) throw ArgumentError("validation split is empty");
  return parts.validation;
}

inline Evaluation evaluate(const nmt::Checkpoint& ck, const std::vector<corpus::QueryPair>& validation) {
  if (validation.empty()) throw ArgumentError("validation split is empty");
  const auto reserved = reserved_words(ck);
  Evaluation ev;
  ev.validation = validation;
  std::vector<bleu::Sentence> cands, refs;
  std::size_t valid = 0;
  for (const auto& p : validation) {
    Prediction pr;
    pr.question = p.question;
    pr.predicted = nmt::translate(ck.params, p.question, ck.src_vocab, ck.tgt_vocab, ck.hp).tokens;
    pr.reference = textpipe::strip_markers(textpipe::tokenize(p.encoded_query));
    try {
      std::string q = geoencode::decode_query(geoencode::EncodedQuery{pr.predicted}, reserved);
      triplestore::parse_query(q);
      pr.decoded = std::move(q);
      ++valid;
    } catch (const Error&) {
    }
    cands.push_back(pr.predicted);
    refs.push_back(pr.reference);
    ev.predictions.push_back(std::move(pr));
  }
  ev.report = bleu::report(cands, refs);
  ev.validity = double(valid) / double(validation.size());
  return ev;
}

struct EvalOptions {
  std::string ckpt;
  std::string corpus;
};

inline int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto ck = nmt::load_checkpoint(o.ckpt);
    const auto pairs = corpus::load_pairs(o.corpus);
    out << evaluate(ck, validation_split(ck, pairs)).to_tsv();
    return kExitOk;
  } catch (const Error& e) {
    err << "eval: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct AnswerOptions {
  std::string ckpt;
  std::string fixture;
};

/// Question -> encoded prediction -> decoded query -> result table.
inline std::string answer_question(const nmt::Checkpoint& ck, const triplestore::Store& store,
                                   const geoencode::ReservedWords& reserved, const std::string& question) {
  const auto t = nmt::translate(ck.params, question, ck.src_vocab, ck.tgt_vocab, ck.hp);
  const std::string query = geoencode::decode_query(geoencode::EncodedQuery{t.tokens}, reserved);
  const auto table = triplestore::execute(store, query);
  return "query\t" + query + "\n" + table.to_tsv();
}

inline int cmd_answer(const AnswerOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  nmt::Checkpoint ck;
  triplestore::Store store;
  try {
    ck = nmt::load_checkpoint(o.ckpt);
    store = triplestore::load_ntriples(read_file(o.fixture));
  } catch (const Error& e) {
    err << "answer: " << e.what() << '\n';
    return kExitUsage;
  }
  const auto reserved = reserved_words(ck);
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out << answer_question(ck, store, reserved, line);
    } catch (const Error& e) {
      out << "error\t" << e.what() << '\n';
    }
    out << '\n' << std::flush;
  }
  return kExitOk;
}

struct AttentionOptions {
  std::string ckpt;
  std::string question;
  std::string out = "attention.pgm";
};

inline int cmd_attention(const AttentionOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const auto ck = nmt::load_checkpoint(o.ckpt);
    const auto t = nmt::translate(ck.params, o.question, ck.src_vocab, ck.tgt_vocab, ck.hp);
    nmt::write_attention(t, o.out, o.out + ".labels.tsv");
    out << "prediction\t" << join(t.row_labels, ' ') << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "attention: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace geoqa::pipeline
