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

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "geoqa/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace geoqa::pipeline;

  CLI::App app{"Natural-language questions to GeoSPARQL over land-cover linked data"};
  app.require_subcommand(1);

  GenOptions gen;
  std::string classes;
  auto* gen_cmd = app.add_subcommand("gen", "Generate the question/query corpus and a geometry fixture");
  gen_cmd->add_option("--pairs", gen.pairs, "Number of question/query pairs")->capture_default_str();
  gen_cmd->add_option("--spatial-frac", gen.spatial_frac, "Fraction of pairs with a spatial filter")
      ->capture_default_str();
  gen_cmd->add_option("--classes", classes, "Comma-separated land-use classes (CamelCase)");
  gen_cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--out-corpus", gen.out_corpus, "Corpus TSV path")->capture_default_str();
  gen_cmd->add_option("--out-fixture", gen.out_fixture, "Fixture N-Triples path")->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the encoder-decoder and write a checkpoint");
  train_cmd->add_option("--corpus", train.corpus, "Corpus TSV")->required();
  train_cmd->add_option("--split", train.split, "Validation fraction")->capture_default_str();
  train_cmd->add_option("--epochs", train.hp.epochs)->capture_default_str();
  train_cmd->add_option("--embed", train.hp.embed_dim)->capture_default_str();
  train_cmd->add_option("--hidden", train.hp.hidden_dim)->capture_default_str();
  train_cmd->add_option("--batch", train.hp.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", train.hp.learning_rate)->capture_default_str();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "BLEU report on the validation split");
  eval_cmd->add_option("--ckpt", eval.ckpt)->required();
  eval_cmd->add_option("--corpus", eval.corpus)->required();

  AnswerOptions answer;
  auto* answer_cmd = app.add_subcommand("answer", "Answer questions read from stdin, one per line");
  answer_cmd->add_option("--ckpt", answer.ckpt)->required();
  answer_cmd->add_option("--fixture", answer.fixture)->required();

  AttentionOptions attention;
  auto* attention_cmd = app.add_subcommand("attention", "Export the attention heatmap of one translation");
  attention_cmd->add_option("--ckpt", attention.ckpt)->required();
  attention_cmd->add_option("--question", attention.question)->required();
  attention_cmd->add_option("--out", attention.out, "PGM path; labels go to <out>.labels.tsv")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*gen_cmd) {
    if (!classes.empty()) gen.classes = split_list(classes, ',');
    return cmd_gen(gen, std::cout, std::cerr);
  }
  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  if (*answer_cmd) return cmd_answer(answer, std::cin, std::cout, std::cerr);
  if (*attention_cmd) return cmd_attention(attention, std::cout, std::cerr);
  return kExitUsage;
}
