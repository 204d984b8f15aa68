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

// Drives the built command-line tool end to end.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "geoqa/corpus.hpp"

#ifndef GEOQA_CLI_PATH
#error "GEOQA_CLI_PATH must name the geoqa executable"
#endif

namespace {

namespace fs = std::filesystem;
using namespace geoqa;

struct CliResult {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("geoqa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliResult run(const std::string& args, const std::string& stdin_text = "") const {
    const std::string in = path("stdin.txt");
    std::ofstream(in) << stdin_text;
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(GEOQA_CLI_PATH) + " " + args + " < " + in + " > " + out + " 2> " +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read(out);
    return r;
  }

  static std::string read(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }

  static std::size_t lines(const std::string& text) { return std::size_t(std::count(text.begin(), text.end(), '\n')); }

  // One pair repeated so validation questions were all seen in training.
  void write_memorization_corpus() const {
    corpus::CorpusConfig cfg;
    cfg.class_list = {"Airports"};
    cfg.pair_target = 1;
    cfg.spatial_fraction_target = 0.0;
    const auto one = corpus::generate_pairs(cfg);
    std::vector<corpus::QueryPair> pairs(10, one[0]);
    corpus::save_pairs(pairs, path("memo.tsv"));
  }

  static constexpr const char* kToyFlags = "--embed 16 --hidden 32 --batch 2 --lr 0.01";

  fs::path dir_;
};

TEST_F(Cli, GenDefaults) {
  const auto r = run("gen --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(read(path("c.tsv"))), 528u);
  EXPECT_EQ(r.out, "pairs\t528\nspatial_fraction\t0.6004\n");
  EXPECT_GT(lines(read(path("f.nt"))), 0u);
}

TEST_F(Cli, GenPairsFlagAndErrors) {
  EXPECT_EQ(run("gen --pairs 10 --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 0);
  EXPECT_EQ(lines(read(path("c.tsv"))), 10u);
  EXPECT_EQ(run("gen --out-corpus /nonexistent/dir/c.tsv --out-fixture " + path("f.nt")).code, 2);
  EXPECT_EQ(run("gen --pairs 100000 --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 2);
  EXPECT_EQ(run("gen --classes Airports --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 2);
  EXPECT_EQ(run("gen --bogus 1").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, TrainErrorsAndSingleEpoch) {
  EXPECT_EQ(run("train --corpus " + path("missing.tsv") + " --out " + path("m.ckpt")).code, 2);
  EXPECT_EQ(run("train --out " + path("m.ckpt")).code, 2);
  ASSERT_EQ(run("gen --pairs 10 --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 0);
  const auto r = run("train --corpus " + path("c.tsv") + " --epochs 1 " + kToyFlags + " --out " + path("m.ckpt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(r.out), 1u);
  EXPECT_EQ(r.out.rfind("1\t", 0), 0u);
  EXPECT_TRUE(fs::exists(path("m.ckpt")));
  EXPECT_EQ(run("train --corpus " + path("c.tsv") + " --epochs 0 --out " + path("m.ckpt")).code, 2);
}

TEST_F(Cli, ToyTrainingMemorizes) {
  ASSERT_EQ(run("gen --pairs 10 --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 0);
  const auto r = run("train --corpus " + path("c.tsv") + " --epochs 200 " + kToyFlags + " --out " + path("m.ckpt"));
  ASSERT_EQ(r.code, 0);
  ASSERT_EQ(lines(r.out), 200u);
  const std::string last = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
  EXPECT_LT(std::stod(last.substr(last.find('\t') + 1)), 0.05) << last;
  EXPECT_TRUE(fs::exists(path("m.ckpt")));
}

TEST_F(Cli, EvalAnswerAndAttention) {
  write_memorization_corpus();
  ASSERT_EQ(run("gen --pairs 10 --out-corpus " + path("c.tsv") + " --out-fixture " + path("f.nt")).code, 0);
  ASSERT_EQ(run("train --corpus " + path("memo.tsv") + " --split 0.5 --epochs 30 " + kToyFlags + " --out " +
                path("m.ckpt"))
                .code,
            0);
  const auto ev = run("eval --ckpt " + path("m.ckpt") + " --corpus " + path("memo.tsv"));
  ASSERT_EQ(ev.code, 0);
  EXPECT_EQ(ev.out,
            "type\t1-gram\t2-gram\t3-gram\t4-gram\n"
            "individual\t100.00\t100.00\t100.00\t100.00\n"
            "cumulative\t100.00\t100.00\t100.00\t100.00\n"
            "bleu\t100.00\nvalidity\t1.0000\n");
  // a different corpus does not reproduce the checkpoint's vocabulary
  EXPECT_EQ(run("eval --ckpt " + path("m.ckpt") + " --corpus " + path("c.tsv")).code, 2);
  EXPECT_EQ(run("eval --ckpt " + path("missing.ckpt") + " --corpus " + path("memo.tsv")).code, 2);

  const auto empty = run("answer --ckpt " + path("m.ckpt") + " --fixture " + path("f.nt"));
  EXPECT_EQ(empty.code, 0);
  EXPECT_EQ(empty.out, "");
  const auto ans = run("answer --ckpt " + path("m.ckpt") + " --fixture " + path("f.nt"),
                       "which areas are covered by airports\n\nblorp\n");
  EXPECT_EQ(ans.code, 0);
  EXPECT_EQ(ans.out.rfind("query\tselect distinct ?area where { ?area corine:hasLandUse corine:Airports }\narea\n", 0),
            0u)
      << ans.out;
  EXPECT_EQ(std::count(ans.out.begin(), ans.out.end(), '\n') > 3, true);
  EXPECT_EQ(run("answer --ckpt " + path("m.ckpt") + " --fixture " + path("missing.nt")).code, 2);

  const auto att = run("attention --ckpt " + path("m.ckpt") + " --question airports --out " + path("a.pgm"));
  ASSERT_EQ(att.code, 0);
  std::istringstream pgm(read(path("a.pgm")));
  std::string magic;
  int cols = 0, rows = 0, maxval = 0;
  pgm >> magic >> cols >> rows >> maxval;
  EXPECT_EQ(magic, "P2");
  EXPECT_EQ(cols, 1);
  EXPECT_GE(rows, 1);
  EXPECT_EQ(maxval, 255);
  for (int k = 0, v = 0; k < rows; ++k) {
    pgm >> v;
    EXPECT_EQ(v, 255);  // a single source column takes all the weight
  }
  const std::string labels = read(path("a.pgm.labels.tsv"));
  EXPECT_NE(labels.find("col\t0\tairports\n"), std::string::npos);
  EXPECT_EQ(att.out.rfind("prediction\t", 0), 0u);
}

TEST_F(Cli, EvalRejectsEmptyValidation) {
  write_memorization_corpus();
  corpus::save_pairs({corpus::load_pairs(path("memo.tsv"))[0]}, path("one.tsv"));
  ASSERT_EQ(run("train --corpus " + path("one.tsv") + " --epochs 1 " + kToyFlags + " --out " + path("m.ckpt")).code,
            0);
  EXPECT_EQ(run("eval --ckpt " + path("m.ckpt") + " --corpus " + path("one.tsv")).code, 2);
  EXPECT_NE(read(path("stderr.txt")).find("validation split is empty"), std::string::npos);
}

}  // namespace
