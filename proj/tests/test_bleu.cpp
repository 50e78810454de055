// Copyright (c) 2026 The bytenmt Authors. All Rights Reserved.
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

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "bytenmt/bleu.hpp"
#include "helpers.hpp"

using namespace bytenmt;

namespace {
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}
}  // namespace

TEST_CASE("13a tokenization rules") {
  CHECK(tokenize_13a("Hello, world!") == std::vector<std::string>{"Hello", ",", "world", "!"});
  CHECK(tokenize_13a("") == std::vector<std::string>{});
  CHECK(tokenize_13a("a  b") == std::vector<std::string>{"a", "b"});
  // periods and commas stay attached between digits
  CHECK(tokenize_13a("It costs 3.50, right?") ==
        std::vector<std::string>{"It", "costs", "3.50", ",", "right", "?"});
  // dash splits after a digit but not inside words
  CHECK(tokenize_13a("pre-war era, 1939-1945.") ==
        std::vector<std::string>{"pre-war", "era", ",", "1939", "-", "1945", "."});
  // entity unescaping happens before the punctuation rules; case preserved
  CHECK(tokenize_13a("&quot;Да,&quot; сказал он.") ==
        std::vector<std::string>{"\"", "Да", ",", "\"", "сказал", "он", "."});
}

TEST_CASE("corpus BLEU endpoints") {
  const std::vector<std::string> lines = {"the cat sat on the mat.", "Это тест, друг!"};
  const BleuReport perfect = corpus_bleu(lines, lines);
  CHECK(perfect.bleu == Catch::Approx(100.0));
  CHECK(perfect.brevity_penalty == 1.0);

  const BleuReport zero =
      corpus_bleu({"aa bb cc dd", "x y z w"}, {"ee ff gg hh", "p q r s"});
  CHECK(zero.bleu == 0.0);

  CHECK_THROWS_AS(corpus_bleu({"one"}, {"one", "two"}), DataError);
}

// Hand-counted two-line fixture. Clipped matches: p1=8/9, p2=4/7, p3=2/5,
// p4=1/3 (the three-token hypothesis has no 4-grams); BP=exp(1-10/9).
// The frozen score comes from the reference implementation in
// tests/data/reference_bleu.py and agrees with the hand computation.
TEST_CASE("two-line fixture matches the hand count and the reference scorer") {
  const std::vector<std::string> hyps = {"the cat sat on the mat", "dogs run fast"};
  const std::vector<std::string> refs = {"the cat sat on a mat", "dogs run very fast"};
  const BleuReport r = corpus_bleu(hyps, refs);
  CHECK(r.precisions[0] == Catch::Approx(8.0 / 9.0).epsilon(1e-12));
  CHECK(r.precisions[1] == Catch::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(r.precisions[2] == Catch::Approx(2.0 / 5.0).epsilon(1e-12));
  CHECK(r.precisions[3] == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.hyp_len == 9);
  CHECK(r.ref_len == 10);
  CHECK(r.brevity_penalty == Catch::Approx(std::exp(1.0 - 10.0 / 9.0)).epsilon(1e-12));
  CHECK(r.bleu == Catch::Approx(45.649087).margin(0.1));

  const double by_hand = 100.0 * std::exp(1.0 - 10.0 / 9.0) *
                         std::exp((std::log(8.0 / 9.0) + std::log(4.0 / 7.0) +
                                   std::log(2.0 / 5.0) + std::log(1.0 / 3.0)) /
                                  4.0);
  CHECK(r.bleu == Catch::Approx(by_hand).epsilon(1e-12));
}

// 50-line fixture; expected values frozen from reference_bleu.py.
TEST_CASE("fixture agreement with the reference scorer") {
  const auto hyps = read_lines(std::string(BYTENMT_TEST_DATA) + "/fixture50.hyp");
  const auto refs = read_lines(std::string(BYTENMT_TEST_DATA) + "/fixture50.ref");
  REQUIRE(hyps.size() == 50);
  REQUIRE(refs.size() == 50);

  const BleuReport r13a = corpus_bleu(hyps, refs, BleuTokenizer::k13a);
  CHECK(r13a.bleu == Catch::Approx(64.070662).margin(0.1));
  CHECK(r13a.hyp_len == 413);
  CHECK(r13a.ref_len == 432);
  CHECK(r13a.brevity_penalty == Catch::Approx(0.95503734).margin(1e-6));
  CHECK(r13a.precisions[0] == Catch::Approx(0.90799031).margin(1e-6));
  CHECK(r13a.precisions[3] == Catch::Approx(0.53231939).margin(1e-6));

  CHECK(corpus_bleu(hyps, refs, BleuTokenizer::kChar).bleu == Catch::Approx(81.641200).margin(0.1));
  CHECK(corpus_bleu(hyps, refs, BleuTokenizer::kNone).bleu == Catch::Approx(62.856732).margin(0.1));
}

TEST_CASE("BLEU is 100 iff tokenized lines agree") {
  // surface differences that the tokenizer normalizes away still count as equal
  const BleuReport r = corpus_bleu({"Yes , he said ."}, {"Yes, he said."});
  CHECK(r.bleu == Catch::Approx(100.0));
  const BleuReport r2 = corpus_bleu({"Yes he said"}, {"Yes, he said."});
  CHECK(r2.bleu < 100.0);
}

TEST_CASE("report line format") {
  const BleuReport r = corpus_bleu({"a b c d e"}, {"a b c d e"});
  const std::string line = r.to_line();
  CHECK(line.find("bleu=100.0000") != std::string::npos);
  CHECK(line.find("tokenizer=13a") != std::string::npos);
  CHECK(line.find("hyp_len=5") != std::string::npos);
}

TEST_CASE("corpus_stats averages token counts per side") {
  ParallelCorpus corpus;
  corpus.src_lang = "ru";
  corpus.tgt_lang = "en";
  corpus.pairs = {{"Будь здоров.", "Stay healthy."}};
  const auto rows = corpus_stats(corpus);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].side == "ru");
  CHECK(rows[0].bytes == Catch::Approx(22.0));
  CHECK(rows[0].chars == Catch::Approx(12.0));
  CHECK(rows[1].bytes == Catch::Approx(13.0));
  CHECK(rows[1].chars == Catch::Approx(13.0));  // pure ASCII: byte == char

  // Cyrillic-only text needs two bytes per character
  ParallelCorpus cyr;
  cyr.pairs = {{"Привет", "мир"}};
  const auto crows = corpus_stats(cyr);
  CHECK(crows[0].bytes == Catch::Approx(2.0 * crows[0].chars));
  CHECK(crows[1].bytes == Catch::Approx(2.0 * crows[1].chars));

  // byte mean dominates char mean on any corpus
  ParallelCorpus mixed;
  mixed.pairs = {{"abc где 漢字", "🙂 ok"}, {"x", "ÿ"}};
  for (const auto& row : corpus_stats(mixed)) REQUIRE(row.bytes >= row.chars);

  // BPE column appears when a model is supplied
  const BpeModel bpe = bpe_train({"Stay healthy.", "Stay put."}, 4);
  const auto with_bpe = corpus_stats(corpus, &bpe);
  CHECK(with_bpe[1].bpe > 0.0);
}
