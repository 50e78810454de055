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

#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "bytenmt/pipeline.hpp"

namespace bytenmt {

// One grid of runs: scheme x dropout x token-dropout x seed. Scheme labels
// are byte, byte-embeddingless, char, bpe.
struct ExperimentSpec {
  std::vector<std::string> schemes = {"byte", "byte-embeddingless"};
  std::vector<double> dropouts = {0.2};
  std::vector<double> token_dropouts = {0.0, 0.2};
  std::vector<uint64_t> seeds = {1};
  RunConfig base;
  int workers = 1;
  BleuTokenizer bleu_tokenizer = BleuTokenizer::k13a;

  void validate() const {
    if (schemes.empty() || dropouts.empty() || token_dropouts.empty() || seeds.empty())
      throw UsageError("ablate: every grid axis needs at least one value");
    for (const auto& s : schemes) scheme_label_to_config(s);
    if (workers < 1) throw UsageError("ablate: workers must be >= 1");
  }

  static std::pair<Scheme, ModelMode> scheme_label_to_config(const std::string& label) {
    if (label == "byte") return {Scheme::kByte, ModelMode::kEmbedding};
    if (label == "byte-embeddingless") return {Scheme::kByte, ModelMode::kEmbeddingless};
    if (label == "char") return {Scheme::kChar, ModelMode::kEmbedding};
    if (label == "bpe") return {Scheme::kBpe, ModelMode::kEmbedding};
    throw UsageError("ablate: unknown scheme label: " + label +
                     " (expected byte, byte-embeddingless, char, or bpe)");
  }
};

struct CellResult {
  std::string scheme;
  double dropout = 0.0;
  double token_dropout = 0.0;
  uint64_t seed = 0;
  std::string run_id;
  bool ok = false;
  std::string error;
  double valid_loss = std::nan("");
  double bleu = std::nan("");
  double exact_match = std::nan("");
};

namespace ablate_detail {

inline std::string run_id_of(const std::string& scheme, double dropout, double p_tok,
                             uint64_t seed) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s_d%g_tok%g_s%llu", scheme.c_str(), dropout, p_tok,
                static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace ablate_detail

// Runs one grid cell in isolation: train from the prepared directory,
// average the best checkpoints, decode the test split, score BLEU.
inline CellResult run_cell(const std::string& data_dir, const ExperimentSpec& spec,
                           const std::string& scheme, double dropout, double p_tok, uint64_t seed,
                           const std::string& cell_dir) {
  CellResult cell;
  cell.scheme = scheme;
  cell.dropout = dropout;
  cell.token_dropout = p_tok;
  cell.seed = seed;
  cell.run_id = ablate_detail::run_id_of(scheme, dropout, p_tok, seed);
  try {
    const auto [data_scheme, mode] = ExperimentSpec::scheme_label_to_config(scheme);
    RunConfig rc = spec.base;
    rc.set("scheme", scheme_name(data_scheme));
    rc.set("mode", mode_name(mode));
    rc.set("dropout", detail::fmt_double(dropout));
    rc.set("token_dropout", detail::fmt_double(p_tok));
    rc.set("seed", std::to_string(seed));

    const TrainRunResult run = run_training<float>(data_dir, rc, cell_dir);
    cell.valid_loss = run.final_valid_loss;

    const Checkpoint<float> averaged = load_checkpoint<float>(run.averaged_path);
    ModelParams<float> params = params_from_checkpoint(averaged);
    const SchemeResources res = load_scheme(data_dir, data_scheme);
    const ParallelCorpus test = load_parallel(data_dir + "/test.src", data_dir + "/test.tgt");
    DecodeOptions opts;
    opts.beam = static_cast<int>(rc.get_int("beam", 1));
    opts.length_penalty = rc.get_double("length_penalty", 1.0);
    opts.max_len = static_cast<int>(rc.get_int("decode_max_len", 0));
    const EvalResult eval =
        evaluate_model(params, res.vocab, res.bpe_ptr(), pipeline_detail::side_lines(test, true),
                       pipeline_detail::side_lines(test, false), opts, spec.bleu_tokenizer);
    cell.bleu = eval.bleu.bleu;
    cell.exact_match = eval.exact_match;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

// Executes the grid (optionally across a bounded worker pool; each cell
// owns its own subdirectory and RNG) and returns one result per cell in
// grid order, failed cells included.
inline std::vector<CellResult> run_ablation(const std::string& data_dir,
                                            const ExperimentSpec& spec,
                                            const std::string& out_dir) {
  spec.validate();
  struct Job {
    std::string scheme;
    double dropout, p_tok;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& scheme : spec.schemes)
    for (double d : spec.dropouts)
      for (double p : spec.token_dropouts)
        for (uint64_t s : spec.seeds) jobs.push_back({scheme, d, p, s});

  std::vector<CellResult> results(jobs.size());
  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      const Job& j = jobs[i];
      const std::string cell_dir =
          out_dir + "/cells/" + ablate_detail::run_id_of(j.scheme, j.dropout, j.p_tok, j.seed);
      std::filesystem::create_directories(cell_dir);
      results[i] = run_cell(data_dir, spec, j.scheme, j.dropout, j.p_tok, j.seed, cell_dir);
    }
  };
  if (spec.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(spec.workers, static_cast<int>(jobs.size())); ++t)
      pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

// Table-shaped report: one row per cell with a token-dropout gain column
// (BLEU delta against the p_tok=0 cell of the same scheme/dropout/seed),
// then per-scheme mean gains.
inline std::string render_ablation_report(const std::vector<CellResult>& results) {
  std::map<std::string, double> baseline;  // scheme|dropout|seed -> bleu at p_tok=0
  for (const auto& r : results) {
    if (r.ok && r.token_dropout == 0.0) {
      char key[128];
      std::snprintf(key, sizeof(key), "%s|%g|%llu", r.scheme.c_str(), r.dropout,
                    static_cast<unsigned long long>(r.seed));
      baseline[key] = r.bleu;
    }
  }

  std::string out;
  out += "scheme\tdropout\ttoken_dropout\tseed\tvalid_loss\ttest_bleu\texact_match\tgain\tstatus\n";
  std::map<std::string, std::pair<double, int>> scheme_gains;
  for (const auto& r : results) {
    char line[256];
    std::string gain = "-";
    if (r.ok && r.token_dropout > 0.0) {
      char key[128];
      std::snprintf(key, sizeof(key), "%s|%g|%llu", r.scheme.c_str(), r.dropout,
                    static_cast<unsigned long long>(r.seed));
      auto it = baseline.find(key);
      if (it != baseline.end()) {
        const double delta = r.bleu - it->second;
        char g[32];
        std::snprintf(g, sizeof(g), "%+.2f", delta);
        gain = g;
        auto& acc = scheme_gains[r.scheme];
        acc.first += delta;
        acc.second += 1;
      }
    }
    if (r.ok) {
      std::snprintf(line, sizeof(line), "%s\t%g\t%g\t%llu\t%.4f\t%.2f\t%.4f\t%s\tok\n",
                    r.scheme.c_str(), r.dropout, r.token_dropout,
                    static_cast<unsigned long long>(r.seed), r.valid_loss, r.bleu, r.exact_match,
                    gain.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%s\t%g\t%g\t%llu\t-\t-\t-\t-\tFAILED: %s\n",
                    r.scheme.c_str(), r.dropout, r.token_dropout,
                    static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
    out += line;
  }
  if (!scheme_gains.empty()) {
    out += "\n# mean token-dropout gain per scheme\n";
    for (const auto& [scheme, acc] : scheme_gains) {
      char line[128];
      std::snprintf(line, sizeof(line), "%s\t%+.2f\n", scheme.c_str(), acc.first / acc.second);
      out += line;
    }
  }
  return out;
}

}  // namespace bytenmt
