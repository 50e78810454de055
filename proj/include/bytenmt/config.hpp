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

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "bytenmt/errors.hpp"
#include "bytenmt/model.hpp"
#include "bytenmt/train.hpp"

namespace bytenmt {

// Line-oriented `key = value` run configuration. '#' starts a comment.
// Unknown keys are rejected up front so typos cannot silently train the
// wrong model.
class RunConfig {
 public:
  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "mode",          "scheme",        "data_dir",       "d_model",
        "ffn_dim",       "layers",        "heads",          "dropout",
        "token_dropout", "label_smoothing", "positions",    "max_len",
        "peak_lr",       "warmup",        "weight_decay",   "clip_norm",
        "steps",         "seed",          "validate_every", "keep_top_k",
        "batch_bytes",   "freeze_scales", "beam",           "length_penalty",
        "decode_max_len",
    };
    return keys;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    RunConfig rc;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(path + ":" + std::to_string(lineno) + ": expected `key = value`");
      rc.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return rc;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw UsageError("unknown config key: " + key);
    values_[key] = value;
  }

  // "key=value" as passed on the command line
  void set_from_flag(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw UsageError("expected key=value in --set, got: " + assignment);
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  int64_t get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw UsageError("config key " + key + " expects an integer, got: " + it->second);
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw UsageError("config key " + key + " expects a number, got: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw UsageError("config key " + key + " expects a boolean, got: " + it->second);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  // Model knobs; vocab size and special ids are filled in from the vocab.
  ModelConfig to_model_config() const {
    ModelConfig c;
    c.mode = mode_from_name(get_str("mode", "embedding"));
    c.scheme = scheme_from_name(get_str("scheme", "byte"));
    c.d_model = static_cast<int>(get_int("d_model", 64));
    c.ffn_dim = static_cast<int>(get_int("ffn_dim", 128));
    c.layers = static_cast<int>(get_int("layers", 2));
    c.heads = static_cast<int>(get_int("heads", 2));
    c.dropout = get_double("dropout", 0.2);
    c.token_dropout = get_double("token_dropout", 0.0);
    c.label_smoothing = get_double("label_smoothing", 0.1);
    c.max_len = static_cast<int>(get_int("max_len", 1024));
    const std::string pos = get_str("positions", "sinusoidal");
    if (pos != "sinusoidal" && pos != "learned")
      throw UsageError("config key positions expects sinusoidal or learned, got: " + pos);
    c.positions = pos == "learned" ? PositionKind::kLearned : PositionKind::kSinusoidal;
    return c;
  }

  TrainConfig to_train_config(uint64_t default_seed) const {
    TrainConfig tc;
    tc.peak_lr = get_double("peak_lr", 5e-4);
    tc.warmup = get_int("warmup", 4000);
    tc.weight_decay = get_double("weight_decay", 1e-4);
    tc.steps = get_int("steps", 5000);
    tc.seed = static_cast<uint64_t>(get_int("seed", static_cast<int64_t>(default_seed)));
    tc.validate_every = get_int("validate_every", 200);
    tc.keep_top_k = static_cast<int>(get_int("keep_top_k", 5));
    tc.freeze_scales = get_bool("freeze_scales", false);
    tc.clip_norm = get_double("clip_norm", 0.0);
    tc.validate();
    return tc;
  }

  int64_t batch_bytes() const { return get_int("batch_bytes", 4000); }

 private:
  std::map<std::string, std::string> values_;
};

// BYTENMT_SEED provides the default seed when neither config nor flags set
// one.
inline uint64_t default_seed_from_env() {
  if (const char* env = std::getenv("BYTENMT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("BYTENMT_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

}  // namespace bytenmt
