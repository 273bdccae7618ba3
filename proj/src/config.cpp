// Copyright 2026 The colorlex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "colorlex/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "colorlex/checkpoint.hpp"
#include "colorlex/csv.hpp"

namespace colorlex {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T ParseNumber(std::string_view s, std::string_view key) {
  s = Trim(s);
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument(fmt::format("{}: cannot parse '{}'", key, s));
  return v;
}

bool ParseBool(std::string_view s, std::string_view key) {
  s = Trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument(fmt::format("{}: expected true/false, got '{}'", key, s));
}

std::vector<std::string_view> SplitCommas(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(',');
    const auto item = Trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T>& v) {
  return fmt::format("{}", fmt::join(v, ","));
}

struct Key {
  const char* name;
  bool affects_results;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Key>& Keys() {
  using C = ExperimentConfig;
  using V = std::string_view;
  static const std::vector<Key> keys = {
      {"colors_csv", false, [](C& c, V v) { c.colors_csv = std::string(Trim(v)); },
       [](const C& c) { return c.colors_csv.string(); }},
      {"schema_mode", true,
       [](C& c, V v) {
         const auto m = ParseSchemaMode(Trim(v));
         if (!m) throw std::invalid_argument(fmt::format("schema_mode: unknown '{}'", v));
         c.schema_mode = *m;
       },
       [](const C& c) { return std::string(c.schema_mode == SchemaMode::kHsl ? "hsl" : "cielab"); }},
      {"out_dir", false, [](C& c, V v) { c.out_dir = std::string(Trim(v)); },
       [](const C& c) { return c.out_dir.string(); }},
      {"seeds", false, [](C& c, V v) { c.seeds = ParseSeedList(v); },
       [](const C& c) { return JoinList(c.seeds); }},
      {"listeners", false, [](C& c, V v) { c.listener_grid = ParseIntList(v); },
       [](const C& c) { return JoinList(c.listener_grid); }},
      {"upsampling", false,
       [](C& c, V v) {
         c.upsampling_grid.clear();
         for (int x : ParseIntList(v)) c.upsampling_grid.push_back(x);
       },
       [](const C& c) { return JoinList(c.upsampling_grid); }},
      {"data_seed", true, [](C& c, V v) { c.data_seed = ParseNumber<std::uint64_t>(v, "data_seed"); },
       [](const C& c) { return std::to_string(c.data_seed); }},
      {"test_size", true, [](C& c, V v) { c.test_size = ParseNumber<std::size_t>(v, "test_size"); },
       [](const C& c) { return std::to_string(c.test_size); }},
      {"gen_train_size", true,
       [](C& c, V v) { c.gen_train_size = ParseNumber<std::size_t>(v, "gen_train_size"); },
       [](const C& c) { return std::to_string(c.gen_train_size); }},
      {"gen_eval_size", true,
       [](C& c, V v) { c.gen_eval_size = ParseNumber<std::size_t>(v, "gen_eval_size"); },
       [](const C& c) { return std::to_string(c.gen_eval_size); }},
      {"close_max", true,
       [](C& c, V v) { c.thresholds.close_max = ParseNumber<double>(v, "close_max"); },
       [](const C& c) { return real_to_string(c.thresholds.close_max); }},
      {"far_min", true, [](C& c, V v) { c.thresholds.far_min = ParseNumber<double>(v, "far_min"); },
       [](const C& c) { return real_to_string(c.thresholds.far_min); }},
      {"calibrate_thresholds", true,
       [](C& c, V v) { c.calibrate_thresholds = ParseBool(v, "calibrate_thresholds"); },
       [](const C& c) { return std::string(c.calibrate_thresholds ? "true" : "false"); }},
      {"hidden", true, [](C& c, V v) { c.agent.hidden = ParseNumber<nn::Index>(v, "hidden"); },
       [](const C& c) { return std::to_string(c.agent.hidden); }},
      {"embed_dim", true,
       [](C& c, V v) { c.agent.embed_dim = ParseNumber<nn::Index>(v, "embed_dim"); },
       [](const C& c) { return std::to_string(c.agent.embed_dim); }},
      {"context_aware", true,
       [](C& c, V v) { c.agent.context_aware = ParseBool(v, "context_aware"); },
       [](const C& c) { return std::string(c.agent.context_aware ? "true" : "false"); }},
      {"sl_epochs", true, [](C& c, V v) { c.sl.epochs = ParseNumber<int>(v, "sl_epochs"); },
       [](const C& c) { return std::to_string(c.sl.epochs); }},
      {"sl_batch_size", true,
       [](C& c, V v) { c.sl.batch_size = ParseNumber<int>(v, "sl_batch_size"); },
       [](const C& c) { return std::to_string(c.sl.batch_size); }},
      {"sl_lr", true, [](C& c, V v) { c.sl.adam.learning_rate = ParseNumber<double>(v, "sl_lr"); },
       [](const C& c) { return real_to_string(c.sl.adam.learning_rate); }},
      {"rl_epochs", true, [](C& c, V v) { c.rl.epochs = ParseNumber<int>(v, "rl_epochs"); },
       [](const C& c) { return std::to_string(c.rl.epochs); }},
      {"rl_batch_size", true,
       [](C& c, V v) { c.rl.batch_size = ParseNumber<int>(v, "rl_batch_size"); },
       [](const C& c) { return std::to_string(c.rl.batch_size); }},
      {"rl_lr", true, [](C& c, V v) { c.rl.adam.learning_rate = ParseNumber<double>(v, "rl_lr"); },
       [](const C& c) { return real_to_string(c.rl.adam.learning_rate); }},
      {"adam_beta1", true,
       [](C& c, V v) { c.sl.adam.beta1 = c.rl.adam.beta1 = ParseNumber<double>(v, "adam_beta1"); },
       [](const C& c) { return real_to_string(c.sl.adam.beta1); }},
      {"adam_beta2", true,
       [](C& c, V v) { c.sl.adam.beta2 = c.rl.adam.beta2 = ParseNumber<double>(v, "adam_beta2"); },
       [](const C& c) { return real_to_string(c.sl.adam.beta2); }},
      {"adam_eps", true,
       [](C& c, V v) { c.sl.adam.epsilon = c.rl.adam.epsilon = ParseNumber<double>(v, "adam_eps"); },
       [](const C& c) { return real_to_string(c.sl.adam.epsilon); }},
      {"baseline_decay", true,
       [](C& c, V v) { c.rl.baseline_decay = ParseNumber<double>(v, "baseline_decay"); },
       [](const C& c) { return real_to_string(c.rl.baseline_decay); }},
      {"baseline_init", true,
       [](C& c, V v) { c.rl.baseline_init = ParseNumber<double>(v, "baseline_init"); },
       [](const C& c) { return real_to_string(c.rl.baseline_init); }},
      {"entropy_coef", true,
       [](C& c, V v) { c.rl.entropy_coef = ParseNumber<double>(v, "entropy_coef"); },
       [](const C& c) { return real_to_string(c.rl.entropy_coef); }},
      {"listener_entropy_coef", true,
       [](C& c, V v) {
         c.rl.listener_entropy_coef = ParseNumber<double>(v, "listener_entropy_coef");
       },
       [](const C& c) { return real_to_string(c.rl.listener_entropy_coef); }},
      {"clip_norm", true,
       [](C& c, V v) {
         const double x = ParseNumber<double>(v, "clip_norm");
         if (x > 0) {
           c.rl.clip_norm = x;
         } else {
           c.rl.clip_norm.reset();
         }
       },
       [](const C& c) { return c.rl.clip_norm ? real_to_string(*c.rl.clip_norm) : "0"; }},
      {"informativeness_scale", true,
       [](C& c, V v) { c.informativeness_scale = ParseNumber<double>(v, "informativeness_scale"); },
       [](const C& c) { return real_to_string(c.informativeness_scale); }},
      {"chip_grouping", true,
       [](C& c, V v) {
         v = Trim(v);
         if (v == "exact") {
           c.chip_grouping = ChipGrouping::kExact;
         } else if (v == "integer") {
           c.chip_grouping = ChipGrouping::kInteger;
         } else {
           throw std::invalid_argument(fmt::format("chip_grouping: unknown '{}'", v));
         }
       },
       [](const C& c) {
         return std::string(c.chip_grouping == ChipGrouping::kExact ? "exact" : "integer");
       }},
      {"convexity_universe", true,
       [](C& c, V v) {
         v = Trim(v);
         if (v == "eval") {
           c.universe = UniverseMode::kEvalSet;
         } else if (v == "grid") {
           c.universe = UniverseMode::kDenseGrid;
         } else {
           throw std::invalid_argument(fmt::format("convexity_universe: unknown '{}'", v));
         }
       },
       [](const C& c) { return std::string(c.universe == UniverseMode::kEvalSet ? "eval" : "grid"); }},
      {"grid_step", true, [](C& c, V v) { c.grid_step = ParseNumber<double>(v, "grid_step"); },
       [](const C& c) { return real_to_string(c.grid_step); }},
      {"workers", false, [](C& c, V v) { c.workers = ParseNumber<int>(v, "workers"); },
       [](const C& c) { return std::to_string(c.workers); }},
  };
  return keys;
}

}  // namespace

std::vector<std::uint64_t> ParseSeedList(std::string_view s) {
  std::vector<std::uint64_t> out;
  for (auto item : SplitCommas(s)) {
    const auto dash = item.find('-', 1);
    if (dash != std::string_view::npos) {
      const auto lo = ParseNumber<std::uint64_t>(item.substr(0, dash), "seeds");
      const auto hi = ParseNumber<std::uint64_t>(item.substr(dash + 1), "seeds");
      if (hi < lo) throw std::invalid_argument(fmt::format("seeds: empty range '{}'", item));
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(ParseNumber<std::uint64_t>(item, "seeds"));
    }
  }
  return out;
}

std::vector<int> ParseIntList(std::string_view s) {
  std::vector<int> out;
  for (auto item : SplitCommas(s)) out.push_back(ParseNumber<int>(item, "list"));
  return out;
}

void ExperimentConfig::Set(std::string_view key, std::string_view value) {
  key = Trim(key);
  for (const auto& k : Keys()) {
    if (key == k.name) {
      k.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::Entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : Keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

std::string ExperimentConfig::CanonicalText() const {
  std::string out;
  for (const auto& k : Keys())
    if (k.affects_results) out += fmt::format("{}={}\n", k.name, k.get(*this));
  return out;
}

std::string ExperimentConfig::Digest() const { return sha256_hex(CanonicalText()); }

void ExperimentConfig::Validate() const {
  auto fail = [](std::string_view key, std::string_view why) {
    throw std::invalid_argument(fmt::format("{}: {}", key, why));
  };
  if (seeds.empty()) fail("seeds", "must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    fail("seeds", "duplicate seed");
  if (listener_grid.empty()) fail("listeners", "must not be empty");
  if (upsampling_grid.empty()) fail("upsampling", "must not be empty");
  for (int l : listener_grid) {
    if (l < 1) fail("listeners", "counts must be >= 1");
    if (rl.epochs % l != 0)
      fail("listeners", fmt::format("rl_epochs {} is not divisible by {}", rl.epochs, l));
  }
  for (auto n : upsampling_grid)
    if (n < 0) fail("upsampling", "targets must be >= 0");
  if (sl.epochs < 1) fail("sl_epochs", "must be >= 1");
  if (rl.epochs < 1) fail("rl_epochs", "must be >= 1");
  if (sl.batch_size < 1) fail("sl_batch_size", "must be >= 1");
  if (rl.batch_size < 1) fail("rl_batch_size", "must be >= 1");
  if (!(sl.adam.learning_rate > 0)) fail("sl_lr", "must be > 0");
  if (!(rl.adam.learning_rate > 0)) fail("rl_lr", "must be > 0");
  if (!(rl.baseline_decay >= 0 && rl.baseline_decay < 1)) fail("baseline_decay", "must be in [0,1)");
  if (!(rl.entropy_coef >= 0)) fail("entropy_coef", "must be >= 0");
  if (!(rl.listener_entropy_coef >= 0)) fail("listener_entropy_coef", "must be >= 0");
  if (!(thresholds.close_max > 0 && thresholds.close_max < thresholds.far_min))
    fail("close_max", "need 0 < close_max < far_min");
  if (agent.hidden < 1) fail("hidden", "must be >= 1");
  if (agent.embed_dim < 1) fail("embed_dim", "must be >= 1");
  if (!(informativeness_scale > 0)) fail("informativeness_scale", "must be > 0");
  if (!(grid_step >= 0.1)) fail("grid_step", "must be >= 0.1");
  if (workers < 1) fail("workers", "must be >= 1");
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = Trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument(fmt::format("{}:{}: expected key = value", origin, lineno));
    try {
      cfg.Set(v.substr(0, eq), v.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("{}:{}: {}", origin, lineno, e.what()));
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  apply_config_text(cfg, ReadFile(path), path.string());
  return cfg;
}

}  // namespace colorlex
