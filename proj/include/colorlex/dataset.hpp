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

#ifndef COLORLEX_DATASET_HPP_
#define COLORLEX_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "colorlex/colorspace.hpp"

namespace colorlex {

using Rng = std::mt19937_64;

enum class Condition { kFar = 0, kSplit = 1, kClose = 2 };
inline constexpr std::array<Condition, 3> kAllConditions = {
    Condition::kFar, Condition::kSplit, Condition::kClose};

std::string_view ToString(Condition c);
// Accepts far/split/close in any letter case.
std::optional<Condition> ParseCondition(std::string_view s);

enum class Source { kHuman, kGenerated };
std::string_view ToString(Source s);

struct Trial {
  ColorChip target;
  std::array<ColorChip, 2> distractors;
  Condition condition = Condition::kFar;
  std::optional<std::string> human_word;
  Source source = Source::kHuman;

  bool operator==(const Trial&) const = default;
};

inline double context_ease(const Trial& t) {
  return context_ease(t.target, std::span<const ColorChip, 2>(t.distractors));
}

struct Corpus {
  std::vector<Trial> trials;
  std::map<std::string, std::int64_t> word_counts;

  Corpus() = default;
  explicit Corpus(std::vector<Trial> t) : trials(std::move(t)) { Recount(); }

  std::size_t size() const { return trials.size(); }
  bool empty() const { return trials.empty(); }
  void Recount();
  std::array<std::size_t, 3> ConditionCounts() const;
};

enum class SchemaMode { kCielab, kHsl };
std::optional<SchemaMode> ParseSchemaMode(std::string_view s);

struct IngestStats {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t multi_word = 0;
  std::size_t empty_word = 0;
  std::size_t unsuccessful = 0;
  std::size_t degenerate = 0;  // a distractor equals the target after quantization
};

struct IngestResult {
  Corpus corpus;
  IngestStats stats;
};

// Reads a human reference-game CSV. Required columns, by header name:
//   condition, word, and either target_h/s/l, alt1_h/s/l, alt2_h/s/l (hsl;
//   h in degrees, s and l in percent) or target_L/a/b, alt1_L/a/b,
//   alt2_L/a/b (cielab). An optional outcome column filters failed games.
// Words are trimmed and lowercased; rows whose word contains whitespace are
// skipped and counted. Throws std::runtime_error with the line number on a
// malformed row or an unknown condition label.
IngestResult ingest_colors_csv(const std::filesystem::path& path, SchemaMode mode);

// Deterministic uniform split; both parts keep the input order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& c, std::size_t test_size,
                                       std::uint64_t seed);

struct UpsamplingConfig {
  std::int64_t target_count = 0;  // 0 disables
};

// Words below the target count are topped up by cycling through their
// trials in corpus order; duplicates are appended after the original
// corpus. The seed is accepted for interface symmetry and unused.
Corpus upsample(const Corpus& c, UpsamplingConfig cfg, std::uint64_t seed = 0);

struct TripletThresholds {
  double close_max = 20.0;
  double far_min = 50.0;
};

// Human proportions 9309:3886:2239, indexed by Condition.
inline constexpr std::array<double, 3> kHumanConditionMix = {
    9309.0 / 15434.0, 3886.0 / 15434.0, 2239.0 / 15434.0};

bool satisfies_condition(const Trial& t, const TripletThresholds& th);

struct GenerationOptions {
  std::size_t attempts_per_target = 20000;
  std::size_t target_restarts = 200;
};

// Generates n unlabelled trials. Per-condition counts are apportioned from
// the mix by largest remainder and the condition sequence is shuffled.
// Targets and candidate distractors are drawn uniformly from the HSL cube.
Corpus generate_triplets(std::size_t n, const std::array<double, 3>& condition_mix,
                         const TripletThresholds& thresholds, std::uint64_t seed,
                         const GenerationOptions& opts = {});

// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
double ks_statistic(std::vector<double> x, std::vector<double> y);

struct CalibrationResult {
  TripletThresholds thresholds;
  std::array<double, 3> ks{};  // per condition, indexed by Condition
  bool within_tolerance = false;
};

struct CalibrationOptions {
  double tolerance = 0.1;
  std::size_t samples_per_condition = 1500;
  double close_lo = 4.0, close_hi = 40.0;
  double far_lo = 20.0, far_hi = 90.0;
  double step = 1.0;
};

// Picks thresholds whose generated per-condition context-ease distribution
// best matches the reference corpus (minimax KS). close_max drives the close
// and split conditions, far_min drives far, so the two are searched apart.
CalibrationResult calibrate_thresholds(const Corpus& reference, std::uint64_t seed,
                                       const CalibrationOptions& opts = {});

// Canonical corpus file: CIELAB columns at one decimal place plus
// condition, word, source. Reading it back yields an identical corpus.
void save_corpus(const Corpus& c, const std::filesystem::path& path);
std::string corpus_to_csv(const Corpus& c);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace colorlex

#endif  // COLORLEX_DATASET_HPP_
