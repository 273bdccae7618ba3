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

// The experiment matrix: listeners x upsampling x seeds, with on-disk
// artifacts laid out as
//
//   <out>/<digest>/data/                  split and generated corpora
//   <out>/<digest>/sl-<N>/<seed>/         SL speaker and listeners
//   <out>/<digest>/<L>-<N>/<seed>/        SL+RL checkpoints, logs, metrics
//
// Every cell directory ends with done.json, written last, which stamps the
// digest and a hash of each artifact. A cell without a valid stamp is
// recomputed.
//
// Seeds: the speaker of seed s is initialised and SL-trained from s,
// listener k from s*1000+k. Listener k does not depend on the listener
// count, so SL artifacts are shared by every listener setting.

#ifndef COLORLEX_EXPERIMENT_HPP_
#define COLORLEX_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "colorlex/config.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/lexicon.hpp"
#include "colorlex/metrics.hpp"

namespace colorlex {

inline constexpr std::string_view kPhaseHuman = "human";
inline constexpr std::string_view kPhaseSl = "sl";
inline constexpr std::string_view kPhaseRl = "sl+rl";

// One (condition, seed) evaluation.
struct CellMetrics {
  std::string phase;
  int listeners = 0;  // 0 for SL rows
  std::int64_t upsampling = 0;
  std::uint64_t seed = 0;
  double acc_comm = 0;
  std::array<std::optional<double>, 3> acc_by_condition;
  double lexical_diversity = 0;
  std::optional<double> informativeness;
  std::optional<double> convexity;
  std::optional<double> drift;
  std::size_t skipped_trials = 0;
  std::size_t agent_only_words = 0;
  std::size_t human_only_words = 0;
};

std::string cell_metrics_csv(const std::vector<CellMetrics>& rows);
std::vector<CellMetrics> parse_cell_metrics_csv(const std::filesystem::path& path);

struct MetricSummary {
  std::vector<double> per_seed;
  double mean = 0;
  double standard_error = 0;  // sample sd / sqrt(n); 0 for n = 1
};

MetricSummary summarize(std::vector<double> values);

struct ConditionReport {
  std::string phase;
  std::optional<int> listeners;
  std::optional<std::int64_t> upsampling;
  std::vector<std::uint64_t> seeds;
  std::optional<MetricSummary> acc_comm, lexical_diversity, informativeness, convexity, drift;
  std::optional<double> beta, beta_se, beta_p;
  std::string chip_grouping;
};

// Data shared by every cell of one run directory.
struct SharedData {
  IngestStats ingest;
  Corpus full, train, test, gen_train, gen_eval;
  TripletThresholds thresholds;
  std::optional<CalibrationResult> calibration;
  Lexicon human;
  Vocabulary vocab;
  std::vector<ColorChip> universe_test, universe_eval;
};

// Run digest: config digest combined with the hash of the input corpus.
std::string run_digest(const ExperimentConfig& cfg);

SharedData prepare_data(const ExperimentConfig& cfg, const std::filesystem::path& run_dir,
                        std::ostream* log = nullptr);

// Metrics of the human corpus itself: the reference row.
ConditionReport human_reference(const SharedData& data, const ExperimentConfig& cfg,
                                std::ostream* log = nullptr);

enum class Phase { kSl, kRl, kBoth };

struct MatrixResult {
  std::filesystem::path run_dir;
  std::vector<ConditionReport> reports;  // human row last
  std::size_t computed_cells = 0;
  std::size_t reused_cells = 0;
};

// Trains and evaluates every requested cell, then aggregates. kSl stops
// after the SL stage; kRl requires the SL artifacts to exist already.
// With resume, cells holding a valid stamp are reused, and a stamp from a
// different digest is an error.
MatrixResult run_matrix(const ExperimentConfig& cfg, Phase phase, bool resume,
                        std::ostream* log = nullptr);

// Re-evaluates stamped cells from their checkpoints and aggregates.
MatrixResult evaluate_matrix(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Aggregates persisted cell outputs only.
std::vector<ConditionReport> aggregate(const ExperimentConfig& cfg,
                                       const std::filesystem::path& run_dir,
                                       const SharedData& data, std::ostream* log = nullptr);

// Aggregate table. Columns follow Table-1 order with standard errors and
// counts appended; empty optional cells are empty CSV fields.
std::string report_csv(const std::vector<ConditionReport>& reports);
std::vector<ConditionReport> parse_report_csv(std::string_view text);
// Fixed-width text rendering; empty cells render as "--".
std::string render_report(const std::vector<ConditionReport>& reports);

enum class TrendStatus { kPass, kFail, kNotEvaluable };

struct TrendCheck {
  char id = 'a';
  std::string claim;
  TrendStatus status = TrendStatus::kNotEvaluable;
  std::optional<double> margin;  // worst-case slack; negative when failing
  std::string detail;
};

struct TrendSummary {
  std::vector<TrendCheck> checks;
  int passed = 0;
  bool ok = false;  // at least 4 of 5 families hold
};

// Directional claims over across-seed means. The "few" and "many" listener
// settings are the smallest and largest listener counts present.
TrendSummary check_trends(const std::vector<ConditionReport>& reports);
std::string render_trends(const TrendSummary& s);

// One CSV per word (L,a,b,count), named <prefix><word>.csv. Unknown words
// throw std::invalid_argument listing the available ones. Returns paths.
std::vector<std::filesystem::path> export_denotations(const Lexicon& lex,
                                                      const std::vector<std::string>& words,
                                                      const std::filesystem::path& dir,
                                                      const std::string& prefix = {});

}  // namespace colorlex

#endif  // COLORLEX_EXPERIMENT_HPP_
