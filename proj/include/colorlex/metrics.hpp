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

#ifndef COLORLEX_METRICS_HPP_
#define COLORLEX_METRICS_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "colorlex/agents.hpp"
#include "colorlex/colorspace.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/geometry.hpp"
#include "colorlex/lexicon.hpp"

namespace colorlex {

struct AccuracyReport {
  double overall = 0;
  std::array<std::optional<double>, 3> per_condition;  // indexed by Condition
};

// Speaker argmax word, candidates shuffled per trial from rng, listener
// policy picks. Throws on an empty corpus.
AccuracyReport communication_accuracy(const Speaker& s, const ListenerPolicy& listener,
                                      const Corpus& eval, Rng& rng);
AccuracyReport communication_accuracy(const Speaker& s, const Listener& l,
                                      const Corpus& eval, Rng& rng);

struct WordStats {
  std::string word;
  std::size_t unique_chip_count = 0;
  // Mean CIELAB distance over unordered pairs of unique chips; empty when
  // fewer than two unique chips exist.
  std::optional<double> spread;
  std::optional<double> informativeness;  // 1 / spread
};

WordStats word_spread(std::span<const ColorChip> denotation, std::string word = {});

struct InformativenessResult {
  double value = 0;
  std::size_t used_trials = 0;
  std::size_t skipped_trials = 0;  // word had an undefined I_w
};

// Interaction-weighted mean of I_w over the trial log, times `scale`.
// Throws when no trial has a defined I_w.
InformativenessResult system_informativeness(const Lexicon& lex, double scale = 1.0);

// I_w (times scale) for every word with a defined spread.
std::map<std::string, double> word_informativeness(const Lexicon& lex, double scale = 1.0);

std::size_t lexical_diversity(const Lexicon& lex);

struct ConvexityResult {
  double value = 0;
  std::map<std::string, double> per_word;
};

// Unweighted mean over words of |unique chips of c| / |universe chips in
// hull(c)|. Throws if a denotation chip is missing from the universe.
ConvexityResult convexity(const Lexicon& lex, std::span<const ColorChip> universe,
                          double eps = kHullEpsilon);

// Unique target chips of a corpus, sorted.
std::vector<ColorChip> chip_universe(const Corpus& c);

// Every chip on a regular CIELAB grid with the given step that the HSL cube
// can reach, found by sampling the cube densely. For sensitivity analysis.
std::vector<ColorChip> dense_grid_universe(double step);

// Unweighted centroid of a word's unique chips.
Eigen::Vector3d prototype(std::span<const ColorChip> denotation);

struct DriftResult {
  double value = 0;
  std::size_t shared_words = 0;
  std::size_t agent_only = 0;
  std::size_t human_only = 0;
};

// Mean prototype distance over shared words. Throws when none are shared.
DriftResult semantic_drift(const Lexicon& agent, const Lexicon& human);

enum class ChipGrouping { kExact, kInteger };

struct RegressionOptions {
  double informativeness_scale = 1.0;
  ChipGrouping chip_grouping = ChipGrouping::kExact;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

struct RegressionResult {
  double beta = 0;
  double intercept = 0;
  double standard_error = 0;
  double p_value = 1;
  double seed_variance = 0;
  double chip_variance = 0;
  double residual_variance = 0;
  std::size_t n_observations = 0;
  std::size_t n_seeds = 0;
  std::size_t n_chips = 0;
  std::size_t excluded_trials = 0;
  int iterations = 0;
};

// One observation of the mixed model.
struct RegressionObservation {
  double y = 0;  // I_w
  double x = 0;  // E_ctx
  std::size_t seed_group = 0;
  std::size_t chip_group = 0;
};

// I_w ~ beta * E_ctx + intercept + u_seed + v_chip + noise, crossed random
// intercepts. Fixed effects are the exact GLS solution given the variance
// components; the components maximise the restricted likelihood (Newton
// steps on log variance ratios). Iterates until no parameter moves more than
// the tolerance.
//
// A random-effect factor with a single level (e.g. one seed) or with no
// replicated level is dropped from the model. Throws RegressionError on
// non-convergence, and std::invalid_argument on constant E_ctx.
RegressionResult fit_mixed_model(std::span<const RegressionObservation> obs,
                                 std::size_t n_seed_groups, std::size_t n_chip_groups,
                                 const RegressionOptions& opts = {});

// Builds observations from a (pooled) trial log: I_w of each trial's word
// from the pooled denotations of that log, words with undefined I_w skipped.
RegressionResult fit_context_regression(const Lexicon& pooled,
                                        const RegressionOptions& opts = {});

// Same, but with I_w computed per seed from that seed's own denotations.
RegressionResult fit_context_regression(std::span<const Lexicon> per_seed,
                                        const RegressionOptions& opts = {});

class RegressionError : public std::runtime_error {
 public:
  RegressionError(const std::string& what, RegressionResult last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  RegressionResult last_iterate;
};

}  // namespace colorlex

#endif  // COLORLEX_METRICS_HPP_
