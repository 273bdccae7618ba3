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

#ifndef COLORLEX_TRAINING_HPP_
#define COLORLEX_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "colorlex/agents.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/neuralnet.hpp"

namespace colorlex {

struct SlConfig {
  int epochs = 30;
  int batch_size = 32;
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

struct SlCurve {
  double initial_loss = 0;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

// Cross-entropy on the human word. Every trial needs a word from the
// speaker's vocabulary; anything else throws std::invalid_argument.
SlCurve sl_train_speaker(Speaker& s, const Corpus& train, const SlConfig& cfg, Rng& rng);

// Cross-entropy of the target's index among the shuffled candidates, given
// the human word.
SlCurve sl_train_listener(Listener& l, const Corpus& train, const SlConfig& cfg, Rng& rng);

// Fraction of trials where the listener (argmax) picks the target given the
// human word, candidates shuffled from rng.
double listener_accuracy(const Listener& l, const Corpus& c, Rng& rng);

struct RlConfig {
  int epochs = 30;
  int listeners = 1;
  int batch_size = 32;
  nn::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8};
  double baseline_decay = 0.99;
  double baseline_init = 1.0 / 3.0;
  double entropy_coef = 0.01;
  double listener_entropy_coef = 0.0;
  std::optional<double> clip_norm;

  // Throws std::invalid_argument, e.g. when epochs % listeners != 0.
  void Validate() const;
};

struct RoundResult {
  int reward = 0;
  int word = 0;
  double speaker_log_prob = 0;
  double listener_log_prob = 0;
  int choice = 0;
  int target_index = 0;
  std::array<ColorChip, 3> candidates;
};

// Shuffles (target, d1, d2) into presentation order. Returns the target's
// position.
int shuffle_candidates(const Trial& t, std::array<ColorChip, 3>& out, Rng& rng);

// One referential game: sampled word, shuffled candidates, sampled choice.
RoundResult rl_play_round(const Speaker& s, const ListenerPolicy& listener,
                          const Trial& t, Rng& rng);
RoundResult rl_play_round(const Speaker& s, const Listener& l, const Trial& t, Rng& rng);

// Per-epoch listener index: a seeded permutation of the listeners, each
// repeated epochs/|listeners| times in a row.
std::vector<int> listener_schedule(int epochs, int listeners, Rng& rng);

struct EpochRecord {
  int epoch = 0;
  std::string phase;
  int listener_id = -1;
  double mean_reward = 0;
  double mean_loss_speaker = 0;
  double mean_loss_listener = 0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::string> phase_markers;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> checkpoints;
  std::vector<int> listener_order;
};

nlohmann::json run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);
// epoch,phase,listener_id,mean_reward,mean_loss_speaker,mean_loss_listener
std::string epoch_curve_csv(const RunRecord& r);

// Round-robin referential-game training. The speaker trains against each
// listener in the seeded order for epochs/|listeners| consecutive epochs,
// with shared binary reward and per-agent moving-average baselines.
// Appends one EpochRecord per epoch to `record`.
void rl_train(Speaker& s, std::vector<Listener>& listeners, const Corpus& train,
              const RlConfig& cfg, Rng& rng, RunRecord& record);

}  // namespace colorlex

#endif  // COLORLEX_TRAINING_HPP_
