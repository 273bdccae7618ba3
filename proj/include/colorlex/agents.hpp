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

#ifndef COLORLEX_AGENTS_HPP_
#define COLORLEX_AGENTS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "colorlex/checkpoint.hpp"
#include "colorlex/colorspace.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/lexicon.hpp"
#include "colorlex/neuralnet.hpp"

namespace colorlex {

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws std::invalid_argument on duplicates or empty tokens.
  explicit Vocabulary(std::vector<std::string> words);
  // Words of the corpus in lexicographic order.
  static Vocabulary FromCorpus(const Corpus& c);

  int size() const { return static_cast<int>(words_.size()); }
  bool empty() const { return words_.empty(); }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<int> find(const std::string& w) const;
  // Throws std::out_of_range naming the word.
  int id(const std::string& w) const;

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct AgentConfig {
  nn::Index hidden = 64;
  nn::Index embed_dim = 64;
  bool context_aware = true;
};

// Maps (target, distractors) to logits over the vocabulary.
struct Speaker {
  nn::Mlp<double> net;  // 9 -> hidden (relu) -> |V|
  Vocabulary vocab;
  bool context_aware = true;

  static Speaker Create(Vocabulary vocab, const AgentConfig& cfg, Rng& rng);
};

// Scores candidates by the dot product between the word embedding and the
// encoded candidate color.
struct Listener {
  nn::Matrix<double> embedding;   // |V| x d
  nn::Mlp<double> color_encoder;  // 3 -> hidden (relu) -> d
  Vocabulary vocab;

  nn::Index dim() const { return embedding.cols(); }
  static Listener Create(Vocabulary vocab, const AgentConfig& cfg, Rng& rng);
};

enum class Mode { kSample, kArgmax };

// (L/100, a/128, b/128).
Eigen::Vector3d normalize_chip(const ColorChip& c);

// Distractors sorted by distance to the target, ties broken by chip order.
std::array<ColorChip, 2> canonical_distractors(const Trial& t);

// concat(normalize(target), normalize(d1), normalize(d2)) with canonical
// distractor order; distractor slots are zero when context_aware is false.
Eigen::Matrix<double, 9, 1> speaker_input(const Trial& t, bool context_aware);

// Lowest index wins ties.
int argmax_index(const Eigen::Ref<const Eigen::VectorXd>& v);
int sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

struct Utterance {
  int word = 0;
  double log_prob = 0;
};

Eigen::VectorXd speaker_logits(const Speaker& s, const Trial& t);
Utterance speak(const Speaker& s, const Trial& t, Mode mode, Rng& rng);

struct Choice {
  int index = 0;
  double log_prob = 0;
};

Eigen::Vector3d listener_scores(const Listener& l, int word_id,
                                std::span<const ColorChip, 3> candidates);
Choice listen(const Listener& l, int word_id, std::span<const ColorChip, 3> candidates,
              Mode mode, Rng& rng);

// Anything that picks one of three presented candidates given a word id.
using ListenerPolicy =
    std::function<Choice(int word_id, std::span<const ColorChip, 3> candidates, Rng& rng)>;
ListenerPolicy as_policy(const Listener& l, Mode mode);

// Speaker in argmax mode over every trial. Throws on an empty corpus.
Lexicon produce_lexicon(const Speaker& s, const Corpus& eval, std::int64_t seed_id = 0);

// Argmax words for a batch of trials (same result as speak in argmax mode).
std::vector<int> speak_argmax_batch(const Speaker& s, const Corpus& eval);

// Checkpoints: the network format plus a vocabulary block.
nlohmann::json speaker_to_json(const Speaker& s, const CheckpointMeta& meta);
Speaker speaker_from_json(const nlohmann::json& j, CheckpointMeta* meta = nullptr);
nlohmann::json listener_to_json(const Listener& l, const CheckpointMeta& meta);
Listener listener_from_json(const nlohmann::json& j, CheckpointMeta* meta = nullptr);

void save_speaker(const Speaker& s, const CheckpointMeta& meta,
                  const std::filesystem::path& path);
Speaker load_speaker(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);
void save_listener(const Listener& l, const CheckpointMeta& meta,
                   const std::filesystem::path& path);
Listener load_listener(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace colorlex

#endif  // COLORLEX_AGENTS_HPP_
