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

#include "colorlex/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "colorlex/csv.hpp"

namespace colorlex {

using nlohmann::json;

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw std::invalid_argument("empty vocabulary token");
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw std::invalid_argument(fmt::format("duplicate vocabulary token '{}'", words_[i]));
  }
}

Vocabulary Vocabulary::FromCorpus(const Corpus& c) {
  std::vector<std::string> words;
  for (const auto& [w, n] : c.word_counts) words.push_back(w);
  return Vocabulary(std::move(words));
}

std::optional<int> Vocabulary::find(const std::string& w) const {
  auto it = index_.find(w);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(const std::string& w) const {
  if (auto i = find(w)) return *i;
  throw std::out_of_range(fmt::format("word '{}' is not in the vocabulary", w));
}

Speaker Speaker::Create(Vocabulary vocab, const AgentConfig& cfg, Rng& rng) {
  if (vocab.empty()) throw std::invalid_argument("speaker needs a non-empty vocabulary");
  const std::array<nn::Index, 3> sizes = {9, cfg.hidden, vocab.size()};
  Speaker s;
  s.net = nn::Mlp<double>::Create(std::span<const nn::Index>(sizes),
                                  nn::Activation::kRelu, nn::Activation::kIdentity, rng);
  s.vocab = std::move(vocab);
  s.context_aware = cfg.context_aware;
  return s;
}

Listener Listener::Create(Vocabulary vocab, const AgentConfig& cfg, Rng& rng) {
  if (vocab.empty()) throw std::invalid_argument("listener needs a non-empty vocabulary");
  Listener l;
  const double limit = std::sqrt(6.0 / static_cast<double>(vocab.size() + cfg.embed_dim));
  std::uniform_real_distribution<double> u(-limit, limit);
  l.embedding.resize(vocab.size(), cfg.embed_dim);
  for (nn::Index c = 0; c < l.embedding.cols(); ++c)
    for (nn::Index r = 0; r < l.embedding.rows(); ++r) l.embedding(r, c) = u(rng);
  const std::array<nn::Index, 3> sizes = {3, cfg.hidden, cfg.embed_dim};
  l.color_encoder = nn::Mlp<double>::Create(std::span<const nn::Index>(sizes),
                                            nn::Activation::kRelu,
                                            nn::Activation::kIdentity, rng);
  l.vocab = std::move(vocab);
  return l;
}

Eigen::Vector3d normalize_chip(const ColorChip& c) {
  return {c.L() / 100.0, c.a() / 128.0, c.b() / 128.0};
}

std::array<ColorChip, 2> canonical_distractors(const Trial& t) {
  std::array<ColorChip, 2> d = t.distractors;
  const double d0 = delta_e(t.target, d[0]);
  const double d1 = delta_e(t.target, d[1]);
  if (d1 < d0 || (d1 == d0 && d[1] < d[0])) std::swap(d[0], d[1]);
  return d;
}

Eigen::Matrix<double, 9, 1> speaker_input(const Trial& t, bool context_aware) {
  Eigen::Matrix<double, 9, 1> x = Eigen::Matrix<double, 9, 1>::Zero();
  x.segment<3>(0) = normalize_chip(t.target);
  if (context_aware) {
    const auto d = canonical_distractors(t);
    x.segment<3>(3) = normalize_chip(d[0]);
    x.segment<3>(6) = normalize_chip(d[1]);
  }
  return x;
}

int argmax_index(const Eigen::Ref<const Eigen::VectorXd>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

int sample_index(const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0) continue;
    cum += probs(i);
    last_positive = static_cast<int>(i);
    if (u < cum) return static_cast<int>(i);
  }
  return last_positive;
}

Eigen::VectorXd speaker_logits(const Speaker& s, const Trial& t) {
  return nn::forward(s.net, speaker_input(t, s.context_aware)).col(0);
}

Utterance speak(const Speaker& s, const Trial& t, Mode mode, Rng& rng) {
  const Eigen::VectorXd logp = nn::log_softmax(speaker_logits(s, t));
  const int w = mode == Mode::kArgmax
                    ? argmax_index(logp)
                    : sample_index(logp.array().exp().matrix(), rng);
  return {w, logp(w)};
}

Eigen::Vector3d listener_scores(const Listener& l, int word_id,
                                std::span<const ColorChip, 3> candidates) {
  if (word_id < 0 || word_id >= l.embedding.rows())
    throw std::out_of_range(fmt::format("word id {} outside listener vocabulary", word_id));
  Eigen::Matrix3d x;
  for (int i = 0; i < 3; ++i) x.col(i) = normalize_chip(candidates[i]);
  const nn::Matrix<double> enc = nn::forward(l.color_encoder, x);
  return (l.embedding.row(word_id) * enc).transpose();
}

Choice listen(const Listener& l, int word_id, std::span<const ColorChip, 3> candidates,
              Mode mode, Rng& rng) {
  const Eigen::VectorXd logp = nn::log_softmax(listener_scores(l, word_id, candidates));
  const int i = mode == Mode::kArgmax ? argmax_index(logp)
                                      : sample_index(logp.array().exp().matrix(), rng);
  return {i, logp(i)};
}

ListenerPolicy as_policy(const Listener& l, Mode mode) {
  return [&l, mode](int word, std::span<const ColorChip, 3> cands, Rng& rng) {
    return listen(l, word, cands, mode, rng);
  };
}

std::vector<int> speak_argmax_batch(const Speaker& s, const Corpus& eval) {
  nn::Matrix<double> x(9, static_cast<nn::Index>(eval.size()));
  for (std::size_t i = 0; i < eval.size(); ++i)
    x.col(static_cast<nn::Index>(i)) = speaker_input(eval.trials[i], s.context_aware);
  const nn::Matrix<double> logits = nn::forward(s.net, x);
  std::vector<int> words(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i)
    words[i] = argmax_index(logits.col(static_cast<nn::Index>(i)));
  return words;
}

Lexicon produce_lexicon(const Speaker& s, const Corpus& eval, std::int64_t seed_id) {
  if (eval.empty()) throw std::invalid_argument("cannot produce a lexicon on an empty corpus");
  const auto words = speak_argmax_batch(s, eval);
  Lexicon lex;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const Trial& t = eval.trials[i];
    lex.Add(s.vocab.word(words[i]), t.target, context_ease(t), seed_id);
  }
  return lex;
}

namespace {

json vocab_to_json(const Vocabulary& v) { return json(v.words()); }

Vocabulary vocab_from_json(const json& j) {
  return Vocabulary(j.get<std::vector<std::string>>());
}

json Load(const std::filesystem::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

json speaker_to_json(const Speaker& s, const CheckpointMeta& meta) {
  return json{{"kind", "speaker"},
              {"metadata", meta_to_json(meta)},
              {"context_aware", s.context_aware},
              {"vocabulary", vocab_to_json(s.vocab)},
              {"net", mlp_to_json(s.net)}};
}

Speaker speaker_from_json(const json& j, CheckpointMeta* meta) {
  if (j.at("kind") != "speaker") throw std::runtime_error("checkpoint is not a speaker");
  const CheckpointMeta m = meta_from_json(j.at("metadata"));
  if (meta) *meta = m;
  Speaker s;
  s.context_aware = j.at("context_aware").get<bool>();
  s.vocab = vocab_from_json(j.at("vocabulary"));
  s.net = mlp_from_json(j.at("net"));
  if (s.net.input_size() != 9 || s.net.output_size() != s.vocab.size())
    throw std::runtime_error("speaker network does not match its vocabulary");
  return s;
}

json listener_to_json(const Listener& l, const CheckpointMeta& meta) {
  return json{{"kind", "listener"},
              {"metadata", meta_to_json(meta)},
              {"vocabulary", vocab_to_json(l.vocab)},
              {"embedding", matrix_to_json(l.embedding)},
              {"color_encoder", mlp_to_json(l.color_encoder)}};
}

Listener listener_from_json(const json& j, CheckpointMeta* meta) {
  if (j.at("kind") != "listener") throw std::runtime_error("checkpoint is not a listener");
  const CheckpointMeta m = meta_from_json(j.at("metadata"));
  if (meta) *meta = m;
  Listener l;
  l.vocab = vocab_from_json(j.at("vocabulary"));
  l.embedding = matrix_from_json(j.at("embedding"));
  l.color_encoder = mlp_from_json(j.at("color_encoder"));
  if (l.embedding.rows() != l.vocab.size() || l.color_encoder.input_size() != 3 ||
      l.color_encoder.output_size() != l.embedding.cols()) {
    throw std::runtime_error("listener shapes are inconsistent");
  }
  return l;
}

void save_speaker(const Speaker& s, const CheckpointMeta& meta,
                  const std::filesystem::path& path) {
  WriteFileAtomic(path, dump_json(speaker_to_json(s, meta)));
}

Speaker load_speaker(const std::filesystem::path& path, CheckpointMeta* meta) {
  return speaker_from_json(Load(path), meta);
}

void save_listener(const Listener& l, const CheckpointMeta& meta,
                   const std::filesystem::path& path) {
  WriteFileAtomic(path, dump_json(listener_to_json(l, meta)));
}

Listener load_listener(const std::filesystem::path& path, CheckpointMeta* meta) {
  return listener_from_json(Load(path), meta);
}

}  // namespace colorlex
