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

#include "colorlex/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "colorlex/checkpoint.hpp"
#include "colorlex/csv.hpp"

namespace colorlex {

using nlohmann::json;
using Mat = nn::Matrix<double>;

namespace {

std::vector<int> WordIds(const Vocabulary& vocab, const Corpus& c) {
  std::vector<int> ids;
  ids.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& w = c.trials[i].human_word;
    if (!w) throw std::invalid_argument(fmt::format("trial {} has no human word", i));
    const auto id = vocab.find(*w);
    if (!id) {
      throw std::invalid_argument(
          fmt::format("trial {}: word '{}' is not in the vocabulary", i, *w));
    }
    ids.push_back(*id);
  }
  return ids;
}

std::vector<std::size_t> ShuffledOrder(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void CheckFinite(const nn::Mlp<double>& net, std::string_view what) {
  if (!net.AllFinite())
    throw std::runtime_error(fmt::format("{} has non-finite parameters", what));
}

// Listener parameters as one flat block list: embedding first, then encoder.
std::vector<nn::ParamRef<double>> ListenerParams(Listener& l) {
  std::vector<nn::ParamRef<double>> p;
  p.emplace_back(l.embedding.data(), l.embedding.size());
  for (auto& r : l.color_encoder.parameters()) p.push_back(r);
  return p;
}

double SpeakerCrossEntropy(const Speaker& s, const Corpus& c, const std::vector<int>& ids) {
  Mat x(9, static_cast<nn::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i)
    x.col(static_cast<nn::Index>(i)) = speaker_input(c.trials[i], s.context_aware);
  const Mat z = nn::forward(s.net, x);
  double loss = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    loss -= nn::log_softmax(z.col(static_cast<nn::Index>(i)))(ids[i]);
  return loss / static_cast<double>(c.size());
}

// Encodes the three chips of every listed trial in stored order
// (target, d1, d2) as columns 3b, 3b+1, 3b+2.
Mat CandidateMatrix(const Corpus& c, std::span<const std::size_t> idx) {
  Mat x(3, static_cast<nn::Index>(3 * idx.size()));
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Trial& t = c.trials[idx[b]];
    const auto col = static_cast<nn::Index>(3 * b);
    x.col(col) = normalize_chip(t.target);
    x.col(col + 1) = normalize_chip(t.distractors[0]);
    x.col(col + 2) = normalize_chip(t.distractors[1]);
  }
  return x;
}

// Presentation order as a permutation of stored slots; returns the
// target's presented position.
int ShufflePermutation(std::array<int, 3>& perm, Rng& rng) {
  perm = {0, 1, 2};
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < 3; ++i)
    if (perm[i] == 0) return i;
  return 0;
}

// Gradient of lambda * (-H(softmax)) with respect to the logits.
Eigen::VectorXd NegEntropyGrad(const Eigen::VectorXd& logp, double* entropy) {
  const Eigen::VectorXd p = logp.array().exp().matrix();
  const double h = -(p.array() * logp.array()).sum();
  if (entropy) *entropy = h;
  return (p.array() * (logp.array() + h)).matrix();
}

}  // namespace

SlCurve sl_train_speaker(Speaker& s, const Corpus& train, const SlConfig& cfg, Rng& rng) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("SL needs epochs >= 1 and batch size >= 1");
  if (train.empty()) throw std::invalid_argument("SL on an empty corpus");
  const std::vector<int> ids = WordIds(s.vocab, train);

  SlCurve curve;
  curve.initial_loss = SpeakerCrossEntropy(s, train, ids);

  auto params = s.net.parameters();
  nn::Adam<double> adam(cfg.adam, params);
  const nn::Index vsize = s.vocab.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = ShuffledOrder(train.size(), rng);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t B = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      Mat x(9, static_cast<nn::Index>(B));
      for (std::size_t b = 0; b < B; ++b)
        x.col(static_cast<nn::Index>(b)) =
            speaker_input(train.trials[order[start + b]], s.context_aware);
      const auto trace = nn::forward_trace(s.net, x);
      Mat g(vsize, static_cast<nn::Index>(B));
      double loss = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const auto col = static_cast<nn::Index>(b);
        const Eigen::VectorXd logp = nn::log_softmax(trace.output.col(col));
        const int y = ids[order[start + b]];
        loss -= logp(y);
        g.col(col) = logp.array().exp().matrix();
        g(y, col) -= 1.0;
      }
      g /= static_cast<double>(B);
      auto grads = nn::backward(s.net, trace, g);
      auto gp = grads.parameters();
      adam.step(params, gp);
      total += loss / static_cast<double>(B);
      ++batches;
    }
    CheckFinite(s.net, "speaker");
    curve.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  return curve;
}

SlCurve sl_train_listener(Listener& l, const Corpus& train, const SlConfig& cfg, Rng& rng) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("SL needs epochs >= 1 and batch size >= 1");
  if (train.empty()) throw std::invalid_argument("SL on an empty corpus");
  const std::vector<int> ids = WordIds(l.vocab, train);

  SlCurve curve;
  {
    // Loss at initialization with candidates in stored order; the order
    // does not affect the expectation for an untrained listener.
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), 0);
    const Mat enc = nn::forward(l.color_encoder, CandidateMatrix(train, all));
    double loss = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const Eigen::Vector3d sc =
          (l.embedding.row(ids[i]) * enc.middleCols(3 * static_cast<nn::Index>(i), 3)).transpose();
      loss -= nn::log_softmax(sc)(0);
    }
    curve.initial_loss = loss / static_cast<double>(train.size());
  }

  auto params = ListenerParams(l);
  nn::Adam<double> adam(cfg.adam, params);
  const nn::Index d = l.dim();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = ShuffledOrder(train.size(), rng);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t B = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, B);
      const auto trace = nn::forward_trace(l.color_encoder, CandidateMatrix(train, idx));
      const Mat& enc = trace.output;
      Mat g_enc = Mat::Zero(d, static_cast<nn::Index>(3 * B));
      Mat g_emb = Mat::Zero(l.embedding.rows(), d);
      double loss = 0;
      for (std::size_t b = 0; b < B; ++b) {
        std::array<int, 3> perm;
        const int target_pos = ShufflePermutation(perm, rng);
        const int w = ids[idx[b]];
        const auto base = static_cast<nn::Index>(3 * b);
        Eigen::Vector3d scores;
        for (int i = 0; i < 3; ++i) scores(i) = l.embedding.row(w).dot(enc.col(base + perm[i]));
        const Eigen::VectorXd logq = nn::log_softmax(scores);
        loss -= logq(target_pos);
        Eigen::Vector3d gs = logq.array().exp().matrix();
        gs(target_pos) -= 1.0;
        gs /= static_cast<double>(B);
        for (int i = 0; i < 3; ++i) {
          g_emb.row(w) += gs(i) * enc.col(base + perm[i]).transpose();
          g_enc.col(base + perm[i]) += gs(i) * l.embedding.row(w).transpose();
        }
      }
      auto grads = nn::backward(l.color_encoder, trace, g_enc);
      std::vector<nn::ParamRef<double>> gp;
      gp.emplace_back(g_emb.data(), g_emb.size());
      for (auto& r : grads.parameters()) gp.push_back(r);
      adam.step(params, gp);
      total += loss / static_cast<double>(B);
      ++batches;
    }
    CheckFinite(l.color_encoder, "listener encoder");
    if (!l.embedding.allFinite()) throw std::runtime_error("listener embedding is non-finite");
    curve.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  return curve;
}

double listener_accuracy(const Listener& l, const Corpus& c, Rng& rng) {
  if (c.empty()) throw std::invalid_argument("listener accuracy on an empty corpus");
  const std::vector<int> ids = WordIds(l.vocab, c);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::array<ColorChip, 3> cands;
    const int target = shuffle_candidates(c.trials[i], cands, rng);
    if (listen(l, ids[i], cands, Mode::kArgmax, rng).index == target) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(c.size());
}

void RlConfig::Validate() const {
  if (epochs < 1) throw std::invalid_argument("RL epochs must be >= 1");
  if (listeners < 1) throw std::invalid_argument("RL needs at least one listener");
  if (epochs % listeners != 0) {
    throw std::invalid_argument(fmt::format(
        "RL epochs ({}) must be divisible by the listener count ({})", epochs, listeners));
  }
  if (batch_size < 1) throw std::invalid_argument("RL batch size must be >= 1");
  if (!(baseline_decay >= 0 && baseline_decay < 1))
    throw std::invalid_argument("baseline decay must lie in [0,1)");
  if (entropy_coef < 0 || listener_entropy_coef < 0)
    throw std::invalid_argument("entropy coefficients must be >= 0");
  if (clip_norm && !(*clip_norm > 0)) throw std::invalid_argument("clip norm must be > 0");
}

int shuffle_candidates(const Trial& t, std::array<ColorChip, 3>& out, Rng& rng) {
  std::array<int, 3> perm;
  const int target = ShufflePermutation(perm, rng);
  const std::array<ColorChip, 3> stored = {t.target, t.distractors[0], t.distractors[1]};
  for (int i = 0; i < 3; ++i) out[i] = stored[perm[i]];
  return target;
}

RoundResult rl_play_round(const Speaker& s, const ListenerPolicy& listener,
                          const Trial& t, Rng& rng) {
  RoundResult r;
  const Utterance u = speak(s, t, Mode::kSample, rng);
  r.word = u.word;
  r.speaker_log_prob = u.log_prob;
  r.target_index = shuffle_candidates(t, r.candidates, rng);
  const Choice c = listener(u.word, r.candidates, rng);
  r.choice = c.index;
  r.listener_log_prob = c.log_prob;
  r.reward = c.index == r.target_index ? 1 : 0;
  return r;
}

RoundResult rl_play_round(const Speaker& s, const Listener& l, const Trial& t, Rng& rng) {
  return rl_play_round(s, as_policy(l, Mode::kSample), t, rng);
}

std::vector<int> listener_schedule(int epochs, int listeners, Rng& rng) {
  if (listeners < 1 || epochs < 1 || epochs % listeners != 0) {
    throw std::invalid_argument(fmt::format(
        "cannot schedule {} epochs over {} listeners", epochs, listeners));
  }
  std::vector<int> order(static_cast<std::size_t>(listeners));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int per = epochs / listeners;
  std::vector<int> schedule;
  schedule.reserve(static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) schedule.push_back(order[static_cast<std::size_t>(e / per)]);
  return schedule;
}

json run_record_to_json(const RunRecord& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back(json{{"epoch", e.epoch},
                          {"phase", e.phase},
                          {"listener_id", e.listener_id},
                          {"mean_reward", real_to_string(e.mean_reward)},
                          {"mean_loss_speaker", real_to_string(e.mean_loss_speaker)},
                          {"mean_loss_listener", real_to_string(e.mean_loss_listener)}});
  }
  return json{{"seed", r.seed},
              {"config_digest", r.config_digest},
              {"phase_markers", r.phase_markers},
              {"listener_order", r.listener_order},
              {"checkpoints", r.checkpoints},
              {"epochs", std::move(epochs)}};
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.phase_markers = j.at("phase_markers").get<std::vector<std::string>>();
  r.listener_order = j.at("listener_order").get<std::vector<int>>();
  r.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
  for (const auto& e : j.at("epochs")) {
    r.epochs.push_back(EpochRecord{
        e.at("epoch").get<int>(), e.at("phase").get<std::string>(),
        e.at("listener_id").get<int>(),
        real_from_string(e.at("mean_reward").get<std::string>()),
        real_from_string(e.at("mean_loss_speaker").get<std::string>()),
        real_from_string(e.at("mean_loss_listener").get<std::string>())});
  }
  return r;
}

std::string epoch_curve_csv(const RunRecord& r) {
  std::string out =
      "epoch,phase,listener_id,mean_reward,mean_loss_speaker,mean_loss_listener\n";
  for (const auto& e : r.epochs) {
    out += JoinCsv({std::to_string(e.epoch), e.phase, std::to_string(e.listener_id),
                    real_to_string(e.mean_reward), real_to_string(e.mean_loss_speaker),
                    real_to_string(e.mean_loss_listener)});
    out.push_back('\n');
  }
  return out;
}

void rl_train(Speaker& s, std::vector<Listener>& listeners, const Corpus& train,
              const RlConfig& cfg, Rng& rng, RunRecord& record) {
  cfg.Validate();
  if (static_cast<int>(listeners.size()) != cfg.listeners) {
    throw std::invalid_argument(fmt::format("RL config expects {} listeners, got {}",
                                            cfg.listeners, listeners.size()));
  }
  if (train.empty()) throw std::invalid_argument("RL on an empty corpus");
  for (const auto& l : listeners)
    if (!(l.vocab == s.vocab))
      throw std::invalid_argument("listener and speaker vocabularies differ");

  const std::vector<int> schedule = listener_schedule(cfg.epochs, cfg.listeners, rng);
  const int per = cfg.epochs / cfg.listeners;
  record.listener_order.clear();
  for (int e = 0; e < cfg.epochs; e += per) record.listener_order.push_back(schedule[e]);

  auto s_params = s.net.parameters();
  nn::Adam<double> s_adam(cfg.adam, s_params);
  double s_baseline = cfg.baseline_init;

  const nn::Index V = s.vocab.size();
  const int first_epoch = record.epochs.empty() ? 1 : record.epochs.back().epoch + 1;

  int current = -1;
  std::optional<nn::Adam<double>> l_adam;
  std::vector<nn::ParamRef<double>> l_params;
  double l_baseline = cfg.baseline_init;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (schedule[epoch] != current) {
      current = schedule[epoch];
      l_params = ListenerParams(listeners[current]);
      l_adam.emplace(cfg.adam, l_params);
      l_baseline = cfg.baseline_init;
      record.phase_markers.push_back(fmt::format(
          "rl listener={} epochs={}-{}", current, first_epoch + epoch,
          first_epoch + epoch + per - 1));
    }
    Listener& l = listeners[current];
    const nn::Index d = l.dim();

    const auto order = ShuffledOrder(train.size(), rng);
    double reward_sum = 0, s_loss_sum = 0, l_loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t B = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, B);

      Mat x(9, static_cast<nn::Index>(B));
      for (std::size_t b = 0; b < B; ++b)
        x.col(static_cast<nn::Index>(b)) = speaker_input(train.trials[idx[b]], s.context_aware);
      const auto s_trace = nn::forward_trace(s.net, x);
      const auto l_trace = nn::forward_trace(l.color_encoder, CandidateMatrix(train, idx));
      const Mat& enc = l_trace.output;

      Mat g_logits(V, static_cast<nn::Index>(B));
      Mat g_enc = Mat::Zero(d, static_cast<nn::Index>(3 * B));
      Mat g_emb = Mat::Zero(l.embedding.rows(), d);
      for (std::size_t b = 0; b < B; ++b) {
        const auto col = static_cast<nn::Index>(b);
        const Eigen::VectorXd logp = nn::log_softmax(s_trace.output.col(col));
        const int w = sample_index(logp.array().exp().matrix(), rng);

        std::array<int, 3> perm;
        const int target_pos = ShufflePermutation(perm, rng);
        const auto base = static_cast<nn::Index>(3 * b);
        Eigen::Vector3d scores;
        for (int i = 0; i < 3; ++i) scores(i) = l.embedding.row(w).dot(enc.col(base + perm[i]));
        const Eigen::VectorXd logq = nn::log_softmax(scores);
        const int choice = sample_index(logq.array().exp().matrix(), rng);
        const double r = choice == target_pos ? 1.0 : 0.0;

        const double adv_s = r - s_baseline;
        const double adv_l = r - l_baseline;
        s_baseline = cfg.baseline_decay * s_baseline + (1 - cfg.baseline_decay) * r;
        l_baseline = cfg.baseline_decay * l_baseline + (1 - cfg.baseline_decay) * r;

        double h_s = 0;
        Eigen::VectorXd gs = cfg.entropy_coef * NegEntropyGrad(logp, &h_s);
        gs += adv_s * logp.array().exp().matrix();
        gs(w) -= adv_s;
        g_logits.col(col) = gs / static_cast<double>(B);
        s_loss_sum += -adv_s * logp(w) - cfg.entropy_coef * h_s;

        double h_l = 0;
        Eigen::VectorXd gl = cfg.listener_entropy_coef * NegEntropyGrad(logq, &h_l);
        gl += adv_l * logq.array().exp().matrix();
        gl(choice) -= adv_l;
        gl /= static_cast<double>(B);
        l_loss_sum += -adv_l * logq(choice) - cfg.listener_entropy_coef * h_l;
        for (int i = 0; i < 3; ++i) {
          g_emb.row(w) += gl(i) * enc.col(base + perm[i]).transpose();
          g_enc.col(base + perm[i]) += gl(i) * l.embedding.row(w).transpose();
        }
        reward_sum += r;
      }

      auto s_grads = nn::backward(s.net, s_trace, g_logits);
      auto s_gp = s_grads.parameters();
      auto l_grads = nn::backward(l.color_encoder, l_trace, g_enc);
      std::vector<nn::ParamRef<double>> l_gp;
      l_gp.emplace_back(g_emb.data(), g_emb.size());
      for (auto& r : l_grads.parameters()) l_gp.push_back(r);
      if (cfg.clip_norm) {
        nn::clip_global_norm<double>(s_gp, *cfg.clip_norm);
        nn::clip_global_norm<double>(l_gp, *cfg.clip_norm);
      }
      s_adam.step(s_params, s_gp);
      l_adam->step(l_params, l_gp);
    }
    CheckFinite(s.net, "speaker");
    CheckFinite(l.color_encoder, "listener encoder");
    if (!l.embedding.allFinite()) throw std::runtime_error("listener embedding is non-finite");

    const double n = static_cast<double>(train.size());
    record.epochs.push_back(EpochRecord{first_epoch + epoch, "rl", current, reward_sum / n,
                                        s_loss_sum / n, l_loss_sum / n});
  }
}

}  // namespace colorlex
