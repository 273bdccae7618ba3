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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <doctest.h>

#include "colorlex/training.hpp"
#include "support.hpp"

using namespace colorlex;

namespace {

// Light-target trials (target is the lightest chip) and dark-target trials.
Corpus LightDarkCorpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ab(-30, 30), jitter(-3, 3);
  std::vector<Trial> t;
  for (std::size_t i = 0; i < n; ++i) {
    const bool light = i % 2 == 0;
    const ColorChip hi(80 + jitter(rng), ab(rng), ab(rng));
    const ColorChip mid(45 + jitter(rng), ab(rng), ab(rng));
    const ColorChip lo(15 + jitter(rng), ab(rng), ab(rng));
    t.push_back(light ? Trial{hi, {mid, lo}, Condition::kFar, "up", Source::kHuman}
                      : Trial{lo, {mid, hi}, Condition::kFar, "down", Source::kHuman});
  }
  return Corpus(std::move(t));
}

// A listener that scores chips by lightness: "up" picks the lightest and
// "down" the darkest, each with high confidence.
Listener LightnessListener(const Vocabulary& v) {
  Listener l;
  l.vocab = v;
  l.embedding.resize(2, 1);
  l.embedding(v.id("up"), 0) = 20;
  l.embedding(v.id("down"), 0) = -20;
  nn::DenseLayer<double> pick{nn::Matrix<double>(1, 3), nn::Vector<double>::Zero(1),
                              nn::Activation::kRelu};
  pick.weights << 1, 0, 0;
  nn::DenseLayer<double> id{nn::Matrix<double>::Identity(1, 1), nn::Vector<double>::Zero(1),
                            nn::Activation::kIdentity};
  l.color_encoder = nn::Mlp<double>({pick, id});
  return l;
}

bool SameWeights(const nn::Mlp<double>& a, const nn::Mlp<double>& b) {
  for (std::size_t i = 0; i < a.layers().size(); ++i)
    if (a.layers()[i].weights != b.layers()[i].weights || a.layers()[i].bias != b.layers()[i].bias)
      return false;
  return true;
}

}  // namespace

TEST_CASE("SL speaker on a one-word corpus always says that word") {
  Corpus c = generate_triplets(120, kHumanConditionMix, {}, 3);
  for (auto& t : c.trials) {
    t.human_word = "blue";
    t.source = Source::kHuman;
  }
  c.Recount();
  Rng rng(1);
  Speaker s = Speaker::Create(Vocabulary::FromCorpus(c), AgentConfig{8, 8, true}, rng);
  sl_train_speaker(s, c, SlConfig{2, 16, {}}, rng);
  for (int w : speak_argmax_batch(s, c)) CHECK(w == 0);
}

TEST_CASE("SL training lowers the loss and beats the majority word") {
  const Corpus c = LightDarkCorpus(400, 5);
  Rng rng(2);
  Speaker s = Speaker::Create(Vocabulary::FromCorpus(c), AgentConfig{16, 8, true}, rng);
  const SlCurve curve = sl_train_speaker(s, c, SlConfig{15, 16, {1e-2, 0.9, 0.999, 1e-8}}, rng);
  REQUIRE(curve.epoch_loss.size() == 15);
  CHECK(curve.epoch_loss.back() < curve.initial_loss);
  const auto words = speak_argmax_batch(s, c);
  int correct = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    correct += s.vocab.word(words[i]) == *c.trials[i].human_word;
  CHECK(correct >= 380);

  Listener l = Listener::Create(Vocabulary::FromCorpus(c), AgentConfig{16, 8, true}, rng);
  const SlCurve lc = sl_train_listener(l, c, SlConfig{15, 16, {1e-2, 0.9, 0.999, 1e-8}}, rng);
  CHECK(lc.epoch_loss.back() < lc.initial_loss);
  CHECK(listener_accuracy(l, c, rng) >= 0.9);
}

TEST_CASE("a uniformly random listener is right a third of the time") {
  const Corpus c = generate_triplets(500, kHumanConditionMix, {}, 4);
  Rng rng(7);
  const Speaker s = Speaker::Create(Vocabulary({"a", "b", "c"}), AgentConfig{8, 8, true}, rng);
  const ListenerPolicy random = [](int, std::span<const ColorChip, 3>, Rng& r) {
    return Choice{std::uniform_int_distribution<int>(0, 2)(r), std::log(1.0 / 3)};
  };
  int wins = 0;
  const int rounds = 10000;
  std::array<int, 3> target_pos{};
  for (int i = 0; i < rounds; ++i) {
    const RoundResult r = rl_play_round(s, random, c.trials[i % c.size()], rng);
    wins += r.reward;
    ++target_pos[r.target_index];
  }
  // Binomial sd is about 0.0047; allow 4 sd.
  CHECK(std::abs(wins / double(rounds) - 1.0 / 3) < 0.019);
  for (int k : target_pos) CHECK(std::abs(k / double(rounds) - 1.0 / 3) < 0.019);
}

TEST_CASE("a listener that always finds the target earns reward 1") {
  const Corpus c = generate_triplets(300, kHumanConditionMix, {}, 6);
  Rng rng(8);
  const Speaker s = Speaker::Create(Vocabulary({"a", "b"}), AgentConfig{8, 8, true}, rng);
  for (const auto& t : c.trials) {
    const ListenerPolicy oracle = [&t](int, std::span<const ColorChip, 3> cands, Rng&) {
      for (int i = 0; i < 3; ++i)
        if (cands[i] == t.target) return Choice{i, 0.0};
      return Choice{0, 0.0};
    };
    const RoundResult r = rl_play_round(s, oracle, t, rng);
    CHECK(r.reward == 1);
    CHECK(r.candidates[r.target_index] == t.target);
  }
}

TEST_CASE("listener schedule gives each listener one contiguous block") {
  Rng rng(11);
  for (int L : {1, 3, 5, 30}) {
    const int E = 30;
    const auto sched = listener_schedule(E, L, rng);
    REQUIRE(sched.size() == 30);
    std::map<int, int> count;
    std::set<int> seen_blocks;
    for (int e = 0; e < E; ++e) {
      ++count[sched[e]];
      if (e % (E / L) == 0) {
        CHECK(seen_blocks.insert(sched[e]).second);
      } else {
        CHECK(sched[e] == sched[e - 1]);
      }
    }
    CHECK(count.size() == static_cast<std::size_t>(L));
    for (const auto& [k, n] : count) CHECK(n == E / L);
  }
  CHECK_THROWS_AS(listener_schedule(30, 7, rng), std::invalid_argument);
  RlConfig bad;
  bad.epochs = 10;
  bad.listeners = 3;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
}

TEST_CASE("policy gradient without entropy learns to address a fixed listener") {
  const Corpus c = LightDarkCorpus(200, 9);
  const Vocabulary v({"up", "down"});
  Rng rng(12);
  Speaker s = Speaker::Create(v, AgentConfig{16, 1, true}, rng);
  std::vector<Listener> ls = {LightnessListener(v)};

  RlConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.adam.learning_rate = 1e-2;
  cfg.entropy_coef = 0.0;
  RunRecord rec;
  rl_train(s, ls, c, cfg, rng, rec);
  REQUIRE(rec.epochs.size() == 20);
  CHECK(rec.epochs.back().mean_reward > rec.epochs.front().mean_reward);
  CHECK(rec.epochs.back().mean_reward > 0.9);

  const auto words = speak_argmax_batch(s, c);
  int right = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    right += s.vocab.word(words[i]) == *c.trials[i].human_word;
  CHECK(right >= 190);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Corpus c = testing::SyntheticHumanCorpus(300, 13);
  const Vocabulary v = Vocabulary::FromCorpus(c);
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    Speaker s = Speaker::Create(v, AgentConfig{8, 8, true}, rng);
    std::vector<Listener> ls;
    for (int k = 0; k < 2; ++k) ls.push_back(Listener::Create(v, AgentConfig{8, 8, true}, rng));
    sl_train_speaker(s, c, SlConfig{2, 32, {}}, rng);
    for (auto& l : ls) sl_train_listener(l, c, SlConfig{2, 32, {}}, rng);
    RlConfig cfg;
    cfg.epochs = 2;
    cfg.listeners = 2;
    RunRecord rec;
    rl_train(s, ls, c, cfg, rng, rec);
    return std::make_tuple(s, ls, rec);
  };
  const auto [s1, l1, r1] = run(5);
  const auto [s2, l2, r2] = run(5);
  const auto [s3, l3, r3] = run(6);
  CHECK(SameWeights(s1.net, s2.net));
  CHECK(l1[1].embedding == l2[1].embedding);
  CHECK(run_record_to_json(r1) == run_record_to_json(r2));
  CHECK(!SameWeights(s1.net, s3.net));
  CHECK(r1.listener_order.size() == 2);
  CHECK(r1.phase_markers.size() == 2);

  const RunRecord back = run_record_from_json(run_record_to_json(r1));
  CHECK(run_record_to_json(back) == run_record_to_json(r1));
  CHECK(epoch_curve_csv(back) == epoch_curve_csv(r1));
}

TEST_CASE("rl_train rejects mismatched inputs") {
  const Corpus c = LightDarkCorpus(20, 1);
  Rng rng(0);
  Speaker s = Speaker::Create(Vocabulary({"up", "down"}), AgentConfig{4, 1, true}, rng);
  std::vector<Listener> ls = {LightnessListener(Vocabulary({"up", "down"}))};
  RunRecord rec;
  RlConfig cfg;
  cfg.listeners = 2;
  cfg.epochs = 2;
  CHECK_THROWS_AS(rl_train(s, ls, c, cfg, rng, rec), std::invalid_argument);
  cfg.listeners = 1;
  CHECK_THROWS_AS(rl_train(s, ls, Corpus{}, cfg, rng, rec), std::invalid_argument);
  std::vector<Listener> other = {LightnessListener(Vocabulary({"down", "up"}))};
  CHECK_THROWS_AS(rl_train(s, other, c, cfg, rng, rec), std::invalid_argument);
}
