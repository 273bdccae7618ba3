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

#include <filesystem>
#include <random>

#include <doctest.h>

#include "colorlex/agents.hpp"
#include "colorlex/csv.hpp"
#include "support.hpp"

using namespace colorlex;

TEST_CASE("vocabulary") {
  const Vocabulary v({"red", "blue", "green"});
  CHECK(v.size() == 3);
  CHECK(v.id("blue") == 1);
  CHECK(v.word(2) == "green");
  CHECK(!v.find("teal"));
  CHECK_THROWS_WITH_AS(v.id("teal"), doctest::Contains("teal"), std::out_of_range);
  CHECK_THROWS_AS(Vocabulary({"a", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary({"a", ""}), std::invalid_argument);

  const Corpus c = testing::SyntheticHumanCorpus(400, 2);
  const Vocabulary fv = Vocabulary::FromCorpus(c);
  CHECK(std::is_sorted(fv.words().begin(), fv.words().end()));
  CHECK(static_cast<std::size_t>(fv.size()) == c.word_counts.size());
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Eigen::VectorXd v(4);
  v << 0.2, 0.5, 0.5, 0.1;
  CHECK(argmax_index(v) == 1);
  v.setConstant(3);
  CHECK(argmax_index(v) == 0);
  Rng rng(1);
  Eigen::VectorXd p(3);
  p << 0, 1, 0;
  for (int i = 0; i < 50; ++i) CHECK(sample_index(p, rng) == 1);
}

TEST_CASE("speaker input is invariant to distractor order") {
  const Trial a{ColorChip(50, 0, 0), {ColorChip(55, 0, 0), ColorChip(90, 10, 0)},
                Condition::kSplit, "x", Source::kHuman};
  Trial b = a;
  std::swap(b.distractors[0], b.distractors[1]);
  CHECK(speaker_input(a, true) == speaker_input(b, true));
  CHECK(speaker_input(a, true).segment<3>(3) == normalize_chip(ColorChip(55, 0, 0)));
  CHECK(speaker_input(a, false).tail<6>().isZero());
}

TEST_CASE("listener scores do not depend on candidate order") {
  Rng rng(5);
  const Listener l = Listener::Create(Vocabulary({"a", "b"}), AgentConfig{16, 8, true}, rng);
  std::array<ColorChip, 3> c = {ColorChip(10, 1, 2), ColorChip(50, -20, 3), ColorChip(80, 4, 40)};
  const Eigen::Vector3d s = listener_scores(l, 1, c);
  std::array<ColorChip, 3> r = {c[2], c[0], c[1]};
  const Eigen::Vector3d t = listener_scores(l, 1, r);
  CHECK(s(0) == t(1));
  CHECK(s(1) == t(2));
  CHECK(s(2) == t(0));
  CHECK_THROWS_AS(listener_scores(l, 2, c), std::out_of_range);
}

TEST_CASE("checkpoints round-trip byte for byte") {
  testing::ScratchDir dir("agents_ckpt");
  Rng rng(9);
  const Vocabulary v({"red", "blue", "lightgreen"});
  const Speaker s = Speaker::Create(v, AgentConfig{12, 6, true}, rng);
  const Listener l = Listener::Create(v, AgentConfig{12, 6, true}, rng);
  const CheckpointMeta meta{kCheckpointFormatVersion, 17, 3, "abc"};

  save_speaker(s, meta, dir.path() / "s.json");
  save_listener(l, meta, dir.path() / "l.json");
  CheckpointMeta back_meta;
  const Speaker s2 = load_speaker(dir.path() / "s.json", &back_meta);
  const Listener l2 = load_listener(dir.path() / "l.json");
  CHECK(back_meta.seed == 17);
  CHECK(back_meta.epoch == 3);
  CHECK(back_meta.config_digest == "abc");
  CHECK(s2.vocab == v);

  // Exact weights: the saved bytes of a reload match the original bytes.
  save_speaker(s2, meta, dir.path() / "s2.json");
  save_listener(l2, meta, dir.path() / "l2.json");
  CHECK(ReadFile(dir.path() / "s.json") == ReadFile(dir.path() / "s2.json"));
  CHECK(ReadFile(dir.path() / "l.json") == ReadFile(dir.path() / "l2.json"));
  for (std::size_t i = 0; i < s.net.layers().size(); ++i) {
    CHECK(s.net.layers()[i].weights == s2.net.layers()[i].weights);
    CHECK(s.net.layers()[i].bias == s2.net.layers()[i].bias);
  }
  CHECK(l.embedding == l2.embedding);

  const Trial t{ColorChip(40, 5, 5), {ColorChip(60, 5, 5), ColorChip(40, 50, 5)},
                Condition::kFar, std::nullopt, Source::kGenerated};
  CHECK(speaker_logits(s, t) == speaker_logits(s2, t));

  CHECK_THROWS_AS(load_listener(dir.path() / "s.json"), std::runtime_error);
  CHECK_THROWS_AS(load_speaker(dir.path() / "missing.json"), std::runtime_error);
}

TEST_CASE("real_to_string is exact") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = n(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(real_from_string(real_to_string(x)) == x);
  }
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("produce_lexicon records every evaluation trial") {
  Rng rng(2);
  const Corpus c = testing::SyntheticHumanCorpus(200, 8);
  const Speaker s = Speaker::Create(Vocabulary::FromCorpus(c), AgentConfig{8, 8, true}, rng);
  const Lexicon lex = produce_lexicon(s, c, 4);
  REQUIRE(lex.trial_log.size() == c.size());
  std::size_t n = 0;
  for (const auto& [w, chips] : lex.entries) n += chips.size();
  CHECK(n == c.size());
  const auto words = speak_argmax_batch(s, c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(lex.trial_log[i].word == s.vocab.word(words[i]));
    CHECK(lex.trial_log[i].seed == 4);
    CHECK(lex.trial_log[i].e_ctx == context_ease(c.trials[i]));
    Rng unused(0);
    CHECK(speak(s, c.trials[i], Mode::kArgmax, unused).word == words[i]);
  }
}
