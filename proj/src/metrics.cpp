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

#include "colorlex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "colorlex/training.hpp"

namespace colorlex {

namespace {

std::vector<ColorChip> UniqueChips(std::span<const ColorChip> chips) {
  std::vector<ColorChip> u(chips.begin(), chips.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

}  // namespace

AccuracyReport communication_accuracy(const Speaker& s, const ListenerPolicy& listener,
                                      const Corpus& eval, Rng& rng) {
  if (eval.empty()) throw std::invalid_argument("communication accuracy on an empty corpus");
  const auto words = speak_argmax_batch(s, eval);
  std::array<std::size_t, 3> correct{}, total{};
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const Trial& t = eval.trials[i];
    std::array<ColorChip, 3> cands;
    const int target = shuffle_candidates(t, cands, rng);
    const Choice c = listener(words[i], cands, rng);
    const auto k = static_cast<std::size_t>(t.condition);
    ++total[k];
    if (c.index == target) ++correct[k];
  }
  AccuracyReport r;
  std::size_t all = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    all += correct[k];
    if (total[k]) r.per_condition[k] = static_cast<double>(correct[k]) / static_cast<double>(total[k]);
  }
  r.overall = static_cast<double>(all) / static_cast<double>(eval.size());
  return r;
}

AccuracyReport communication_accuracy(const Speaker& s, const Listener& l,
                                      const Corpus& eval, Rng& rng) {
  return communication_accuracy(s, as_policy(l, Mode::kArgmax), eval, rng);
}

WordStats word_spread(std::span<const ColorChip> denotation, std::string word) {
  WordStats st;
  st.word = std::move(word);
  const auto u = UniqueChips(denotation);
  st.unique_chip_count = u.size();
  if (u.size() < 2) return st;
  double sum = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) sum += delta_e(u[i], u[j]);
  const double pairs = static_cast<double>(u.size()) * static_cast<double>(u.size() - 1) / 2.0;
  st.spread = sum / pairs;
  st.informativeness = 1.0 / *st.spread;
  return st;
}

std::map<std::string, double> word_informativeness(const Lexicon& lex, double scale) {
  std::map<std::string, double> out;
  for (const auto& [w, chips] : lex.entries) {
    const auto st = word_spread(chips, w);
    if (st.informativeness) out.emplace(w, scale * *st.informativeness);
  }
  return out;
}

InformativenessResult system_informativeness(const Lexicon& lex, double scale) {
  const auto iw = word_informativeness(lex, scale);
  InformativenessResult r;
  double sum = 0;
  for (const auto& rec : lex.trial_log) {
    auto it = iw.find(rec.word);
    if (it == iw.end()) {
      ++r.skipped_trials;
      continue;
    }
    sum += it->second;
    ++r.used_trials;
  }
  if (r.used_trials == 0)
    throw std::invalid_argument("no trial uses a word with defined informativeness");
  r.value = sum / static_cast<double>(r.used_trials);
  return r;
}

std::size_t lexical_diversity(const Lexicon& lex) {
  std::size_t n = 0;
  for (const auto& [w, chips] : lex.entries)
    if (!chips.empty()) ++n;
  return n;
}

std::vector<ColorChip> chip_universe(const Corpus& c) {
  std::vector<ColorChip> u;
  u.reserve(c.size());
  for (const auto& t : c.trials) u.push_back(t.target);
  return UniqueChips(u);
}

std::vector<ColorChip> dense_grid_universe(double step) {
  if (!(step >= 0.1)) throw std::invalid_argument("grid step must be >= 0.1");
  std::set<ColorChip> chips;
  for (int h = 0; h < 360; ++h) {
    for (int s = 0; s <= 100; ++s) {
      for (int l = 0; l <= 100; ++l) {
        const Eigen::Vector3d lab = hsl_to_cielab_exact(HslColor(h, s / 100.0, l / 100.0));
        const auto snap = [step](double v) { return std::round(v / step) * step; };
        chips.insert(ColorChip(std::clamp(snap(lab.x()), 0.0, 100.0), snap(lab.y()),
                               snap(lab.z())));
      }
    }
  }
  return {chips.begin(), chips.end()};
}

ConvexityResult convexity(const Lexicon& lex, std::span<const ColorChip> universe,
                          double eps) {
  const std::unordered_set<ColorChip, ColorChipHash> members(universe.begin(), universe.end());
  ConvexityResult r;
  double sum = 0;
  for (const auto& [w, chips] : lex.entries) {
    if (chips.empty()) continue;
    const auto u = UniqueChips(chips);
    for (const auto& c : u) {
      if (!members.count(c)) {
        throw std::invalid_argument(fmt::format(
            "denotation chip {} of '{}' is not in the universe", c.ToString(), w));
      }
    }
    const Hull h = convex_hull(u);
    Eigen::Vector3d lo = u.front().vec(), hi = lo;
    for (const auto& c : u) {
      lo = lo.cwiseMin(c.vec());
      hi = hi.cwiseMax(c.vec());
    }
    lo.array() -= eps;
    hi.array() += eps;
    std::size_t inside = 0;
    for (const auto& c : members) {
      const Eigen::Vector3d v = c.vec();
      if ((v.array() < lo.array()).any() || (v.array() > hi.array()).any()) continue;
      if (contains(h, c, eps)) ++inside;
    }
    const double degree = static_cast<double>(u.size()) / static_cast<double>(inside);
    r.per_word.emplace(w, degree);
    sum += degree;
  }
  if (r.per_word.empty()) throw std::invalid_argument("convexity of an empty lexicon");
  r.value = sum / static_cast<double>(r.per_word.size());
  return r;
}

Eigen::Vector3d prototype(std::span<const ColorChip> denotation) {
  const auto u = UniqueChips(denotation);
  if (u.empty()) throw std::invalid_argument("prototype of an empty denotation");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& c : u) sum += c.vec();
  return sum / static_cast<double>(u.size());
}

DriftResult semantic_drift(const Lexicon& agent, const Lexicon& human) {
  DriftResult r;
  double sum = 0;
  for (const auto& [w, chips] : agent.entries) {
    if (chips.empty()) continue;
    auto it = human.entries.find(w);
    if (it == human.entries.end() || it->second.empty()) {
      ++r.agent_only;
      continue;
    }
    ++r.shared_words;
    sum += (prototype(chips) - prototype(it->second)).norm();
  }
  for (const auto& [w, chips] : human.entries) {
    if (chips.empty()) continue;
    auto it = agent.entries.find(w);
    if (it == agent.entries.end() || it->second.empty()) ++r.human_only;
  }
  if (r.shared_words == 0) throw std::invalid_argument("lexicons share no words");
  r.value = sum / static_cast<double>(r.shared_words);
  return r;
}

}  // namespace colorlex
