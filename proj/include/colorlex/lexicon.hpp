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

#ifndef COLORLEX_LEXICON_HPP_
#define COLORLEX_LEXICON_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "colorlex/colorspace.hpp"
#include "colorlex/dataset.hpp"

namespace colorlex {

struct TrialRecord {
  std::string word;
  ColorChip target;
  double e_ctx = 0;
  std::int64_t seed = 0;
};

// Word -> denotation (multiset of target chips), plus the per-trial log the
// context regression is fitted on.
struct Lexicon {
  std::map<std::string, std::vector<ColorChip>> entries;
  std::vector<TrialRecord> trial_log;

  void Add(const std::string& word, const ColorChip& target, double e_ctx,
           std::int64_t seed) {
    entries[word].push_back(target);
    trial_log.push_back({word, target, e_ctx, seed});
  }
};

// The lexicon implied by the human words of a corpus. Trials without a word
// are ignored.
Lexicon lexicon_from_corpus(const Corpus& c, std::int64_t seed = 0);

// Trial log persistence: word,L,a,b,e_ctx,seed. The entries map is rebuilt
// from the log on load.
std::string trial_log_csv(const Lexicon& lex);
void save_trial_log(const Lexicon& lex, const std::filesystem::path& path);
Lexicon load_trial_log(const std::filesystem::path& path);

}  // namespace colorlex

#endif  // COLORLEX_LEXICON_HPP_
