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

#include "colorlex/lexicon.hpp"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

#include "colorlex/checkpoint.hpp"
#include "colorlex/csv.hpp"

namespace colorlex {

Lexicon lexicon_from_corpus(const Corpus& c, std::int64_t seed) {
  Lexicon lex;
  for (const auto& t : c.trials)
    if (t.human_word) lex.Add(*t.human_word, t.target, context_ease(t), seed);
  return lex;
}

std::string trial_log_csv(const Lexicon& lex) {
  std::string out = "word,L,a,b,e_ctx,seed\n";
  for (const auto& r : lex.trial_log) {
    out += JoinCsv({r.word, fmt::format("{:.1f}", r.target.L()),
                    fmt::format("{:.1f}", r.target.a()),
                    fmt::format("{:.1f}", r.target.b()), real_to_string(r.e_ctx),
                    std::to_string(r.seed)});
    out.push_back('\n');
  }
  return out;
}

void save_trial_log(const Lexicon& lex, const std::filesystem::path& path) {
  WriteFileAtomic(path, trial_log_csv(lex));
}

Lexicon load_trial_log(const std::filesystem::path& path) {
  CsvReader reader(path);
  const std::size_t w = reader.column("word"), L = reader.column("L"),
                    a = reader.column("a"), b = reader.column("b"),
                    e = reader.column("e_ctx"), s = reader.column("seed");
  Lexicon lex;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != reader.header().size())
      throw std::runtime_error(fmt::format("{}:{}: wrong field count", path.string(), reader.line()));
    std::int64_t seed = 0;
    auto [p, ec] = std::from_chars(f[s].data(), f[s].data() + f[s].size(), seed);
    if (ec != std::errc())
      throw std::runtime_error(fmt::format("{}:{}: bad seed", path.string(), reader.line()));
    lex.Add(f[w],
            ColorChip(real_from_string(f[L]), real_from_string(f[a]), real_from_string(f[b])),
            real_from_string(f[e]), seed);
  }
  return lex;
}

}  // namespace colorlex
