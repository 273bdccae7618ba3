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

#include "colorlex/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "colorlex/csv.hpp"

namespace colorlex {

namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string Lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double ParseNumber(const std::string& field, std::string_view what,
                   const std::filesystem::path& path, std::size_t line) {
  const std::string t = Trim(field);
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw std::runtime_error(fmt::format("{}:{}: malformed {} value '{}'",
                                         path.string(), line, what, field));
  }
  return v;
}

std::string FormatTenths(std::int32_t t) {
  const char* sign = t < 0 ? "-" : "";
  const std::int32_t m = t < 0 ? -t : t;
  return fmt::format("{}{}.{}", sign, m / 10, m % 10);
}

const std::array<std::string, 3> kSlots = {"target", "alt1", "alt2"};

HslColor SampleHsl(Rng& rng) {
  std::uniform_real_distribution<double> hue(0.0, 360.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = hue(rng);
  const double s = unit(rng);
  const double l = unit(rng);
  return HslColor(h, s, l);
}

}  // namespace

std::string_view ToString(Condition c) {
  switch (c) {
    case Condition::kFar: return "far";
    case Condition::kSplit: return "split";
    case Condition::kClose: return "close";
  }
  return "?";
}

std::optional<Condition> ParseCondition(std::string_view s) {
  const std::string l = Lower(Trim(s));
  if (l == "far") return Condition::kFar;
  if (l == "split") return Condition::kSplit;
  if (l == "close") return Condition::kClose;
  return std::nullopt;
}

std::string_view ToString(Source s) {
  return s == Source::kHuman ? "human" : "generated";
}

std::optional<SchemaMode> ParseSchemaMode(std::string_view s) {
  if (s == "cielab") return SchemaMode::kCielab;
  if (s == "hsl") return SchemaMode::kHsl;
  return std::nullopt;
}

void Corpus::Recount() {
  word_counts.clear();
  for (const auto& t : trials)
    if (t.human_word) ++word_counts[*t.human_word];
}

std::array<std::size_t, 3> Corpus::ConditionCounts() const {
  std::array<std::size_t, 3> n{};
  for (const auto& t : trials) ++n[static_cast<int>(t.condition)];
  return n;
}

IngestResult ingest_colors_csv(const std::filesystem::path& path, SchemaMode mode) {
  CsvReader reader(path);
  const std::size_t cond_col = reader.column("condition");
  const std::size_t word_col = reader.column("word");
  const auto outcome_col = reader.find_column("outcome");

  const std::array<std::string, 3> suffixes =
      mode == SchemaMode::kHsl ? std::array<std::string, 3>{"h", "s", "l"}
                               : std::array<std::string, 3>{"L", "a", "b"};
  std::array<std::array<std::size_t, 3>, 3> cols{};
  for (int s = 0; s < 3; ++s)
    for (int k = 0; k < 3; ++k)
      cols[s][k] = reader.column(kSlots[s] + "_" + suffixes[k]);

  IngestResult result;
  std::vector<Trial> trials;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++result.stats.rows;
    const std::size_t line = reader.line();
    if (f.size() != reader.header().size()) {
      throw std::runtime_error(fmt::format("{}:{}: expected {} fields, got {}",
                                           path.string(), line,
                                           reader.header().size(), f.size()));
    }
    const auto cond = ParseCondition(f[cond_col]);
    if (!cond) {
      throw std::runtime_error(fmt::format("{}:{}: unknown condition '{}'",
                                           path.string(), line, f[cond_col]));
    }

    std::array<ColorChip, 3> chips;
    for (int s = 0; s < 3; ++s) {
      std::array<double, 3> v;
      for (int k = 0; k < 3; ++k) {
        v[k] = ParseNumber(f[cols[s][k]], kSlots[s] + "_" + suffixes[k], path, line);
      }
      try {
        chips[s] = mode == SchemaMode::kHsl
                       ? hsl_to_cielab(HslColor(v[0], v[1] / 100.0, v[2] / 100.0))
                       : ColorChip(v[0], v[1], v[2]);
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(
            fmt::format("{}:{}: {}", path.string(), line, e.what()));
      }
    }

    if (outcome_col) {
      const std::string o = Lower(Trim(f[*outcome_col]));
      if (o == "false" || o == "0") {
        ++result.stats.unsuccessful;
        continue;
      }
      if (o != "true" && o != "1") {
        throw std::runtime_error(fmt::format("{}:{}: malformed outcome '{}'",
                                             path.string(), line, f[*outcome_col]));
      }
    }

    std::string word = Lower(Trim(f[word_col]));
    if (word.empty()) {
      ++result.stats.empty_word;
      continue;
    }
    if (std::any_of(word.begin(), word.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      ++result.stats.multi_word;
      continue;
    }
    if (chips[1] == chips[0] || chips[2] == chips[0]) {
      ++result.stats.degenerate;
      continue;
    }
    trials.push_back(Trial{chips[0], {chips[1], chips[2]}, *cond, std::move(word),
                           Source::kHuman});
  }
  result.stats.kept = trials.size();
  result.corpus = Corpus(std::move(trials));
  return result;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& c, std::size_t test_size,
                                       std::uint64_t seed) {
  if (test_size > c.size()) {
    throw std::invalid_argument(fmt::format(
        "test size {} exceeds corpus size {}", test_size, c.size()));
  }
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> in_test(c.size(), 0);
  for (std::size_t i = 0; i < test_size; ++i) in_test[idx[i]] = 1;

  std::vector<Trial> train, test;
  train.reserve(c.size() - test_size);
  test.reserve(test_size);
  for (std::size_t i = 0; i < c.size(); ++i)
    (in_test[i] ? test : train).push_back(c.trials[i]);
  return {Corpus(std::move(train)), Corpus(std::move(test))};
}

Corpus upsample(const Corpus& c, UpsamplingConfig cfg, std::uint64_t /*seed*/) {
  if (cfg.target_count < 0) throw std::invalid_argument("negative upsampling target");
  Corpus out = c;
  if (cfg.target_count == 0) return out;

  std::map<std::string, std::vector<std::size_t>> by_word;
  for (std::size_t i = 0; i < c.trials.size(); ++i)
    if (c.trials[i].human_word) by_word[*c.trials[i].human_word].push_back(i);

  for (const auto& [word, idx] : by_word) {
    const auto have = static_cast<std::int64_t>(idx.size());
    for (std::int64_t k = 0; k < cfg.target_count - have; ++k)
      out.trials.push_back(c.trials[idx[static_cast<std::size_t>(k) % idx.size()]]);
  }
  out.Recount();
  return out;
}

bool satisfies_condition(const Trial& t, const TripletThresholds& th) {
  const double d0 = delta_e(t.target, t.distractors[0]);
  const double d1 = delta_e(t.target, t.distractors[1]);
  if (t.distractors[0] == t.target || t.distractors[1] == t.target) return false;
  const auto near = [&](double d) { return d < th.close_max; };
  const auto far = [&](double d) { return d > th.far_min; };
  switch (t.condition) {
    case Condition::kClose: return near(d0) && near(d1);
    case Condition::kFar: return far(d0) && far(d1);
    case Condition::kSplit: return (near(d0) && far(d1)) || (far(d0) && near(d1));
  }
  return false;
}

namespace {

// Draws one trial of the given condition; nullopt when the budget runs out.
std::optional<Trial> SampleTrial(Condition cond, const TripletThresholds& th,
                                 Rng& rng, const GenerationOptions& opts) {
  std::array<bool, 2> want_near{};
  switch (cond) {
    case Condition::kClose: want_near = {true, true}; break;
    case Condition::kFar: want_near = {false, false}; break;
    case Condition::kSplit: {
      const bool first_near = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      want_near = {first_near, !first_near};
      break;
    }
  }
  for (std::size_t restart = 0; restart < opts.target_restarts; ++restart) {
    const ColorChip target = hsl_to_cielab(SampleHsl(rng));
    std::array<ColorChip, 2> d;
    bool ok = true;
    for (int k = 0; k < 2 && ok; ++k) {
      ok = false;
      for (std::size_t attempt = 0; attempt < opts.attempts_per_target; ++attempt) {
        const ColorChip cand = hsl_to_cielab(SampleHsl(rng));
        if (cand == target) continue;
        const double dist = delta_e(target, cand);
        if (want_near[k] ? dist < th.close_max : dist > th.far_min) {
          d[k] = cand;
          ok = true;
          break;
        }
      }
    }
    if (ok) return Trial{target, d, cond, std::nullopt, Source::kGenerated};
  }
  return std::nullopt;
}

std::array<std::size_t, 3> Apportion(std::size_t n, const std::array<double, 3>& mix) {
  std::array<std::size_t, 3> count{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * mix[i];
    count[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(count[i]);
    assigned += count[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++count[order[k % 3]];
  return count;
}

}  // namespace

Corpus generate_triplets(std::size_t n, const std::array<double, 3>& condition_mix,
                         const TripletThresholds& thresholds, std::uint64_t seed,
                         const GenerationOptions& opts) {
  double total = 0;
  for (double p : condition_mix) {
    if (!(p >= 0)) throw std::invalid_argument("condition mix entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument(fmt::format("condition mix sums to {}, not 1", total));
  if (!(thresholds.close_max > 0 && thresholds.close_max < thresholds.far_min)) {
    throw std::invalid_argument(fmt::format(
        "thresholds need 0 < close_max < far_min (got {} / {})",
        thresholds.close_max, thresholds.far_min));
  }

  const auto counts = Apportion(n, condition_mix);
  std::vector<Condition> conds;
  conds.reserve(n);
  for (int i = 0; i < 3; ++i) conds.insert(conds.end(), counts[i], kAllConditions[i]);
  Rng rng(seed);
  std::shuffle(conds.begin(), conds.end(), rng);

  std::vector<Trial> trials;
  trials.reserve(n);
  for (Condition c : conds) {
    auto t = SampleTrial(c, thresholds, rng, opts);
    if (!t) {
      throw std::runtime_error(fmt::format(
          "triplet sampling did not converge for condition '{}' with "
          "close_max={} far_min={}",
          ToString(c), thresholds.close_max, thresholds.far_min));
    }
    trials.push_back(std::move(*t));
  }
  return Corpus(std::move(trials));
}

double ks_statistic(std::vector<double> x, std::vector<double> y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("KS statistic of empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double best = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / nx -
                                   static_cast<double>(j) / ny));
  }
  return best;
}

CalibrationResult calibrate_thresholds(const Corpus& reference, std::uint64_t seed,
                                       const CalibrationOptions& opts) {
  std::array<std::vector<double>, 3> ref;
  for (const auto& t : reference.trials)
    ref[static_cast<int>(t.condition)].push_back(context_ease(t));
  for (int i = 0; i < 3; ++i) {
    if (ref[i].empty()) {
      throw std::invalid_argument(fmt::format(
          "reference corpus has no '{}' trials", ToString(kAllConditions[i])));
    }
  }

  const auto sample_ease = [&](Condition c, const TripletThresholds& th) {
    Rng rng(seed + static_cast<std::uint64_t>(c));
    std::vector<double> out;
    out.reserve(opts.samples_per_condition);
    for (std::size_t k = 0; k < opts.samples_per_condition; ++k) {
      auto t = SampleTrial(c, th, rng, GenerationOptions{});
      if (!t) return std::vector<double>{};
      out.push_back(context_ease(*t));
    }
    return out;
  };

  CalibrationResult best;
  double best_close = std::numeric_limits<double>::infinity();
  for (double cm = opts.close_lo; cm <= opts.close_hi + 1e-9; cm += opts.step) {
    const TripletThresholds th{cm, cm + 1.0};
    const auto close = sample_ease(Condition::kClose, th);
    const auto split = sample_ease(Condition::kSplit, th);
    if (close.empty() || split.empty()) continue;
    const double kc = ks_statistic(close, ref[2]);
    const double ks = ks_statistic(split, ref[1]);
    if (std::max(kc, ks) < best_close) {
      best_close = std::max(kc, ks);
      best.thresholds.close_max = cm;
      best.ks[2] = kc;
      best.ks[1] = ks;
    }
  }
  if (!std::isfinite(best_close))
    throw std::runtime_error("threshold calibration found no feasible close_max");

  double best_far = std::numeric_limits<double>::infinity();
  const double far_start = std::max(opts.far_lo, best.thresholds.close_max + opts.step);
  for (double fm = far_start; fm <= opts.far_hi + 1e-9; fm += opts.step) {
    const auto far = sample_ease(Condition::kFar, {best.thresholds.close_max, fm});
    if (far.empty()) continue;
    const double kf = ks_statistic(far, ref[0]);
    if (kf < best_far) {
      best_far = kf;
      best.thresholds.far_min = fm;
      best.ks[0] = kf;
    }
  }
  if (!std::isfinite(best_far))
    throw std::runtime_error("threshold calibration found no feasible far_min");

  best.within_tolerance =
      *std::max_element(best.ks.begin(), best.ks.end()) <= opts.tolerance;
  return best;
}

std::string corpus_to_csv(const Corpus& c) {
  std::string out =
      "condition,target_L,target_a,target_b,alt1_L,alt1_a,alt1_b,alt2_L,alt2_a,"
      "alt2_b,word,source\n";
  for (const auto& t : c.trials) {
    std::vector<std::string> f;
    f.emplace_back(ToString(t.condition));
    for (const ColorChip* chip : {&t.target, &t.distractors[0], &t.distractors[1]}) {
      f.push_back(FormatTenths(chip->L_tenths()));
      f.push_back(FormatTenths(chip->a_tenths()));
      f.push_back(FormatTenths(chip->b_tenths()));
    }
    f.push_back(t.human_word.value_or(""));
    f.emplace_back(ToString(t.source));
    out += JoinCsv(f);
    out.push_back('\n');
  }
  return out;
}

void save_corpus(const Corpus& c, const std::filesystem::path& path) {
  WriteFileAtomic(path, corpus_to_csv(c));
}

Corpus load_corpus(const std::filesystem::path& path) {
  CsvReader reader(path);
  const std::size_t cond_col = reader.column("condition");
  const std::size_t word_col = reader.column("word");
  const std::size_t source_col = reader.column("source");
  std::array<std::array<std::size_t, 3>, 3> cols{};
  const std::array<std::string, 3> suffixes = {"L", "a", "b"};
  for (int s = 0; s < 3; ++s)
    for (int k = 0; k < 3; ++k) cols[s][k] = reader.column(kSlots[s] + "_" + suffixes[k]);

  std::vector<Trial> trials;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const std::size_t line = reader.line();
    if (f.size() != reader.header().size()) {
      throw std::runtime_error(
          fmt::format("{}:{}: wrong field count", path.string(), line));
    }
    Trial t;
    const auto cond = ParseCondition(f[cond_col]);
    if (!cond) {
      throw std::runtime_error(fmt::format("{}:{}: unknown condition '{}'",
                                           path.string(), line, f[cond_col]));
    }
    t.condition = *cond;
    std::array<ColorChip, 3> chips;
    for (int s = 0; s < 3; ++s) {
      chips[s] = ColorChip(ParseNumber(f[cols[s][0]], "L", path, line),
                           ParseNumber(f[cols[s][1]], "a", path, line),
                           ParseNumber(f[cols[s][2]], "b", path, line));
    }
    t.target = chips[0];
    t.distractors = {chips[1], chips[2]};
    if (!f[word_col].empty()) t.human_word = f[word_col];
    if (f[source_col] == "human") {
      t.source = Source::kHuman;
    } else if (f[source_col] == "generated") {
      t.source = Source::kGenerated;
    } else {
      throw std::runtime_error(fmt::format("{}:{}: unknown source '{}'",
                                           path.string(), line, f[source_col]));
    }
    trials.push_back(std::move(t));
  }
  return Corpus(std::move(trials));
}

}  // namespace colorlex
