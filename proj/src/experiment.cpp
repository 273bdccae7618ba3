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

#include "colorlex/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "colorlex/agents.hpp"
#include "colorlex/checkpoint.hpp"
#include "colorlex/csv.hpp"
#include "colorlex/training.hpp"

namespace colorlex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Log {
 public:
  explicit Log(std::ostream* out) : out_(out) {}
  template <typename... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) {
    if (!out_) return;
    const std::string line = fmt::format(f, std::forward<Args>(args)...);
    std::lock_guard<std::mutex> lock(mu_);
    *out_ << line << '\n' << std::flush;
  }

 private:
  std::ostream* out_;
  std::mutex mu_;
};

std::string OptReal(const std::optional<double>& v) { return v ? real_to_string(*v) : ""; }

std::optional<double> ParseOptReal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return real_from_string(s);
}

Rng DerivedRng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Stream tags for DerivedRng.
constexpr std::uint64_t kTagSlEval = 0x51;
constexpr std::uint64_t kTagRlTrain = 0x52;
constexpr std::uint64_t kTagRlEval = 0x53;

// ---- cell stamps ----------------------------------------------------------

using Artifacts = std::vector<std::pair<std::string, std::string>>;  // name, bytes

void WriteCell(const fs::path& dir, const Artifacts& files, const std::string& digest,
               json extra = json::object()) {
  json stamp;
  stamp["digest"] = digest;
  json hashes = json::object();
  for (const auto& [name, bytes] : files) {
    WriteFileAtomic(dir / name, bytes);
    hashes[name] = sha256_hex(bytes);
  }
  stamp["files"] = hashes;
  for (auto& [k, v] : extra.items()) stamp[k] = v;
  WriteFileAtomic(dir / "done.json", dump_json(stamp));
}

enum class StampState { kMissing, kValid, kCorrupt };

StampState CheckCell(const fs::path& dir, const std::string& digest, json* stamp_out = nullptr) {
  const fs::path p = dir / "done.json";
  if (!fs::exists(p)) return StampState::kMissing;
  json stamp;
  try {
    stamp = json::parse(ReadFile(p));
  } catch (const std::exception&) {
    return StampState::kCorrupt;
  }
  if (!stamp.contains("digest") || !stamp["digest"].is_string()) return StampState::kCorrupt;
  if (stamp["digest"].get<std::string>() != digest) {
    throw std::runtime_error(fmt::format(
        "{} was produced by config digest {}, refusing to resume under {}", dir.string(),
        stamp["digest"].get<std::string>(), digest));
  }
  if (!stamp.contains("files") || !stamp["files"].is_object()) return StampState::kCorrupt;
  for (auto& [name, hash] : stamp["files"].items()) {
    const fs::path f = dir / name;
    if (!fs::exists(f)) return StampState::kCorrupt;
    if (sha256_hex(ReadFile(f)) != hash.get<std::string>()) return StampState::kCorrupt;
  }
  if (stamp_out) *stamp_out = std::move(stamp);
  return StampState::kValid;
}

// ---- parallel driver ------------------------------------------------------

void RunParallel(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto loop = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (first) return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (k == 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < k; ++i) pool.emplace_back(loop);
  }
  if (first) std::rethrow_exception(first);
}

// ---- evaluation -----------------------------------------------------------

struct Evaluation {
  CellMetrics metrics;
  Lexicon lexicon;
};

Evaluation Evaluate(const Speaker& s, const std::vector<Listener>& listeners, const Corpus& eval,
                    std::span<const ColorChip> universe, const Lexicon& human,
                    const ExperimentConfig& cfg, Rng& rng) {
  Evaluation out;
  CellMetrics& m = out.metrics;
  std::array<double, 3> cond_sum{};
  std::array<int, 3> cond_n{};
  double acc_sum = 0;
  for (const auto& l : listeners) {
    const AccuracyReport r = communication_accuracy(s, l, eval, rng);
    acc_sum += r.overall;
    for (std::size_t k = 0; k < 3; ++k) {
      if (r.per_condition[k]) {
        cond_sum[k] += *r.per_condition[k];
        ++cond_n[k];
      }
    }
  }
  m.acc_comm = acc_sum / static_cast<double>(listeners.size());
  for (std::size_t k = 0; k < 3; ++k)
    if (cond_n[k]) m.acc_by_condition[k] = cond_sum[k] / cond_n[k];

  out.lexicon = produce_lexicon(s, eval, 0);
  m.lexical_diversity = static_cast<double>(lexical_diversity(out.lexicon));
  try {
    const auto inf = system_informativeness(out.lexicon, cfg.informativeness_scale);
    m.informativeness = inf.value;
    m.skipped_trials = inf.skipped_trials;
  } catch (const std::invalid_argument&) {
    m.skipped_trials = out.lexicon.trial_log.size();
  }
  m.convexity = convexity(out.lexicon, universe).value;
  try {
    const auto d = semantic_drift(out.lexicon, human);
    m.drift = d.value;
    m.agent_only_words = d.agent_only;
    m.human_only_words = d.human_only;
  } catch (const std::invalid_argument&) {
  }
  return out;
}

void StampSeed(Lexicon& lex, std::uint64_t seed) {
  for (auto& r : lex.trial_log) r.seed = static_cast<std::int64_t>(seed);
}

// ---- cell tasks -----------------------------------------------------------

fs::path SlDir(const fs::path& run, std::int64_t n, std::uint64_t seed) {
  return run / fmt::format("sl-{}", n) / std::to_string(seed);
}
fs::path RlDir(const fs::path& run, int listeners, std::int64_t n, std::uint64_t seed) {
  return run / fmt::format("{}-{}", listeners, n) / std::to_string(seed);
}

std::string ListenerFile(int k) { return fmt::format("listener_{}.json", k); }

struct Context {
  const ExperimentConfig& cfg;
  const SharedData& data;
  fs::path run_dir;
  std::string digest;
  Log& log;
};

Evaluation EvaluateSl(const Context& cx, const Speaker& s, const Listener& l0, std::int64_t n,
                      std::uint64_t seed) {
  Rng rng = DerivedRng({seed, static_cast<std::uint64_t>(n), kTagSlEval});
  Evaluation ev = Evaluate(s, {l0}, cx.data.test, cx.data.universe_test, cx.data.human, cx.cfg, rng);
  ev.metrics.phase = kPhaseSl;
  ev.metrics.upsampling = n;
  ev.metrics.seed = seed;
  StampSeed(ev.lexicon, seed);
  return ev;
}

Evaluation EvaluateRl(const Context& cx, const Speaker& s, const std::vector<Listener>& ls,
                      int listeners, std::int64_t n, std::uint64_t seed) {
  Rng rng = DerivedRng({seed, static_cast<std::uint64_t>(listeners),
                        static_cast<std::uint64_t>(n), kTagRlEval});
  Evaluation ev =
      Evaluate(s, ls, cx.data.gen_eval, cx.data.universe_eval, cx.data.human, cx.cfg, rng);
  ev.metrics.phase = kPhaseRl;
  ev.metrics.listeners = listeners;
  ev.metrics.upsampling = n;
  ev.metrics.seed = seed;
  StampSeed(ev.lexicon, seed);
  return ev;
}

// Returns true if the cell was (re)computed.
bool SlTask(const Context& cx, std::int64_t n, std::uint64_t seed, int needed, bool resume) {
  const fs::path dir = SlDir(cx.run_dir, n, seed);
  json stamp;
  int have = 0;
  if (resume && CheckCell(dir, cx.digest, &stamp) == StampState::kValid)
    have = stamp.value("listeners", 0);
  if (have >= needed) return false;

  const Corpus up = upsample(cx.data.train, UpsamplingConfig{n});
  Artifacts files;
  std::string curves = "agent,epoch,loss\n";
  auto add_curve = [&curves](const std::string& agent, const SlCurve& c) {
    curves += fmt::format("{},0,{}\n", agent, real_to_string(c.initial_loss));
    for (std::size_t e = 0; e < c.epoch_loss.size(); ++e)
      curves += fmt::format("{},{},{}\n", agent, e + 1, real_to_string(c.epoch_loss[e]));
  };
  CheckpointMeta meta{kCheckpointFormatVersion, seed, cx.cfg.sl.epochs, cx.digest};

  Speaker speaker;
  Listener l0;
  if (have == 0) {
    cx.log("sl  N={} seed={}: training speaker on {} trials", n, seed, up.size());
    Rng rng = DerivedRng({seed});
    speaker = Speaker::Create(cx.data.vocab, cx.cfg.agent, rng);
    add_curve("speaker", sl_train_speaker(speaker, up, cx.cfg.sl, rng));
    files.emplace_back("speaker.json", dump_json(speaker_to_json(speaker, meta)));
  } else {
    // Extend an existing population; earlier files stay as they are.
    for (auto& [name, hash] : stamp["files"].items())
      files.emplace_back(name, ReadFile(dir / name));
    curves = ReadFile(dir / "sl_curves.csv");
  }
  for (int k = have; k < needed; ++k) {
    const std::uint64_t lseed = seed * 1000 + static_cast<std::uint64_t>(k);
    Rng rng = DerivedRng({lseed});
    Listener l = Listener::Create(cx.data.vocab, cx.cfg.agent, rng);
    add_curve(fmt::format("listener_{}", k), sl_train_listener(l, up, cx.cfg.sl, rng));
    CheckpointMeta lm = meta;
    lm.seed = lseed;
    files.emplace_back(ListenerFile(k), dump_json(listener_to_json(l, lm)));
    if (k == 0) l0 = std::move(l);
  }
  cx.log("sl  N={} seed={}: listeners {}..{} trained", n, seed, have, needed - 1);

  std::erase_if(files, [](const auto& f) { return f.first == "sl_curves.csv"; });
  files.emplace_back("sl_curves.csv", curves);
  if (have == 0) {
    const Evaluation ev = EvaluateSl(cx, speaker, l0, n, seed);
    files.emplace_back("metrics.csv", cell_metrics_csv({ev.metrics}));
    files.emplace_back("trial_log.csv", trial_log_csv(ev.lexicon));
  }
  WriteCell(dir, files, cx.digest, json{{"listeners", needed}});
  return true;
}

bool RlTask(const Context& cx, int listeners, std::int64_t n, std::uint64_t seed, bool resume) {
  const fs::path dir = RlDir(cx.run_dir, listeners, n, seed);
  if (resume && CheckCell(dir, cx.digest) == StampState::kValid) return false;
  const fs::path sl = SlDir(cx.run_dir, n, seed);
  json stamp;
  if (CheckCell(sl, cx.digest, &stamp) != StampState::kValid || stamp.value("listeners", 0) < listeners)
    throw std::runtime_error(fmt::format("missing SL artifacts in {}", sl.string()));

  Speaker speaker = load_speaker(sl / "speaker.json");
  std::vector<Listener> ls;
  for (int k = 0; k < listeners; ++k) ls.push_back(load_listener(sl / ListenerFile(k)));

  RlConfig rl = cx.cfg.rl;
  rl.listeners = listeners;
  Rng rng = DerivedRng({seed, static_cast<std::uint64_t>(listeners),
                        static_cast<std::uint64_t>(n), kTagRlTrain});
  RunRecord record;
  record.seed = seed;
  record.config_digest = cx.digest;
  cx.log("rl  L={} N={} seed={}: {} epochs on {} generated trials", listeners, n, seed, rl.epochs,
         cx.data.gen_train.size());
  rl_train(speaker, ls, cx.data.gen_train, rl, rng, record);

  Artifacts files;
  CheckpointMeta meta{kCheckpointFormatVersion, seed, cx.cfg.sl.epochs + rl.epochs, cx.digest};
  files.emplace_back("checkpoints/speaker.json", dump_json(speaker_to_json(speaker, meta)));
  record.checkpoints.push_back("checkpoints/speaker.json");
  for (int k = 0; k < listeners; ++k) {
    CheckpointMeta lm = meta;
    lm.seed = seed * 1000 + static_cast<std::uint64_t>(k);
    files.emplace_back("checkpoints/" + ListenerFile(k), dump_json(listener_to_json(ls[static_cast<std::size_t>(k)], lm)));
    record.checkpoints.push_back("checkpoints/" + ListenerFile(k));
  }
  files.emplace_back("logs/run_record.json", dump_json(run_record_to_json(record)));
  files.emplace_back("logs/epochs.csv", epoch_curve_csv(record));
  const Evaluation ev = EvaluateRl(cx, speaker, ls, listeners, n, seed);
  files.emplace_back("metrics.csv", cell_metrics_csv({ev.metrics}));
  files.emplace_back("trial_log.csv", trial_log_csv(ev.lexicon));
  WriteCell(dir, files, cx.digest);
  cx.log("rl  L={} N={} seed={}: acc {:.3f}", listeners, n, seed, ev.metrics.acc_comm);
  return true;
}

// ---- aggregation ----------------------------------------------------------

std::optional<MetricSummary> Summary(const std::vector<CellMetrics>& cells,
                                     std::optional<double> CellMetrics::*member) {
  std::vector<double> v;
  for (const auto& c : cells) {
    if (!(c.*member)) return std::nullopt;
    v.push_back(*(c.*member));
  }
  if (v.empty()) return std::nullopt;
  return summarize(std::move(v));
}

std::optional<MetricSummary> Summary(const std::vector<CellMetrics>& cells,
                                     double CellMetrics::*member) {
  std::vector<double> v;
  for (const auto& c : cells) v.push_back(c.*member);
  if (v.empty()) return std::nullopt;
  return summarize(std::move(v));
}

std::string GroupingName(ChipGrouping g) {
  return g == ChipGrouping::kExact ? "exact" : "integer";
}

void FillBeta(ConditionReport& r, const RegressionResult& fit) {
  r.beta = fit.beta;
  r.beta_se = fit.standard_error;
  r.beta_p = fit.p_value;
}

ConditionReport MakeRow(std::string phase, std::optional<int> listeners,
                        std::optional<std::int64_t> n, const std::vector<CellMetrics>& cells,
                        const std::vector<Lexicon>& logs, const ExperimentConfig& cfg, Log& log) {
  ConditionReport r;
  r.phase = std::move(phase);
  r.listeners = listeners;
  r.upsampling = n;
  for (const auto& c : cells) r.seeds.push_back(c.seed);
  r.acc_comm = Summary(cells, &CellMetrics::acc_comm);
  r.lexical_diversity = Summary(cells, &CellMetrics::lexical_diversity);
  r.informativeness = Summary(cells, &CellMetrics::informativeness);
  r.convexity = Summary(cells, &CellMetrics::convexity);
  r.drift = Summary(cells, &CellMetrics::drift);
  r.chip_grouping = GroupingName(cfg.chip_grouping);
  RegressionOptions opts;
  opts.informativeness_scale = cfg.informativeness_scale;
  opts.chip_grouping = cfg.chip_grouping;
  try {
    FillBeta(r, fit_context_regression(std::span<const Lexicon>(logs), opts));
  } catch (const std::exception& e) {
    log("regression for {} L={} N={} failed: {}", r.phase, listeners.value_or(0), n.value_or(0),
        e.what());
  }
  return r;
}

std::string RowName(const ConditionReport& r) {
  if (r.phase == kPhaseSl) return "SL";
  if (r.phase == kPhaseRl) return "SL+RL";
  if (r.phase == kPhaseHuman) return "Human";
  return r.phase;
}

}  // namespace

// ---- public API -----------------------------------------------------------

std::string cell_metrics_csv(const std::vector<CellMetrics>& rows) {
  std::string out =
      "phase,listeners,upsampling,seed,acc_comm,acc_far,acc_split,acc_close,lexical_diversity,"
      "informativeness,convexity,drift,skipped_trials,agent_only_words,human_only_words\n";
  for (const auto& m : rows) {
    out += JoinCsv({m.phase, std::to_string(m.listeners), std::to_string(m.upsampling),
                    std::to_string(m.seed), real_to_string(m.acc_comm),
                    OptReal(m.acc_by_condition[0]), OptReal(m.acc_by_condition[1]),
                    OptReal(m.acc_by_condition[2]), real_to_string(m.lexical_diversity),
                    OptReal(m.informativeness), OptReal(m.convexity), OptReal(m.drift),
                    std::to_string(m.skipped_trials), std::to_string(m.agent_only_words),
                    std::to_string(m.human_only_words)});
    out += '\n';
  }
  return out;
}

std::vector<CellMetrics> parse_cell_metrics_csv(const fs::path& path) {
  CsvReader in(path);
  const auto col = [&in](std::string_view n) { return in.column(n); };
  const std::size_t c_phase = col("phase"), c_l = col("listeners"), c_n = col("upsampling"),
                    c_seed = col("seed"), c_acc = col("acc_comm"), c_far = col("acc_far"),
                    c_split = col("acc_split"), c_close = col("acc_close"),
                    c_w = col("lexical_diversity"), c_inf = col("informativeness"),
                    c_conv = col("convexity"), c_drift = col("drift"),
                    c_skip = col("skipped_trials"), c_ao = col("agent_only_words"),
                    c_ho = col("human_only_words");
  std::vector<CellMetrics> out;
  std::vector<std::string> f;
  while (in.next(f)) {
    if (f.size() != in.header().size())
      throw std::runtime_error(fmt::format("{}:{}: wrong field count", path.string(), in.line()));
    CellMetrics m;
    m.phase = f[c_phase];
    m.listeners = std::stoi(f[c_l]);
    m.upsampling = std::stoll(f[c_n]);
    m.seed = std::stoull(f[c_seed]);
    m.acc_comm = real_from_string(f[c_acc]);
    m.acc_by_condition = {ParseOptReal(f[c_far]), ParseOptReal(f[c_split]),
                          ParseOptReal(f[c_close])};
    m.lexical_diversity = real_from_string(f[c_w]);
    m.informativeness = ParseOptReal(f[c_inf]);
    m.convexity = ParseOptReal(f[c_conv]);
    m.drift = ParseOptReal(f[c_drift]);
    m.skipped_trials = std::stoull(f[c_skip]);
    m.agent_only_words = std::stoull(f[c_ao]);
    m.human_only_words = std::stoull(f[c_ho]);
    out.push_back(std::move(m));
  }
  return out;
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.per_seed = std::move(values);
  const double n = static_cast<double>(s.per_seed.size());
  if (s.per_seed.empty()) return s;
  s.mean = std::accumulate(s.per_seed.begin(), s.per_seed.end(), 0.0) / n;
  if (s.per_seed.size() > 1) {
    double ss = 0;
    for (double v : s.per_seed) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  }
  return s;
}

std::string run_digest(const ExperimentConfig& cfg) {
  const std::string corpus_hash = sha256_hex(ReadFile(cfg.colors_csv));
  return sha256_hex(cfg.CanonicalText() + "corpus_sha256=" + corpus_hash + "\n");
}

SharedData prepare_data(const ExperimentConfig& cfg, const fs::path& run_dir, std::ostream* out) {
  Log log(out);
  SharedData d;
  IngestResult ing = ingest_colors_csv(cfg.colors_csv, cfg.schema_mode);
  d.full = std::move(ing.corpus);
  d.ingest = ing.stats;
  log("ingest: {} rows, {} trials kept (multi-word {}, empty {}, unsuccessful {}, degenerate {})",
      d.ingest.rows, d.ingest.kept, d.ingest.multi_word, d.ingest.empty_word,
      d.ingest.unsuccessful, d.ingest.degenerate);
  if (d.full.empty()) throw std::runtime_error("the ingested corpus is empty");

  const fs::path data_dir = run_dir / "data";
  const std::string digest = run_digest(cfg);
  json stamp;
  if (CheckCell(data_dir, digest, &stamp) == StampState::kValid) {
    d.train = load_corpus(data_dir / "train.csv");
    d.test = load_corpus(data_dir / "test.csv");
    d.gen_train = load_corpus(data_dir / "gen_train.csv");
    d.gen_eval = load_corpus(data_dir / "gen_eval.csv");
    d.thresholds.close_max = stamp["close_max"].get<double>();
    d.thresholds.far_min = stamp["far_min"].get<double>();
    log("data: reusing {}", data_dir.string());
  } else {
    std::tie(d.train, d.test) = split_corpus(d.full, cfg.test_size, cfg.data_seed);
    d.thresholds = cfg.thresholds;
    if (cfg.calibrate_thresholds) {
      d.calibration = calibrate_thresholds(d.full, cfg.data_seed);
      d.thresholds = d.calibration->thresholds;
      log("calibration: close_max {} far_min {} ks [{:.3f} {:.3f} {:.3f}]{}",
          d.thresholds.close_max, d.thresholds.far_min, d.calibration->ks[0],
          d.calibration->ks[1], d.calibration->ks[2],
          d.calibration->within_tolerance ? "" : " (outside tolerance)");
    }
    const auto counts = d.full.ConditionCounts();
    std::array<double, 3> mix{};
    for (std::size_t k = 0; k < 3; ++k)
      mix[k] = static_cast<double>(counts[k]) / static_cast<double>(d.full.size());
    d.gen_train = generate_triplets(cfg.gen_train_size, mix, d.thresholds, cfg.data_seed + 1);
    d.gen_eval = generate_triplets(cfg.gen_eval_size, mix, d.thresholds, cfg.data_seed + 2);
    json extra{{"close_max", d.thresholds.close_max}, {"far_min", d.thresholds.far_min}};
    if (d.calibration) extra["calibration_ks"] = d.calibration->ks;
    WriteCell(data_dir,
              {{"train.csv", corpus_to_csv(d.train)},
               {"test.csv", corpus_to_csv(d.test)},
               {"gen_train.csv", corpus_to_csv(d.gen_train)},
               {"gen_eval.csv", corpus_to_csv(d.gen_eval)}},
              digest, extra);
  }
  d.human = lexicon_from_corpus(d.full, 0);
  d.vocab = Vocabulary::FromCorpus(d.train);
  d.universe_test = chip_universe(d.test);
  d.universe_eval = chip_universe(d.gen_eval);
  if (cfg.universe == UniverseMode::kDenseGrid) {
    const auto grid = dense_grid_universe(cfg.grid_step);
    for (auto* u : {&d.universe_test, &d.universe_eval}) {
      std::vector<ColorChip> merged;
      std::set_union(u->begin(), u->end(), grid.begin(), grid.end(), std::back_inserter(merged));
      *u = std::move(merged);
    }
  }
  return d;
}

ConditionReport human_reference(const SharedData& data, const ExperimentConfig& cfg,
                                std::ostream* out) {
  Log log(out);
  ConditionReport r;
  r.phase = kPhaseHuman;
  r.seeds = {0};
  r.chip_grouping = GroupingName(cfg.chip_grouping);
  // Ingestion keeps successful games only.
  r.acc_comm = summarize({1.0});
  r.lexical_diversity = summarize({static_cast<double>(lexical_diversity(data.human))});
  r.informativeness =
      summarize({system_informativeness(data.human, cfg.informativeness_scale).value});
  std::vector<ColorChip> universe = chip_universe(data.full);
  if (cfg.universe == UniverseMode::kDenseGrid) {
    const auto grid = dense_grid_universe(cfg.grid_step);
    std::vector<ColorChip> merged;
    std::set_union(universe.begin(), universe.end(), grid.begin(), grid.end(),
                   std::back_inserter(merged));
    universe = std::move(merged);
  }
  r.convexity = summarize({convexity(data.human, universe).value});
  RegressionOptions opts;
  opts.informativeness_scale = cfg.informativeness_scale;
  opts.chip_grouping = cfg.chip_grouping;
  try {
    FillBeta(r, fit_context_regression(data.human, opts));
  } catch (const std::exception& e) {
    log("human regression failed: {}", e.what());
  }
  return r;
}

std::vector<ConditionReport> aggregate(const ExperimentConfig& cfg, const fs::path& run_dir,
                                       const SharedData& data, std::ostream* out) {
  Log log(out);
  std::vector<ConditionReport> reports;
  std::vector<CellMetrics> all_cells;
  auto collect = [&](auto dir_of) {
    std::vector<CellMetrics> cells;
    std::vector<Lexicon> logs;
    for (auto seed : cfg.seeds) {
      const fs::path dir = dir_of(seed);
      if (!fs::exists(dir / "metrics.csv") || !fs::exists(dir / "trial_log.csv")) continue;
      for (auto& m : parse_cell_metrics_csv(dir / "metrics.csv")) cells.push_back(std::move(m));
      logs.push_back(load_trial_log(dir / "trial_log.csv"));
    }
    all_cells.insert(all_cells.end(), cells.begin(), cells.end());
    return std::make_pair(cells, logs);
  };
  for (auto n : cfg.upsampling_grid) {
    auto [cells, logs] = collect([&](std::uint64_t s) { return SlDir(run_dir, n, s); });
    if (!cells.empty())
      reports.push_back(MakeRow(std::string(kPhaseSl), std::nullopt, n, cells, logs, cfg, log));
  }
  for (int l : cfg.listener_grid) {
    for (auto n : cfg.upsampling_grid) {
      auto [cells, logs] = collect([&](std::uint64_t s) { return RlDir(run_dir, l, n, s); });
      if (!cells.empty())
        reports.push_back(MakeRow(std::string(kPhaseRl), l, n, cells, logs, cfg, log));
    }
  }
  reports.push_back(human_reference(data, cfg, out));
  WriteFileAtomic(run_dir / "per_seed.csv", cell_metrics_csv(all_cells));
  WriteFileAtomic(run_dir / "report.csv", report_csv(reports));
  WriteFileAtomic(run_dir / "report.txt", render_report(reports));
  return reports;
}

MatrixResult run_matrix(const ExperimentConfig& cfg, Phase phase, bool resume, std::ostream* out) {
  cfg.Validate();
  Log log(out);
  MatrixResult res;
  const std::string digest = run_digest(cfg);
  res.run_dir = cfg.out_dir / digest;
  fs::create_directories(res.run_dir);
  WriteFileAtomic(res.run_dir / "config.txt", cfg.CanonicalText());
  const SharedData data = prepare_data(cfg, res.run_dir, out);
  Context cx{cfg, data, res.run_dir, digest, log};

  const int max_listeners = *std::max_element(cfg.listener_grid.begin(), cfg.listener_grid.end());
  std::atomic<std::size_t> computed{0}, reused{0};
  if (phase != Phase::kRl) {
    std::vector<std::pair<std::int64_t, std::uint64_t>> tasks;
    for (auto n : cfg.upsampling_grid)
      for (auto s : cfg.seeds) tasks.emplace_back(n, s);
    const int needed = phase == Phase::kSl ? 1 : max_listeners;
    RunParallel(tasks.size(), cfg.workers, [&](std::size_t i) {
      (SlTask(cx, tasks[i].first, tasks[i].second, needed, resume) ? computed : reused)++;
    });
  }
  if (phase != Phase::kSl) {
    struct T {
      int l;
      std::int64_t n;
      std::uint64_t s;
    };
    std::vector<T> tasks;
    for (int l : cfg.listener_grid)
      for (auto n : cfg.upsampling_grid)
        for (auto s : cfg.seeds) tasks.push_back({l, n, s});
    RunParallel(tasks.size(), cfg.workers, [&](std::size_t i) {
      (RlTask(cx, tasks[i].l, tasks[i].n, tasks[i].s, resume) ? computed : reused)++;
    });
  }
  res.computed_cells = computed;
  res.reused_cells = reused;
  log("cells: {} computed, {} reused", res.computed_cells, res.reused_cells);
  res.reports = aggregate(cfg, res.run_dir, data, out);
  return res;
}

MatrixResult evaluate_matrix(const ExperimentConfig& cfg, std::ostream* out) {
  cfg.Validate();
  Log log(out);
  MatrixResult res;
  const std::string digest = run_digest(cfg);
  res.run_dir = cfg.out_dir / digest;
  if (!fs::exists(res.run_dir))
    throw std::runtime_error(fmt::format("no run directory {}", res.run_dir.string()));
  const SharedData data = prepare_data(cfg, res.run_dir, out);
  Context cx{cfg, data, res.run_dir, digest, log};
  auto refresh = [&](const fs::path& dir, const Evaluation& ev, json stamp) {
    Artifacts files;
    for (auto& [name, hash] : stamp["files"].items()) {
      if (name == "metrics.csv" || name == "trial_log.csv") continue;
      files.emplace_back(name, ReadFile(dir / name));
    }
    files.emplace_back("metrics.csv", cell_metrics_csv({ev.metrics}));
    files.emplace_back("trial_log.csv", trial_log_csv(ev.lexicon));
    stamp.erase("files");
    stamp.erase("digest");
    WriteCell(dir, files, digest, stamp);
  };
  for (auto n : cfg.upsampling_grid) {
    for (auto s : cfg.seeds) {
      const fs::path dir = SlDir(res.run_dir, n, s);
      json stamp;
      if (CheckCell(dir, digest, &stamp) != StampState::kValid) continue;
      refresh(dir,
              EvaluateSl(cx, load_speaker(dir / "speaker.json"),
                         load_listener(dir / ListenerFile(0)), n, s),
              stamp);
      ++res.computed_cells;
    }
  }
  for (int l : cfg.listener_grid) {
    for (auto n : cfg.upsampling_grid) {
      for (auto s : cfg.seeds) {
        const fs::path dir = RlDir(res.run_dir, l, n, s);
        json stamp;
        if (CheckCell(dir, digest, &stamp) != StampState::kValid) continue;
        std::vector<Listener> ls;
        for (int k = 0; k < l; ++k) ls.push_back(load_listener(dir / "checkpoints" / ListenerFile(k)));
        refresh(dir, EvaluateRl(cx, load_speaker(dir / "checkpoints/speaker.json"), ls, l, n, s),
                stamp);
        ++res.computed_cells;
      }
    }
  }
  log("evaluated {} cells", res.computed_cells);
  res.reports = aggregate(cfg, res.run_dir, data, out);
  return res;
}

// ---- report ---------------------------------------------------------------

namespace {

const std::vector<std::string>& ReportHeader() {
  static const std::vector<std::string> h = {
      "phase",          "listeners",         "upsampling",          "acc_comm",
      "beta",           "lexical_diversity", "informativeness",     "convexity",
      "drift",          "acc_comm_se",       "beta_se",             "beta_p",
      "lexical_diversity_se", "informativeness_se", "convexity_se", "drift_se",
      "seeds",          "chip_grouping"};
  return h;
}

std::string Mean(const std::optional<MetricSummary>& s) {
  return s ? real_to_string(s->mean) : "";
}
std::string Se(const std::optional<MetricSummary>& s) {
  return s ? real_to_string(s->standard_error) : "";
}

}  // namespace

std::string report_csv(const std::vector<ConditionReport>& reports) {
  std::string out = JoinCsv(ReportHeader()) + "\n";
  for (const auto& r : reports) {
    std::vector<std::string> seeds;
    for (auto s : r.seeds) seeds.push_back(std::to_string(s));
    out += JoinCsv({r.phase, r.listeners ? std::to_string(*r.listeners) : "",
                    r.upsampling ? std::to_string(*r.upsampling) : "", Mean(r.acc_comm),
                    OptReal(r.beta), Mean(r.lexical_diversity), Mean(r.informativeness),
                    Mean(r.convexity), Mean(r.drift), Se(r.acc_comm), OptReal(r.beta_se),
                    OptReal(r.beta_p), Se(r.lexical_diversity), Se(r.informativeness),
                    Se(r.convexity), Se(r.drift), fmt::format("{}", fmt::join(seeds, ";")),
                    r.chip_grouping});
    out += '\n';
  }
  return out;
}

std::vector<ConditionReport> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("report CSV is empty");
  if (ParseCsvLine(line) != ReportHeader()) throw std::runtime_error("unexpected report header");
  std::vector<ConditionReport> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = ParseCsvLine(line);
    if (f.size() != ReportHeader().size())
      throw std::runtime_error(fmt::format("report line {}: wrong field count", lineno));
    ConditionReport r;
    r.phase = f[0];
    if (!f[1].empty()) r.listeners = std::stoi(f[1]);
    if (!f[2].empty()) r.upsampling = std::stoll(f[2]);
    auto summary = [&](std::size_t mean_col, std::size_t se_col) -> std::optional<MetricSummary> {
      if (f[mean_col].empty()) return std::nullopt;
      MetricSummary s;
      s.mean = real_from_string(f[mean_col]);
      s.standard_error = f[se_col].empty() ? 0 : real_from_string(f[se_col]);
      return s;
    };
    r.acc_comm = summary(3, 9);
    r.beta = ParseOptReal(f[4]);
    r.lexical_diversity = summary(5, 12);
    r.informativeness = summary(6, 13);
    r.convexity = summary(7, 14);
    r.drift = summary(8, 15);
    r.beta_se = ParseOptReal(f[10]);
    r.beta_p = ParseOptReal(f[11]);
    std::string_view seeds = f[16];
    while (!seeds.empty()) {
      const auto semi = seeds.find(';');
      r.seeds.push_back(std::stoull(std::string(seeds.substr(0, semi))));
      if (semi == std::string_view::npos) break;
      seeds.remove_prefix(semi + 1);
    }
    r.chip_grouping = f[17];
    out.push_back(std::move(r));
  }
  return out;
}

std::string render_report(const std::vector<ConditionReport>& reports) {
  std::vector<std::vector<std::string>> rows = {{"Conditions", "Listeners", "Upsampling",
                                                 "Acc_comm", "beta(E_ctx)", "|W|", "I_L",
                                                 "Convexity", "D_L"}};
  auto num = [](const std::optional<MetricSummary>& s, int digits) {
    return s ? fmt::format("{:.{}f}", s->mean, digits) : std::string("--");
  };
  for (const auto& r : reports) {
    std::string listeners = "--";
    if (r.listeners) {
      listeners = std::to_string(*r.listeners);
    } else if (r.phase == kPhaseSl) {
      listeners = "N/A";
    }
    std::string beta = "--";
    if (r.beta) beta = fmt::format("{:.3f}", *r.beta);
    rows.push_back({RowName(r), listeners, r.upsampling ? std::to_string(*r.upsampling) : "--",
                    num(r.acc_comm, 2), beta, num(r.lexical_diversity, 1),
                    num(r.informativeness, 2), num(r.convexity, 2), num(r.drift, 2)});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string line;
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c == 0) {
        line += fmt::format("{:<{}}", rows[i][c], width[c]);
      } else {
        line += fmt::format("  {:>{}}", rows[i][c], width[c]);
      }
    }
    out += line + "\n";
    if (i == 0) out += std::string(line.size(), '-') + "\n";
  }
  return out;
}

// ---- trends ---------------------------------------------------------------

namespace {

const ConditionReport* Find(const std::vector<ConditionReport>& rs, std::string_view phase,
                            std::optional<int> l, std::int64_t n) {
  for (const auto& r : rs)
    if (r.phase == phase && r.listeners == l && r.upsampling == n) return &r;
  return nullptr;
}

struct Accumulator {
  bool any = false;
  bool ok = true;
  double margin = std::numeric_limits<double>::infinity();
  std::vector<std::string> notes;

  void Add(double slack, std::string note) {
    any = true;
    if (!(slack > 0)) ok = false;
    margin = std::min(margin, slack);
    notes.push_back(std::move(note));
  }
  void Finish(TrendCheck& c) const {
    if (!any) {
      c.status = TrendStatus::kNotEvaluable;
      c.detail = "required cells missing";
      return;
    }
    c.status = ok ? TrendStatus::kPass : TrendStatus::kFail;
    c.margin = margin;
    c.detail = fmt::format("{}", fmt::join(notes, "; "));
  }
};

// Consecutive strict change over N within one setting. sign = +1 for
// increase, -1 for decrease.
void Monotone(const std::vector<ConditionReport>& rs, std::string_view phase,
              std::optional<int> l, const std::vector<std::int64_t>& ns,
              std::optional<MetricSummary> ConditionReport::*metric, double sign,
              const std::string& label, Accumulator& acc) {
  std::vector<std::pair<std::int64_t, double>> pts;
  for (auto n : ns) {
    const auto* r = Find(rs, phase, l, n);
    if (r && (r->*metric)) pts.emplace_back(n, (r->*metric)->mean);
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    acc.Add(sign * (pts[i].second - pts[i - 1].second),
            fmt::format("{} N {}->{}: {:.4g} -> {:.4g}", label, pts[i - 1].first, pts[i].first,
                        pts[i - 1].second, pts[i].second));
  }
}

}  // namespace

TrendSummary check_trends(const std::vector<ConditionReport>& rs) {
  std::set<int> ls;
  std::set<std::int64_t> n_set;
  for (const auto& r : rs) {
    if (r.phase == kPhaseRl && r.listeners) ls.insert(*r.listeners);
    if ((r.phase == kPhaseRl || r.phase == kPhaseSl) && r.upsampling) n_set.insert(*r.upsampling);
  }
  const std::vector<std::int64_t> ns(n_set.begin(), n_set.end());
  const std::optional<int> few = ls.size() >= 2 ? std::optional<int>(*ls.begin()) : std::nullopt;
  const std::optional<int> many = ls.size() >= 2 ? std::optional<int>(*ls.rbegin()) : std::nullopt;

  TrendSummary out;
  {
    TrendCheck c{'a', "|W| strictly increases with upsampling within each listener setting", TrendStatus::kNotEvaluable, std::nullopt, {}};
    Accumulator acc;
    Monotone(rs, kPhaseSl, std::nullopt, ns, &ConditionReport::lexical_diversity, 1, "SL", acc);
    for (int l : ls)
      Monotone(rs, kPhaseRl, l, ns, &ConditionReport::lexical_diversity, 1,
               fmt::format("L={}", l), acc);
    acc.Finish(c);
    out.checks.push_back(c);
  }
  {
    TrendCheck c{'b', "|W| and I_L are lower with many listeners than with few, for each N", TrendStatus::kNotEvaluable, std::nullopt, {}};
    Accumulator acc;
    if (few && many) {
      for (auto n : ns) {
        const auto* a = Find(rs, kPhaseRl, few, n);
        const auto* b = Find(rs, kPhaseRl, many, n);
        if (!a || !b) continue;
        if (a->lexical_diversity && b->lexical_diversity)
          acc.Add(a->lexical_diversity->mean - b->lexical_diversity->mean,
                  fmt::format("|W| N={}: L={} {:.4g} vs L={} {:.4g}", n, *few,
                              a->lexical_diversity->mean, *many, b->lexical_diversity->mean));
        if (a->informativeness && b->informativeness)
          acc.Add(a->informativeness->mean - b->informativeness->mean,
                  fmt::format("I_L N={}: L={} {:.4g} vs L={} {:.4g}", n, *few,
                              a->informativeness->mean, *many, b->informativeness->mean));
      }
    }
    acc.Finish(c);
    out.checks.push_back(c);
  }
  {
    TrendCheck c{'c', "convexity is higher with many listeners than with few, for N in {0, 100}", TrendStatus::kNotEvaluable, std::nullopt, {}};
    Accumulator acc;
    if (few && many) {
      for (std::int64_t n : {0, 100}) {
        const auto* a = Find(rs, kPhaseRl, few, n);
        const auto* b = Find(rs, kPhaseRl, many, n);
        if (!a || !b || !a->convexity || !b->convexity) continue;
        acc.Add(b->convexity->mean - a->convexity->mean,
                fmt::format("N={}: L={} {:.4g} vs L={} {:.4g}", n, *few, a->convexity->mean,
                            *many, b->convexity->mean));
      }
    }
    acc.Finish(c);
    out.checks.push_back(c);
  }
  {
    TrendCheck c{'d', "D_L strictly decreases with upsampling within each SL+RL listener setting", TrendStatus::kNotEvaluable, std::nullopt, {}};
    Accumulator acc;
    for (int l : ls)
      Monotone(rs, kPhaseRl, l, ns, &ConditionReport::drift, -1, fmt::format("L={}", l), acc);
    acc.Finish(c);
    out.checks.push_back(c);
  }
  {
    TrendCheck c{'e', "beta(E_ctx) < 0 with p < 0.001 in every condition", TrendStatus::kNotEvaluable, std::nullopt, {}};
    Accumulator acc;
    for (const auto& r : rs) {
      if (r.phase != kPhaseSl && r.phase != kPhaseRl) continue;
      const std::string name = fmt::format("{} L={} N={}", RowName(r),
                                           r.listeners ? std::to_string(*r.listeners) : "-",
                                           r.upsampling ? std::to_string(*r.upsampling) : "-");
      if (!r.beta || !r.beta_p) {
        acc.Add(-std::numeric_limits<double>::infinity(), name + ": no fit");
        continue;
      }
      const double slack = *r.beta_p < 0.001 ? -*r.beta : -std::abs(*r.beta);
      acc.Add(slack, fmt::format("{}: beta {:.4g} p {:.3g}", name, *r.beta, *r.beta_p));
    }
    acc.Finish(c);
    out.checks.push_back(c);
  }
  for (const auto& c : out.checks)
    if (c.status == TrendStatus::kPass) ++out.passed;
  out.ok = out.passed >= 4;
  return out;
}

std::string render_trends(const TrendSummary& s) {
  std::string out;
  for (const auto& c : s.checks) {
    const char* status = c.status == TrendStatus::kPass   ? "PASS"
                         : c.status == TrendStatus::kFail ? "FAIL"
                                                          : "NOT EVALUABLE";
    out += fmt::format("({}) {}: {}", c.id, status, c.claim);
    if (c.margin) out += fmt::format(" [margin {:.4g}]", *c.margin);
    out += "\n";
    if (!c.detail.empty()) out += "    " + c.detail + "\n";
  }
  out += fmt::format("{} of {} trend families hold: {}\n", s.passed, s.checks.size(),
                     s.ok ? "PASS" : "FAIL");
  return out;
}

// ---- denotations ----------------------------------------------------------

std::vector<fs::path> export_denotations(const Lexicon& lex, const std::vector<std::string>& words,
                                         const fs::path& dir, const std::string& prefix) {
  for (const auto& w : words) {
    auto it = lex.entries.find(w);
    if (it == lex.entries.end() || it->second.empty()) {
      std::vector<std::string> avail;
      for (const auto& [k, v] : lex.entries)
        if (!v.empty()) avail.push_back(k);
      throw std::invalid_argument(fmt::format("unknown word '{}'; available: {}", w,
                                              fmt::join(avail, ", ")));
    }
  }
  std::vector<fs::path> out;
  for (const auto& w : words) {
    std::map<ColorChip, int> counts;
    for (const auto& c : lex.entries.at(w)) ++counts[c];
    std::string text = "L,a,b,count\n";
    for (const auto& [c, k] : counts)
      text += fmt::format("{:.1f},{:.1f},{:.1f},{}\n", c.L(), c.a(), c.b(), k);
    std::string safe = w;
    for (char& ch : safe)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
    const fs::path p = dir / (prefix + safe + ".csv");
    WriteFileAtomic(p, text);
    out.push_back(p);
  }
  return out;
}

}  // namespace colorlex
