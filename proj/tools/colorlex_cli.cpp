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

// colorlex command line. Exit codes: 0 success, 1 error, 2 failed trend
// checks.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "colorlex/config.hpp"
#include "colorlex/csv.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/experiment.hpp"
#include "colorlex/lexicon.hpp"

namespace fs = std::filesystem;
using namespace colorlex;

namespace {

constexpr int kExitError = 1;
constexpr int kExitTrendsFailed = 2;

// Flags shared by the subcommands that operate on an experiment.
struct ExperimentFlags {
  std::string config;
  std::string colors;
  std::string seeds;
  std::string listeners;
  std::string upsampling;
  std::string out;
  int workers = 0;
  std::vector<std::string> overrides;

  void Register(CLI::App* app) {
    app->add_option("--config", config, "key = value config file");
    app->add_option("--colors", colors, "human corpus CSV (overrides colors_csv)");
    app->add_option("--seeds", seeds, "seed list, e.g. 0,1,2 or 0-9");
    app->add_option("--listeners", listeners, "listener grid, e.g. 1,5,30");
    app->add_option("--upsampling", upsampling, "upsampling grid, e.g. 0,100,200");
    app->add_option("--out", out, "output root directory");
    app->add_option("--workers", workers, "parallel cells");
    app->add_option("--set", overrides, "extra key=value override (repeatable)");
  }

  ExperimentConfig Resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (!colors.empty()) cfg.colors_csv = colors;
    if (!seeds.empty()) cfg.Set("seeds", seeds);
    if (!listeners.empty()) cfg.Set("listeners", listeners);
    if (!upsampling.empty()) cfg.Set("upsampling", upsampling);
    if (!out.empty()) cfg.out_dir = out;
    if (workers > 0) cfg.workers = workers;
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(fmt::format("--set expects key=value, got '{}'", kv));
      cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cfg.colors_csv.empty())
      throw std::invalid_argument("no human corpus given (colors_csv or --colors)");
    cfg.Validate();
    return cfg;
  }
};

SchemaMode ParseSchemaOrThrow(const std::string& s) {
  const auto m = ParseSchemaMode(s);
  if (!m) throw std::invalid_argument(fmt::format("unknown schema '{}'", s));
  return *m;
}

std::vector<ConditionReport> LoadReports(const std::string& csv, const ExperimentFlags& flags) {
  if (!csv.empty()) return parse_report_csv(ReadFile(csv));
  const ExperimentConfig cfg = flags.Resolve();
  const fs::path run_dir = cfg.out_dir / run_digest(cfg);
  const SharedData data = prepare_data(cfg, run_dir, &std::cerr);
  return aggregate(cfg, run_dir, data, &std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emergent color-naming lexicons: training, evaluation and reporting"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "read a human corpus and write the canonical CSV");
  std::string ingest_in, ingest_out, ingest_schema = "hsl";
  ingest->add_option("--colors", ingest_in, "input CSV")->required();
  ingest->add_option("--schema", ingest_schema, "hsl or cielab");
  ingest->add_option("--out", ingest_out, "canonical corpus CSV to write");

  // sample-triplets
  auto* sample = app.add_subcommand("sample-triplets", "generate unlabelled triplets");
  std::size_t sample_n = 12400;
  std::uint64_t sample_seed = 0;
  double close_max = 20, far_min = 50;
  std::string mix_text, calibrate_against, sample_schema = "hsl", sample_out;
  sample->add_option("--n", sample_n, "number of triplets");
  sample->add_option("--seed", sample_seed, "generation seed");
  sample->add_option("--close-max", close_max, "close distractors below this distance");
  sample->add_option("--far-min", far_min, "far distractors above this distance");
  sample->add_option("--mix", mix_text, "far,split,close proportions (default: human)");
  sample->add_option("--calibrate-against", calibrate_against,
                     "human corpus CSV to calibrate thresholds and mix against");
  sample->add_option("--schema", sample_schema, "schema of --calibrate-against");
  sample->add_option("--out", sample_out, "output CSV")->required();

  // train / evaluate / report / check-trends
  ExperimentFlags train_flags, eval_flags, report_flags, trend_flags;
  auto* train = app.add_subcommand("train", "run the experiment matrix");
  train_flags.Register(train);
  std::string phase = "both";
  bool resume = false;
  train->add_option("--phase", phase, "sl, rl or both")
      ->check(CLI::IsMember({"sl", "rl", "both"}));
  train->add_flag("--resume", resume, "reuse completed cells");

  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate trained cells and aggregate");
  eval_flags.Register(evaluate);

  auto* report = app.add_subcommand("report", "render the aggregate table");
  report_flags.Register(report);
  std::string report_in;
  report->add_option("--csv", report_in, "existing report.csv to render");

  auto* trends = app.add_subcommand("check-trends", "evaluate the directional claims");
  trend_flags.Register(trends);
  std::string trends_in;
  trends->add_option("--csv", trends_in, "existing report.csv");

  // export-denotations
  auto* exp = app.add_subcommand("export-denotations", "per-word chip CSVs for plotting");
  std::string log_path, words_text, export_dir, prefix;
  exp->add_option("--trial-log", log_path, "trial_log.csv of a cell")->required();
  exp->add_option("--words", words_text, "comma separated words")->required();
  exp->add_option("--out", export_dir, "output directory")->required();
  exp->add_option("--prefix", prefix, "file name prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*ingest) {
      const IngestResult r = ingest_colors_csv(ingest_in, ParseSchemaOrThrow(ingest_schema));
      const auto counts = r.corpus.ConditionCounts();
      std::cout << fmt::format(
          "rows {}\nkept {}\nskipped: multi_word {} empty_word {} unsuccessful {} degenerate {}\n"
          "far {} split {} close {}\nwords {}\n",
          r.stats.rows, r.stats.kept, r.stats.multi_word, r.stats.empty_word,
          r.stats.unsuccessful, r.stats.degenerate, counts[0], counts[1], counts[2],
          r.corpus.word_counts.size());
      if (!ingest_out.empty()) save_corpus(r.corpus, ingest_out);
      return 0;
    }
    if (*sample) {
      TripletThresholds th{close_max, far_min};
      std::array<double, 3> mix = kHumanConditionMix;
      if (!calibrate_against.empty()) {
        const Corpus ref =
            ingest_colors_csv(calibrate_against, ParseSchemaOrThrow(sample_schema)).corpus;
        const CalibrationResult cal = calibrate_thresholds(ref, sample_seed);
        th = cal.thresholds;
        std::cerr << fmt::format("calibrated close_max {} far_min {} ks {:.3f} {:.3f} {:.3f}\n",
                                 th.close_max, th.far_min, cal.ks[0], cal.ks[1], cal.ks[2]);
        const auto counts = ref.ConditionCounts();
        for (std::size_t k = 0; k < 3; ++k)
          mix[k] = static_cast<double>(counts[k]) / static_cast<double>(ref.size());
      }
      if (!mix_text.empty()) {
        std::vector<double> v;
        std::string item;
        for (char ch : mix_text + ",") {
          if (ch == ',') {
            v.push_back(std::stod(item));
            item.clear();
          } else {
            item += ch;
          }
        }
        if (v.size() != 3) throw std::invalid_argument("--mix needs three values");
        mix = {v[0], v[1], v[2]};
      }
      save_corpus(generate_triplets(sample_n, mix, th, sample_seed), sample_out);
      return 0;
    }
    if (*train) {
      const ExperimentConfig cfg = train_flags.Resolve();
      const Phase p = phase == "sl" ? Phase::kSl : phase == "rl" ? Phase::kRl : Phase::kBoth;
      const MatrixResult res = run_matrix(cfg, p, resume, &std::cerr);
      std::cout << render_report(res.reports);
      std::cout << "results in " << res.run_dir.string() << "\n";
      return 0;
    }
    if (*evaluate) {
      const MatrixResult res = evaluate_matrix(eval_flags.Resolve(), &std::cerr);
      std::cout << render_report(res.reports);
      return 0;
    }
    if (*report) {
      std::cout << render_report(LoadReports(report_in, report_flags));
      return 0;
    }
    if (*trends) {
      const TrendSummary s = check_trends(LoadReports(trends_in, trend_flags));
      std::cout << render_trends(s);
      return s.ok ? 0 : kExitTrendsFailed;
    }
    if (*exp) {
      std::vector<std::string> words;
      std::string item;
      for (char ch : words_text + ",") {
        if (ch == ',') {
          if (!item.empty()) words.push_back(item);
          item.clear();
        } else {
          item += ch;
        }
      }
      for (const auto& p : export_denotations(load_trial_log(log_path), words, export_dir, prefix))
        std::cout << p.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
