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

// Acceptance runner. Prints one PASS/FAIL/BLOCKED line per criterion.
//
//   acceptance --properties        criterion 6 (always runnable)
//   acceptance --corpus-criteria   criteria 1-5; needs the human corpus via
//                                  --corpus PATH or COLORLEX_COLORS_CSV and
//                                  exits 77 (skip) without it
//
// Optional environment: COLORLEX_COLORS_SCHEMA (hsl|cielab, default hsl),
// COLORLEX_ACCEPTANCE_OUT (artifact root, default ./acceptance_out),
// COLORLEX_ACCEPTANCE_WORKERS (default 1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "colorlex/csv.hpp"
#include "colorlex/experiment.hpp"
#include "colorlex/geometry.hpp"
#include "colorlex/metrics.hpp"
#include "colorlex/neuralnet.hpp"
#include "support.hpp"

using namespace colorlex;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

void Print(int id, const std::string& title, const Outcome& o) {
  std::cout << fmt::format("[{}] criterion {}: {}\n", o.pass ? "PASS" : "FAIL", id, title);
  for (const auto& d : o.details) std::cout << "    " << d << "\n";
}

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- criterion 6 ------------------------------------------------------------

bool GradientCheck(std::string& note) {
  std::mt19937_64 rng(6);
  const std::array<nn::Index, 3> sizes = {9, 16, 7};
  auto m = nn::Mlp<double>::Create(std::span<const nn::Index>(sizes), nn::Activation::kRelu,
                                   nn::Activation::kIdentity, rng);
  for (auto& l : m.layers()) l.bias.setConstant(0.05);
  std::normal_distribution<double> z(0, 1);
  nn::Matrix<double> x(9, 5), w(7, 5);
  for (nn::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
  for (nn::Index i = 0; i < w.size(); ++i) w.data()[i] = z(rng);
  auto loss = [&] { return nn::forward(m, x).cwiseProduct(w).sum(); };
  auto g = nn::backward(m, nn::forward_trace(m, x), w);
  auto params = m.parameters();
  auto grads = g.parameters();
  double worst = 0;
  const double h = 1e-4;
  for (std::size_t b = 0; b < params.size(); ++b)
    for (nn::Index i = 0; i < params[b].size(); ++i) {
      const double keep = params[b](i);
      params[b](i) = keep + h;
      const double up = loss();
      params[b](i) = keep - h;
      const double down = loss();
      params[b](i) = keep;
      const double num = (up - down) / (2 * h), ana = grads[b](i);
      worst = std::max(worst, std::abs(num - ana) /
                                  std::max({std::abs(num), std::abs(ana), 1e-6}));
    }
  note = fmt::format("gradient check: worst relative error {:.2e} (limit 1e-3)", worst);
  return worst <= 1e-3;
}

bool HullOracles(std::string& note) {
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<int> L(200, 600), ab(-200, 200), size(4, 30), flat(0, 4);
  std::uniform_int_distribution<int> qL(150, 650), qab(-250, 250);
  int vertex_ok = 0, facet_ok = 0, facet_total = 0, query_ok = 0, queries = 0;
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<ColorChip> pts;
    const int n = size(rng);
    const int shape = inst < 70 ? 0 : flat(rng);
    for (int i = 0; i < n; ++i) {
      const int a = ab(rng), b = ab(rng), l = L(rng);
      switch (shape) {
        case 1: pts.push_back(ColorChip::FromTenths(400, a, b)); break;       // coplanar
        case 2: pts.push_back(ColorChip::FromTenths(400 + a / 4, a, -a)); break;  // collinear
        case 3: pts.push_back(ColorChip::FromTenths(400, 0, 0)); break;       // point
        default: pts.push_back(ColorChip::FromTenths(l, a, b));
      }
    }
    const Hull h = convex_hull(pts);
    vertex_ok += h.vertices == testing::BruteVertices(pts);
    if (h.dimension == 3) {
      ++facet_total;
      const auto want = testing::Dedupe(testing::BruteFacetNormals(pts));
      std::vector<Eigen::Vector3d> got;
      for (const auto& f : h.facets) got.push_back(f.normal);
      got = testing::Dedupe(got);
      bool same = got.size() == want.size();
      for (const auto& w : want)
        same = same && std::any_of(got.begin(), got.end(), [&](const Eigen::Vector3d& m) {
                 return (m - w).norm() < 1e-9;
               });
      facet_ok += same;
    }
    const auto u = testing::Vecs(testing::Unique(pts));
    for (int q = 0; q < 10; ++q) {
      const ColorChip c = q % 3 == 0 ? pts[static_cast<std::size_t>(q) % pts.size()]
                                     : ColorChip::FromTenths(qL(rng), qab(rng), qab(rng));
      query_ok += contains(h, c) == testing::InConvexHullLp(u, c.vec());
      ++queries;
    }
  }
  note = fmt::format(
      "hull: vertices agree {}/100, facets agree {}/{}, LP containment agree {}/{}", vertex_ok,
      facet_ok, facet_total, query_ok, queries);
  return vertex_ok == 100 && facet_ok == facet_total && query_ok == queries;
}

bool SpreadOracle(std::string& note) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> L(0, 1000), ab(-1000, 1000), size(2, 200);
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    std::vector<ColorChip> chips;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) chips.push_back(ColorChip::FromTenths(L(rng), ab(rng), ab(rng)));
    const auto u = testing::Unique(chips);
    double sum = 0, pairs = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j) {
          sum += (u[i].vec() - u[j].vec()).norm();
          pairs += 1;
        }
    worst = std::max(worst, std::abs(*word_spread(chips).spread - sum / pairs));
  }
  note = fmt::format("spread: worst deviation from double loop {:.2e} (limit 1e-9)", worst);
  return worst <= 1e-9;
}

bool RegressionRecovery(std::string& note) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> ease(0, 60);
  std::vector<double> u(10), v(200);
  for (auto& x : u) x = 0.05 * z(rng);
  for (auto& x : v) x = 0.1 * z(rng);
  std::vector<RegressionObservation> obs;
  for (std::size_t i = 0; i < 2000; ++i) {
    const double x = ease(rng);
    const std::size_t s = i % 10, c = (i / 10) % 200;
    obs.push_back({0.5 - 0.01 * x + u[s] + v[c] + 0.1 * z(rng), x, s, c});
  }
  const RegressionResult r = fit_mixed_model(obs, 10, 200);
  note = fmt::format("regression: beta {:.5f} for true -0.01 (tolerance 0.0015)", r.beta);
  return std::abs(r.beta + 0.01) <= 0.0015;
}

bool SoftmaxNormalization(std::string& note) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0, 30);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    nn::Vector<double> v(40);
    for (nn::Index i = 0; i < v.size(); ++i) v(i) = z(rng);
    if (k % 10 == 0) v(0) = 1e4;
    worst = std::max(worst, std::abs(nn::softmax(v).sum() - 1.0));
  }
  note = fmt::format("softmax: worst |sum - 1| {:.2e} (limit 1e-9)", worst);
  return worst <= 1e-9;
}

bool RunDeterminism(std::string& note) {
  testing::ScratchDir dir("acceptance_determinism");
  save_corpus(testing::SyntheticHumanCorpus(300, 12), dir.path() / "corpus.csv");
  auto run = [&](const std::string& sub) {
    ExperimentConfig cfg;
    cfg.colors_csv = dir.path() / "corpus.csv";
    cfg.schema_mode = SchemaMode::kCielab;
    cfg.out_dir = dir.path() / sub;
    cfg.seeds = {3};
    cfg.listener_grid = {2};
    cfg.upsampling_grid = {20};
    cfg.test_size = 60;
    cfg.gen_train_size = 100;
    cfg.gen_eval_size = 100;
    cfg.calibrate_thresholds = false;
    cfg.agent = AgentConfig{8, 8, true};
    cfg.sl.epochs = 2;
    cfg.rl.epochs = 2;
    const MatrixResult r = run_matrix(cfg, Phase::kBoth, false);
    return ReadFile(r.run_dir / "report.csv") + ReadFile(r.run_dir / "per_seed.csv") +
           ReadFile(r.run_dir / "2-20" / "3" / "checkpoints" / "speaker.json") +
           ReadFile(r.run_dir / "2-20" / "3" / "checkpoints" / "listener_1.json");
  };
  const bool same = run("a") == run("b");
  note = fmt::format("determinism: two fixed-seed runs {}", same ? "bit-identical" : "differ");
  return same;
}

bool UpsampleProperties(std::string& note) {
  const Corpus c = testing::SyntheticHumanCorpus(1500, 14);
  bool ok = true;
  for (std::int64_t n : {0, 100, 200}) {
    const Corpus up = upsample(c, {n});
    std::map<std::string, std::int64_t> counts;
    for (const auto& t : up.trials) ++counts[*t.human_word];
    for (const auto& [w, k] : c.word_counts) ok = ok && counts[w] == std::max(k, n);
    ok = ok && upsample(up, {n}).trials == up.trials;
  }
  note = fmt::format("upsampling: exact targets and idempotence {}", ok ? "hold" : "violated");
  return ok;
}

int RunProperties() {
  const auto t0 = Clock::now();
  Outcome o;
  o.pass = true;
  const std::vector<std::function<bool(std::string&)>> checks = {
      GradientCheck,       HullOracles,    SpreadOracle,      RegressionRecovery,
      SoftmaxNormalization, RunDeterminism, UpsampleProperties};
  for (const auto& check : checks) {
    std::string note;
    bool ok = false;
    try {
      ok = check(note);
    } catch (const std::exception& e) {
      note += std::string(" exception: ") + e.what();
    }
    o.pass = o.pass && ok;
    o.details.push_back(fmt::format("{} {}", ok ? "ok  " : "FAIL", note));
  }
  const double secs = Seconds(t0);
  o.details.push_back(fmt::format("runtime {:.1f} s (limit 60 s)", secs));
  o.pass = o.pass && secs < 60;
  Print(6, "property suites", o);
  return o.pass ? 0 : 1;
}

// ---- criteria 1-5 -----------------------------------------------------------

std::string Env(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

const ConditionReport* FindRow(const std::vector<ConditionReport>& rs, std::string_view phase,
                               std::optional<int> l, std::int64_t n) {
  for (const auto& r : rs)
    if (r.phase == phase && r.listeners == l && r.upsampling == n) return &r;
  return nullptr;
}

int RunCorpus(const std::string& corpus_arg) {
  const std::string corpus = corpus_arg.empty() ? Env("COLORLEX_COLORS_CSV") : corpus_arg;
  const char* titles[] = {"", "human-row metrics", "dataset counts", "SL baseline band",
                          "RL improvement", "trend suite"};
  if (corpus.empty() || !fs::exists(corpus)) {
    for (int i = 1; i <= 5; ++i)
      std::cout << fmt::format(
          "[BLOCKED] criterion {}: {}: human corpus not available (set COLORLEX_COLORS_CSV)\n", i,
          titles[i]);
    return 77;
  }
  const auto schema = ParseSchemaMode(Env("COLORLEX_COLORS_SCHEMA", "hsl"));
  if (!schema) {
    std::cerr << "COLORLEX_COLORS_SCHEMA must be hsl or cielab\n";
    return 1;
  }
  bool all = true;

  ExperimentConfig cfg;
  cfg.colors_csv = corpus;
  cfg.schema_mode = *schema;
  cfg.out_dir = Env("COLORLEX_ACCEPTANCE_OUT", "acceptance_out");
  cfg.workers = std::stoi(Env("COLORLEX_ACCEPTANCE_WORKERS", "1"));
  cfg.seeds = {0, 1, 2};
  cfg.listener_grid = {1, 30};
  cfg.upsampling_grid = {0, 100, 200};

  // 1 and 2 need no training.
  {
    const auto t0 = Clock::now();
    SharedData d;
    const IngestResult ing = ingest_colors_csv(corpus, *schema);
    d.full = ing.corpus;
    d.human = lexicon_from_corpus(d.full, 0);
    const ConditionReport h = human_reference(d, cfg);
    const double secs = Seconds(t0);
    Outcome o;
    const double w = h.lexical_diversity->mean, il = h.informativeness->mean,
                 cv = h.convexity->mean;
    const bool w_ok = w == 49;
    const bool il_ok = std::abs(il - 2.78) <= 0.15;
    const bool cv_ok = std::abs(cv - 0.32) <= 0.05;
    const bool b_ok = h.beta && std::abs(*h.beta + 0.008) <= 0.003 && *h.beta_p < 0.001;
    o.pass = w_ok && il_ok && cv_ok && b_ok && secs < 120;
    o.details.push_back(fmt::format("|W| {} (want 49)", w));
    o.details.push_back(fmt::format("I_L {:.4f} (want 2.78 +- 0.15)", il));
    o.details.push_back(fmt::format("convexity {:.4f} (want 0.32 +- 0.05)", cv));
    o.details.push_back(h.beta ? fmt::format("beta {:.5f} p {:.3g} (want -0.008 +- 0.003, p < 0.001)",
                                             *h.beta, *h.beta_p)
                               : std::string("beta: fit failed"));
    o.details.push_back(fmt::format("runtime {:.1f} s (limit 120 s)", secs));
    Print(1, titles[1], o);
    all = all && o.pass;

    Outcome c;
    const auto counts = d.full.ConditionCounts();
    const auto [train, test] = split_corpus(d.full, cfg.test_size, cfg.data_seed);
    c.pass = d.full.size() == 15434 && counts[0] == 9309 && counts[1] == 3886 &&
             counts[2] == 2239 && train.size() == 12434 && test.size() == 3000;
    c.details.push_back(fmt::format("total {} far {} split {} close {} (want 15434 / 9309 / 3886 / 2239)",
                                    d.full.size(), counts[0], counts[1], counts[2]));
    c.details.push_back(fmt::format("split {} / {} (want 12434 / 3000)", train.size(), test.size()));
    Print(2, titles[2], c);
    all = all && c.pass;
  }

  // 3-5 share one reduced-grid run; completed cells are reused.
  const auto t0 = Clock::now();
  const MatrixResult m = run_matrix(cfg, Phase::kBoth, true, &std::cerr);
  const double per_seed_minutes =
      Seconds(t0) / 60.0 / static_cast<double>(cfg.seeds.size()) /
      static_cast<double>(cfg.upsampling_grid.size());
  const auto& rs = m.reports;
  {
    Outcome o;
    const ConditionReport* sl = FindRow(rs, kPhaseSl, std::nullopt, 0);
    if (!sl) {
      o.details.push_back("SL row for N=0 missing");
    } else {
      const double acc = sl->acc_comm->mean, w = sl->lexical_diversity->mean;
      o.pass = acc >= 0.82 && acc <= 0.92 && w >= 8 && w <= 25 && sl->seeds.size() >= 3;
      o.details.push_back(fmt::format("Acc_comm {:.4f} (want [0.82, 0.92])", acc));
      o.details.push_back(fmt::format("|W| {:.2f} (want [8, 25]) over {} seeds", w, sl->seeds.size()));
    }
    if (m.computed_cells > 0) {
      o.details.push_back(fmt::format("mean wall time per (seed, N) {:.1f} min (limit 10 min)",
                                      per_seed_minutes));
      o.pass = o.pass && per_seed_minutes <= 10;
    } else {
      o.details.push_back("all cells reused; runtime not re-measured");
    }
    Print(3, titles[3], o);
    all = all && o.pass;
  }
  {
    Outcome o;
    o.pass = true;
    int rows = 0;
    for (const auto& r : rs) {
      if (r.phase != kPhaseRl) continue;
      ++rows;
      const ConditionReport* sl = FindRow(rs, kPhaseSl, std::nullopt, *r.upsampling);
      const double a = r.acc_comm->mean;
      const bool ok = sl && a > sl->acc_comm->mean && a >= 0.88 && a <= 0.97;
      o.pass = o.pass && ok;
      o.details.push_back(fmt::format("L={} N={}: SL+RL {:.4f} vs SL {} (want > SL, in [0.88, 0.97]) {}",
                                      *r.listeners, *r.upsampling, a,
                                      sl ? fmt::format("{:.4f}", sl->acc_comm->mean) : "--",
                                      ok ? "ok" : "FAIL"));
    }
    o.pass = o.pass && rows == 6;
    Print(4, titles[4], o);
    all = all && o.pass;
  }
  {
    const TrendSummary t = check_trends(rs);
    Outcome o;
    o.pass = t.ok;
    std::string text = render_trends(t);
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      o.details.push_back(text.substr(pos, nl - pos));
      pos = nl == std::string::npos ? text.size() : nl + 1;
    }
    Print(5, titles[5], o);
    all = all && o.pass;
  }
  std::cout << "artifacts: " << m.run_dir.string() << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode, corpus;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--corpus" && i + 1 < argc) {
      corpus = argv[++i];
    } else {
      mode = a;
    }
  }
  try {
    if (mode == "--properties") return RunProperties();
    if (mode == "--corpus-criteria") return RunCorpus(corpus);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "usage: acceptance --properties | --corpus-criteria [--corpus PATH]\n";
  return 1;
}
