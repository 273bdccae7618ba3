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

// Crossed random-intercept model fitted through Henderson's mixed model
// equations. The chip block of the coefficient matrix is diagonal, so it is
// absorbed into a small dense system over (intercept, slope, seed effects).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "colorlex/metrics.hpp"

namespace colorlex {

namespace {

// Variance components below this fraction of Var(y) are pinned at zero.
constexpr double kBoundaryFraction = 1e-10;

struct Factor {
  bool used = false;
  std::size_t levels = 0;
  std::vector<std::size_t> index;  // per observation, compacted
  std::vector<double> n, sx, sy;   // per level
};

Factor MakeFactor(std::span<const RegressionObservation> obs, std::size_t declared,
                  std::size_t RegressionObservation::*member) {
  Factor f;
  std::vector<std::size_t> remap(declared, SIZE_MAX);
  f.index.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::size_t g = obs[i].*member;
    if (g >= declared) throw std::invalid_argument("group index out of range");
    if (remap[g] == SIZE_MAX) {
      remap[g] = f.levels++;
      f.n.push_back(0);
      f.sx.push_back(0);
      f.sy.push_back(0);
    }
    const std::size_t k = remap[g];
    f.index[i] = k;
    f.n[k] += 1;
    f.sx[k] += obs[i].x;
    f.sy[k] += obs[i].y;
  }
  const bool replicated = std::any_of(f.n.begin(), f.n.end(), [](double c) { return c > 1; });
  f.used = f.levels >= 2 && replicated;
  return f;
}

}  // namespace

RegressionResult fit_mixed_model(std::span<const RegressionObservation> obs,
                                 std::size_t n_seed_groups, std::size_t n_chip_groups,
                                 const RegressionOptions& opts) {
  const std::size_t n = obs.size();
  if (n < 3) throw std::invalid_argument("regression needs at least three observations");
  double sx = 0, sxx = 0, sy = 0, sxy = 0, syy = 0;
  for (const auto& o : obs) {
    if (!std::isfinite(o.x) || !std::isfinite(o.y))
      throw std::invalid_argument("non-finite regression observation");
    sx += o.x;
    sxx += o.x * o.x;
    sy += o.y;
    sxy += o.x * o.y;
    syy += o.y * o.y;
  }
  const double dn = static_cast<double>(n);
  const double var_x = sxx / dn - (sx / dn) * (sx / dn);
  if (!(var_x > 1e-12 * std::max(1.0, sxx / dn)))
    throw std::invalid_argument("E_ctx is constant; slope is not identifiable");
  const double var_y = std::max(syy / dn - (sy / dn) * (sy / dn), 1e-300);

  Factor seeds = MakeFactor(obs, n_seed_groups, &RegressionObservation::seed_group);
  Factor chips = MakeFactor(obs, n_chip_groups, &RegressionObservation::chip_group);
  const std::size_t S = seeds.levels, K = chips.levels;

  // Seed-by-chip cell counts, stored per chip.
  Eigen::MatrixXd cell;
  if (chips.used && seeds.used) {
    cell = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < n; ++i)
      cell(static_cast<Eigen::Index>(seeds.index[i]), static_cast<Eigen::Index>(chips.index[i])) += 1;
  }

  RegressionResult res;
  res.n_observations = n;
  res.n_seeds = S;
  res.n_chips = K;

  // Everything the mixed model equations give at fixed variance ratios
  // gu = su / se and gv = sv / se (zero drops the factor).
  struct Solve {
    double b0 = 0, b1 = 0, se = 0, loglik = 0;
    std::array<double, 2> score = {0, 0};  // d loglik / d log ratio
    Eigen::MatrixXd sinv;
  };
  auto solve = [&](double gu, double gv) {
    const bool use_u = gu > 0, use_v = gv > 0;
    const Eigen::Index m = 2 + (use_u ? static_cast<Eigen::Index>(S) : 0);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd r(m);
    a(0, 0) = dn;
    a(0, 1) = a(1, 0) = sx;
    a(1, 1) = sxx;
    r(0) = sy;
    r(1) = sxy;
    if (use_u) {
      for (std::size_t s = 0; s < S; ++s) {
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(s);
        a(0, k) = a(k, 0) = seeds.n[s];
        a(1, k) = a(k, 1) = seeds.sx[s];
        a(k, k) = seeds.n[s] + 1.0 / gu;
        r(k) = seeds.sy[s];
      }
    }
    Eigen::VectorXd bcol(m);
    auto chip_column = [&](std::size_t c) {
      bcol(0) = chips.n[c];
      bcol(1) = chips.sx[c];
      if (use_u) bcol.tail(static_cast<Eigen::Index>(S)) = cell.col(static_cast<Eigen::Index>(c));
    };
    double logdet = 0;
    if (use_v) {
      for (std::size_t c = 0; c < K; ++c) {
        chip_column(c);
        const double dc = chips.n[c] + 1.0 / gv;
        logdet += std::log(dc);
        a.noalias() -= bcol * bcol.transpose() / dc;
        r.noalias() -= bcol * (chips.sy[c] / dc);
      }
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0))
      throw RegressionError("mixed model equations are singular", res);
    logdet += ldlt.vectorD().array().log().sum();

    Solve out;
    out.sinv = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd w = out.sinv * r;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
    if (use_u) u = w.tail(static_cast<Eigen::Index>(S));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
    double trace_v = 0;
    if (use_v) {
      for (std::size_t c = 0; c < K; ++c) {
        chip_column(c);
        const double dc = chips.n[c] + 1.0 / gv;
        v(static_cast<Eigen::Index>(c)) = (chips.sy[c] - bcol.dot(w)) / dc;
        trace_v += 1.0 / dc + bcol.dot(out.sinv * bcol) / (dc * dc);
      }
    }
    double ye = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = obs[i].y - w(0) - w(1) * obs[i].x -
                       u(static_cast<Eigen::Index>(seeds.index[i])) -
                       v(static_cast<Eigen::Index>(chips.index[i]));
      ye += obs[i].y * e;
    }
    out.b0 = w(0);
    out.b1 = w(1);
    out.se = std::max(ye / (dn - 2), 1e-300);
    // Score from the predicted effects and their prediction variances.
    if (use_u)
      out.score[0] = (u.squaredNorm() / out.se + out.sinv.bottomRightCorner(S, S).trace()) /
                         (2 * gu) -
                     static_cast<double>(S) / 2;
    if (use_v)
      out.score[1] = (v.squaredNorm() / out.se + trace_v) / (2 * gv) - static_cast<double>(K) / 2;
    // Restricted log-likelihood with the residual variance profiled out,
    // up to a constant.
    out.loglik = -0.5 * ((dn - 2) * std::log(out.se) + logdet +
                         (use_u ? static_cast<double>(S) * std::log(gu) : 0) +
                         (use_v ? static_cast<double>(K) * std::log(gv) : 0));
    return out;
  };

  auto fill = [&](const Solve& f, double gu, double gv, int iterations) {
    res.intercept = f.b0;
    res.beta = f.b1;
    res.seed_variance = gu * f.se;
    res.chip_variance = gv * f.se;
    res.residual_variance = f.se;
    res.standard_error = std::sqrt(f.se * f.sinv(1, 1));
    res.p_value = std::erfc(std::abs(f.b1 / res.standard_error) / std::sqrt(2.0));
    res.iterations = iterations;
  };

  // Damped Newton ascent over t = log(ratio) for the factors still in the
  // model; the curvature is a central difference of the score. A ratio whose
  // component falls below kBoundaryFraction * Var(y) is pinned at zero.
  std::vector<int> active;
  if (seeds.used) active.push_back(0);
  if (chips.used) active.push_back(1);
  std::array<double, 2> t = {std::log(0.5), std::log(0.5)};
  auto ratios = [&](const std::array<double, 2>& tt, const std::vector<int>& act) {
    std::array<double, 2> g = {0, 0};
    for (int k : act) g[static_cast<std::size_t>(k)] = std::exp(tt[static_cast<std::size_t>(k)]);
    return g;
  };

  auto g = ratios(t, active);
  Solve cur = solve(g[0], g[1]);
  constexpr double kH = 1e-4;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const std::size_t q = active.size();
    const auto qi = static_cast<Eigen::Index>(q);
    Eigen::VectorXd grad(qi);
    Eigen::MatrixXd hess(qi, qi);
    for (std::size_t i = 0; i < q; ++i) {
      const auto ki = static_cast<std::size_t>(active[i]);
      grad(static_cast<Eigen::Index>(i)) = cur.score[ki];
      auto up = t, down = t;
      up[ki] += kH;
      down[ki] -= kH;
      const auto gu = ratios(up, active), gd = ratios(down, active);
      const Solve su = solve(gu[0], gu[1]), sd = solve(gd[0], gd[1]);
      for (std::size_t j = 0; j < q; ++j) {
        const auto kj = static_cast<std::size_t>(active[j]);
        hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
            (su.score[kj] - sd.score[kj]) / (2 * kH);
      }
    }
    hess = (0.5 * (hess + hess.transpose())).eval();

    Eigen::VectorXd dir = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
    if (q > 0) {
      const Eigen::LLT<Eigen::MatrixXd> neg(-hess);
      if (neg.info() == Eigen::Success) {
        dir = neg.solve(grad);
      } else {
        // Not concave here: climb the gradient, full length, and let the
        // line search shorten it.
        dir = grad;
        if (dir.cwiseAbs().maxCoeff() > 0) dir *= 2.0 / dir.cwiseAbs().maxCoeff();
      }
      const double longest = dir.cwiseAbs().maxCoeff();
      if (longest > 2.0) dir *= 2.0 / longest;
    }

    // Backtrack until the likelihood does not drop.
    std::array<double, 2> next_t = t;
    Solve next = cur;
    double step = 1.0;
    for (int tries = 0; tries < 40 && q > 0; ++tries, step /= 2) {
      auto tt = t;
      for (std::size_t i = 0; i < q; ++i)
        tt[static_cast<std::size_t>(active[i])] += step * dir(static_cast<Eigen::Index>(i));
      const auto gg = ratios(tt, active);
      Solve cand = solve(gg[0], gg[1]);
      if (std::isfinite(cand.loglik) && cand.loglik >= cur.loglik) {
        next_t = tt;
        next = std::move(cand);
        break;
      }
    }
    if (!std::isfinite(next.loglik)) {
      fill(cur, g[0], g[1], it);
      throw RegressionError("mixed model iteration diverged", res);
    }

    auto next_g = ratios(next_t, active);
    // Pin components that have run into the boundary.
    std::vector<int> kept;
    for (int k : active) {
      const auto kk = static_cast<std::size_t>(k);
      if (next_g[kk] * next.se < kBoundaryFraction * var_y) {
        next_g[kk] = 0;
      } else {
        kept.push_back(k);
      }
    }
    if (kept.size() != active.size()) {
      active = kept;
      next = solve(next_g[0], next_g[1]);
    }

    const double change = std::max(
        {std::abs(next.b0 - cur.b0), std::abs(next.b1 - cur.b1),
         std::abs(next_g[0] * next.se - g[0] * cur.se),
         std::abs(next_g[1] * next.se - g[1] * cur.se), std::abs(next.se - cur.se)});
    t = next_t;
    g = next_g;
    cur = std::move(next);
    if (change < opts.tolerance) {
      fill(cur, g[0], g[1], it);
      return res;
    }
  }
  fill(cur, g[0], g[1], opts.max_iterations);
  throw RegressionError(
      fmt::format("mixed model did not converge in {} iterations", opts.max_iterations), res);
}

namespace {

std::tuple<int, int, int> ChipKey(const ColorChip& c, ChipGrouping g) {
  if (g == ChipGrouping::kExact) return {c.L_tenths(), c.a_tenths(), c.b_tenths()};
  return {static_cast<int>(std::lround(c.L())), static_cast<int>(std::lround(c.a())),
          static_cast<int>(std::lround(c.b()))};
}

struct ObservationBuilder {
  ChipGrouping grouping;
  std::map<std::tuple<int, int, int>, std::size_t> chip_ids;
  std::map<std::int64_t, std::size_t> seed_ids;
  std::vector<RegressionObservation> obs;
  std::size_t excluded = 0;

  void AddLog(const Lexicon& lex, const std::map<std::string, double>& iw,
              std::optional<std::size_t> fixed_seed) {
    for (const auto& rec : lex.trial_log) {
      auto it = iw.find(rec.word);
      if (it == iw.end()) {
        ++excluded;
        continue;
      }
      std::size_t seed_id;
      if (fixed_seed) {
        seed_id = *fixed_seed;
      } else {
        seed_id = seed_ids.try_emplace(rec.seed, seed_ids.size()).first->second;
      }
      const std::size_t chip_id =
          chip_ids.try_emplace(ChipKey(rec.target, grouping), chip_ids.size()).first->second;
      obs.push_back({it->second, rec.e_ctx, seed_id, chip_id});
    }
  }
};

}  // namespace

RegressionResult fit_context_regression(const Lexicon& pooled, const RegressionOptions& opts) {
  ObservationBuilder b{opts.chip_grouping, {}, {}, {}, 0};
  b.AddLog(pooled, word_informativeness(pooled, opts.informativeness_scale), std::nullopt);
  RegressionResult r = fit_mixed_model(b.obs, b.seed_ids.size(), b.chip_ids.size(), opts);
  r.excluded_trials = b.excluded;
  return r;
}

RegressionResult fit_context_regression(std::span<const Lexicon> per_seed,
                                        const RegressionOptions& opts) {
  ObservationBuilder b{opts.chip_grouping, {}, {}, {}, 0};
  for (std::size_t s = 0; s < per_seed.size(); ++s)
    b.AddLog(per_seed[s], word_informativeness(per_seed[s], opts.informativeness_scale), s);
  RegressionResult r = fit_mixed_model(b.obs, per_seed.size(), b.chip_ids.size(), opts);
  r.excluded_trials = b.excluded;
  return r;
}

}  // namespace colorlex
