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

// Test-only helpers: a synthetic labelled corpus for pipeline tests, a
// scratch directory, and small exact oracles.

#ifndef COLORLEX_TESTS_SUPPORT_HPP_
#define COLORLEX_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "colorlex/colorspace.hpp"
#include "colorlex/dataset.hpp"

namespace colorlex::testing {

// Targets are named by the nearest of a dozen prototypes. In close
// contexts half of the names get a lightness prefix, which makes words
// more specific when the context is hard. Not human data.
inline Corpus SyntheticHumanCorpus(std::size_t n, std::uint64_t seed) {
  struct Proto {
    const char* name;
    Eigen::Vector3d lab;
  };
  const std::vector<Proto> protos = {
      {"red", {53, 80, 67}},     {"green", {70, -60, 60}},  {"blue", {35, 60, -95}},
      {"yellow", {92, -15, 85}}, {"purple", {35, 55, -40}}, {"orange", {67, 40, 70}},
      {"pink", {75, 35, 0}},     {"brown", {40, 20, 35}},   {"grey", {55, 0, 0}},
      {"black", {12, 0, 0}},     {"white", {96, 0, 0}},     {"teal", {55, -35, -10}}};
  Corpus c = generate_triplets(n, kHumanConditionMix, TripletThresholds{}, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution coin(0.5);
  for (auto& t : c.trials) {
    double best = std::numeric_limits<double>::infinity();
    std::string word;
    for (const auto& p : protos) {
      const double d = (t.target.vec() - p.lab).norm();
      if (d < best) {
        best = d;
        word = p.name;
      }
    }
    if (t.condition == Condition::kClose && coin(rng))
      word = (t.target.L() > 55 ? "light" : "dark") + word;
    t.human_word = word;
    t.source = Source::kHuman;
  }
  c.Recount();
  return c;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() /
            ("colorlex_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Phase-one simplex: is there lambda >= 0 with A lambda = b? Bland's rule,
// dense tableau. Used to decide convex-hull membership independently of the
// geometry code.
inline bool LpFeasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol = 1e-9) {
  const Eigen::Index m = A.rows(), n = A.cols();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = b(i) < 0 ? -1.0 : 1.0;
    T.row(i).head(n) = s * A.row(i);
    T(i, n + i) = 1.0;
    T(i, n + m) = s * b(i);
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  // Objective row: minimise the sum of artificials, expressed in reduced form.
  for (Eigen::Index i = 0; i < m; ++i) T.row(m) -= T.row(i);
  for (Eigen::Index i = 0; i < m; ++i) T(m, n + i) = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (T(m, j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) > tol) {
        const double r = T(i, n + m) / T(i, enter);
        if (r < best - 1e-15 ||
            (std::abs(r - best) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = r;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded cannot happen in phase one
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave) T.row(i) -= T(i, enter) * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  return -T(m, n + m) <= 1e-7;
}

// Is p a convex combination of pts?
inline bool InConvexHullLp(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& p) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd A(4, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    A.block<3, 1>(0, j) = pts[static_cast<std::size_t>(j)];
    A(3, j) = 1.0;
  }
  Eigen::VectorXd b(4);
  b << p, 1.0;
  return LpFeasible(A, b);
}

inline std::vector<ColorChip> Unique(std::vector<ColorChip> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::vector<Eigen::Vector3d> Vecs(const std::vector<ColorChip>& v) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& c : v) out.push_back(c.vec());
  return out;
}

// Extreme points: a point is a vertex iff it is not a convex combination of
// the other distinct points.
inline std::vector<ColorChip> BruteVertices(const std::vector<ColorChip>& pts) {
  const auto u = Unique(pts);
  if (u.size() == 1) return u;
  std::vector<ColorChip> out;
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::vector<ColorChip> rest = u;
    rest.erase(rest.begin() + static_cast<long>(i));
    if (!InConvexHullLp(Vecs(rest), u[i].vec())) out.push_back(u[i]);
  }
  return out;
}

// Supporting planes from every non-collinear triple, as unit outward normals.
inline std::vector<Eigen::Vector3d> BruteFacetNormals(const std::vector<ColorChip>& pts) {
  const auto u = Unique(pts);
  std::vector<Eigen::Vector3d> normals;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j)
      for (std::size_t k = j + 1; k < u.size(); ++k) {
        Eigen::Vector3d n = (u[j].vec() - u[i].vec()).cross(u[k].vec() - u[i].vec());
        if (n.norm() < 1e-9) continue;
        n.normalize();
        int above = 0, below = 0;
        for (const auto& p : u) {
          const double s = n.dot(p.vec() - u[i].vec());
          above += s > 1e-9;
          below += s < -1e-9;
        }
        if (above && below) continue;
        normals.push_back(above ? Eigen::Vector3d(-n) : n);
      }
  return normals;
}

inline std::vector<Eigen::Vector3d> Dedupe(std::vector<Eigen::Vector3d> v) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& n : v)
    if (std::none_of(out.begin(), out.end(),
                     [&](const Eigen::Vector3d& m) { return (m - n).norm() < 1e-9; }))
      out.push_back(n);
  return out;
}

}  // namespace colorlex::testing

#endif  // COLORLEX_TESTS_SUPPORT_HPP_
