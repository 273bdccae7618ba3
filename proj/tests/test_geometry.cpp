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

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include <doctest.h>

#include "colorlex/geometry.hpp"
#include "support.hpp"

using namespace colorlex;
using namespace colorlex::testing;

namespace {

enum class Shape { kGeneral, kCoplanar, kTiltedPlane, kCollinear, kPoint, kSmall };

std::vector<ColorChip> Instance(Shape shape, int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> L(200, 600), ab(-200, 200), t(-100, 100);
  std::vector<ColorChip> pts;
  for (int i = 0; i < n; ++i) {
    switch (shape) {
      case Shape::kGeneral: pts.push_back(ColorChip::FromTenths(L(rng), ab(rng), ab(rng))); break;
      case Shape::kCoplanar: pts.push_back(ColorChip::FromTenths(400, ab(rng), ab(rng))); break;
      case Shape::kTiltedPlane: {
        const int x = ab(rng), y = t(rng);
        pts.push_back(ColorChip::FromTenths(400 + y, x, x + y));
        break;
      }
      case Shape::kCollinear: {
        const int s = t(rng);
        pts.push_back(ColorChip::FromTenths(400 + s, 2 * s, -s));
        break;
      }
      case Shape::kPoint: pts.push_back(ColorChip::FromTenths(400, 10, -10)); break;
      case Shape::kSmall: {
        std::uniform_int_distribution<int> d(0, 2);
        pts.push_back(ColorChip::FromTenths(400 + d(rng), d(rng), d(rng)));
        break;
      }
    }
  }
  return pts;
}

ColorChip RandomQuery(const std::vector<ColorChip>& pts, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(pts.size()) - 1), kind(0, 3);
  std::uniform_int_distribution<int> L(150, 650), ab(-250, 250), w(0, 4);
  const auto& p = pts[pick(rng)];
  const auto& q = pts[pick(rng)];
  switch (kind(rng)) {
    case 0: return ColorChip::FromTenths(L(rng), ab(rng), ab(rng));
    case 1: return p;
    case 2: {
      // Midpoint when it lands on the lattice, else p.
      const int a = p.L_tenths() + q.L_tenths(), b = p.a_tenths() + q.a_tenths(),
                c = p.b_tenths() + q.b_tenths();
      if (a % 2 || b % 2 || c % 2) return p;
      return ColorChip::FromTenths(a / 2, b / 2, c / 2);
    }
    default:
      return ColorChip::FromTenths(p.L_tenths() + w(rng) - 2, p.a_tenths() + w(rng) - 2,
                                   p.b_tenths() + w(rng) - 2);
  }
}

}  // namespace

TEST_CASE("tetrahedron and square") {
  const std::vector<ColorChip> tet = {ColorChip(0, 0, 0), ColorChip(1, 0, 0),
                                      ColorChip(0, 1, 0), ColorChip(0, 0, 1)};
  const Hull h = convex_hull(tet);
  CHECK(h.dimension == 3);
  CHECK(h.vertices.size() == 4);
  CHECK(h.facets.size() == 4);
  CHECK(contains(h, ColorChip(0.2, 0.2, 0.2)));
  for (const auto& c : tet) CHECK(contains(h, c));
  CHECK(!contains(h, ColorChip(0.5, 0.5, 0.5)));

  const std::vector<ColorChip> sq = {ColorChip(50, 0, 0), ColorChip(50, 10, 0),
                                     ColorChip(50, 0, 10), ColorChip(50, 10, 10),
                                     ColorChip(50, 5, 5)};
  const Hull s = convex_hull(sq);
  CHECK(s.dimension == 2);
  CHECK(s.vertices.size() == 4);
  CHECK(std::find(s.vertices.begin(), s.vertices.end(), ColorChip(50, 5, 5)) == s.vertices.end());
  CHECK(contains(s, ColorChip(50, 5, 5)));
  CHECK(!contains(s, ColorChip(50.1, 5, 5)));
  CHECK(!contains(s, ColorChip(50, 10.1, 5)));
}

TEST_CASE("segment and point hulls") {
  const std::vector<ColorChip> seg = {ColorChip(10, 0, 0), ColorChip(12, 0, 0),
                                      ColorChip(11, 0, 0)};
  const Hull h = convex_hull(seg);
  CHECK(h.dimension == 1);
  CHECK(h.vertices == std::vector<ColorChip>{ColorChip(10, 0, 0), ColorChip(12, 0, 0)});
  CHECK(contains(h, ColorChip(11.5, 0, 0)));
  CHECK(!contains(h, ColorChip(12.1, 0, 0)));
  CHECK(!contains(h, ColorChip(11, 0.1, 0)));

  const std::vector<ColorChip> one = {ColorChip(3, 4, 5), ColorChip(3, 4, 5)};
  const Hull p = convex_hull(one);
  CHECK(p.dimension == 0);
  CHECK(p.vertices.size() == 1);
  CHECK(contains(p, ColorChip(3, 4, 5)));
  CHECK(!contains(p, ColorChip(3, 4, 5.1)));
}

TEST_CASE("hull matches brute-force facet and LP oracles on 100 random instances") {
  std::mt19937_64 rng(2024);
  const std::array<Shape, 6> shapes = {Shape::kGeneral, Shape::kCoplanar, Shape::kTiltedPlane,
                                       Shape::kCollinear, Shape::kPoint, Shape::kSmall};
  std::uniform_int_distribution<int> size(4, 40);
  int queries = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const Shape shape = inst < 60 ? Shape::kGeneral : shapes[static_cast<std::size_t>(inst % 6)];
    const auto pts = Instance(shape, size(rng), rng);
    CAPTURE(inst);
    const Hull h = convex_hull(pts);

    CHECK(h.vertices == BruteVertices(pts));

    if (h.dimension == 3) {
      const auto want = Dedupe(BruteFacetNormals(pts));
      std::vector<Eigen::Vector3d> got;
      for (const auto& f : h.facets) got.push_back(f.normal);
      got = Dedupe(got);
      CHECK(got.size() == want.size());
      for (const auto& n : want)
        CHECK(std::any_of(got.begin(), got.end(),
                          [&](const Eigen::Vector3d& m) { return (m - n).norm() < 1e-9; }));
    }

    const auto u = Vecs(Unique(pts));
    for (int q = 0; q < 10; ++q) {
      const ColorChip c = RandomQuery(pts, rng);
      CHECK(contains(h, c) == InConvexHullLp(u, c.vec()));
      ++queries;
    }
    for (const auto& p : pts) CHECK(contains(h, p));

    // Vertex fixpoint.
    CHECK(convex_hull(h.vertices).vertices == h.vertices);
  }
  CHECK(queries == 1000);
}

TEST_CASE("1000 queries against a 20-point hull agree with LP membership") {
  std::mt19937_64 rng(5);
  const auto pts = Instance(Shape::kGeneral, 20, rng);
  const Hull h = convex_hull(pts);
  const auto u = Vecs(Unique(pts));
  int agree = 0;
  for (int q = 0; q < 1000; ++q) {
    const ColorChip c = RandomQuery(pts, rng);
    agree += contains(h, c) == InConvexHullLp(u, c.vec());
  }
  CHECK(agree == 1000);
}

TEST_CASE("epsilon monotonicity and translation invariance") {
  std::mt19937_64 rng(9);
  for (int inst = 0; inst < 20; ++inst) {
    const auto pts = Instance(inst % 2 ? Shape::kGeneral : Shape::kTiltedPlane, 15, rng);
    const Hull h = convex_hull(pts);
    std::vector<ColorChip> moved;
    for (const auto& p : pts)
      moved.push_back(ColorChip::FromTenths(p.L_tenths() + 123, p.a_tenths() - 456, p.b_tenths() + 78));
    const Hull hm = convex_hull(moved);
    for (int q = 0; q < 30; ++q) {
      const ColorChip c = RandomQuery(pts, rng);
      const ColorChip cm =
          ColorChip::FromTenths(c.L_tenths() + 123, c.a_tenths() - 456, c.b_tenths() + 78);
      CHECK(contains(h, c) == contains(hm, cm));
      if (contains(h, c, 1e-9)) CHECK(contains(h, c, 1e-3));
      if (contains(h, c, 1e-3)) CHECK(contains(h, c, 0.5));
    }
  }
}

TEST_CASE("hull_to_json documents the hull") {
  const std::vector<ColorChip> tet = {ColorChip(0, 0, 0), ColorChip(1, 0, 0),
                                      ColorChip(0, 1, 0), ColorChip(0, 0, 1)};
  const auto j = hull_to_json(convex_hull(tet));
  CHECK(j.at("dimension") == 3);
  CHECK(j.at("vertices").size() == 4);
  CHECK(j.at("facets").size() == 4);
}
