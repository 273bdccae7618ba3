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

#include "colorlex/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>

#include <Eigen/Geometry>

namespace colorlex {

namespace {

// Integer lattice point in tenths. |coord| <= 1280, so cross products stay
// below 2^24 per component and dot products with lattice points below 2^37.
using P = std::array<std::int64_t, 3>;

P Sub(const P& a, const P& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
P Cross(const P& a, const P& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
std::int64_t Dot(const P& a, const P& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

__int128 Det(const P& a, const P& b, const P& c) {
  const P ab = Cross(a, b);
  return static_cast<__int128>(ab[0]) * c[0] + static_cast<__int128>(ab[1]) * c[1] +
         static_cast<__int128>(ab[2]) * c[2];
}

P ToLattice(const ColorChip& c) { return {c.L_tenths(), c.a_tenths(), c.b_tenths()}; }

Eigen::Vector3d ToVec(const P& p) {
  return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])};
}

// Converts an integer constraint n.x <= off (lattice units) to a unit-normal
// half-space in CIELAB units.
HalfSpace ToHalfSpace(const P& n, std::int64_t off) {
  const Eigen::Vector3d nv = ToVec(n);
  const double len = nv.norm();
  return {nv / len, static_cast<double>(off) / (10.0 * len)};
}

// Reduced plane key so coplanar triangles collapse to one facet.
std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t> PlaneKey(P n, std::int64_t off) {
  const std::int64_t g =
      std::gcd(std::gcd(std::abs(n[0]), std::abs(n[1])), std::abs(n[2]));
  return {n[0] / g, n[1] / g, n[2] / g, off / g};
}

struct Face {
  std::array<int, 3> v;
  P n;
  std::int64_t off;
  std::vector<int> outside;
  bool alive = true;
};

class Quickhull {
 public:
  Quickhull(const std::vector<P>& pts, std::array<int, 4> tetra) : pts_(pts) {
    interior4_ = {0, 0, 0};
    for (int i : tetra)
      for (int k = 0; k < 3; ++k) interior4_[k] += pts_[i][k];
    AddFace(tetra[0], tetra[1], tetra[2]);
    AddFace(tetra[0], tetra[1], tetra[3]);
    AddFace(tetra[0], tetra[2], tetra[3]);
    AddFace(tetra[1], tetra[2], tetra[3]);
    std::vector<int> rest;
    for (int i = 0; i < static_cast<int>(pts_.size()); ++i)
      if (std::find(tetra.begin(), tetra.end(), i) == tetra.end()) rest.push_back(i);
    Assign(rest, 0);
  }

  void Run() {
    for (;;) {
      int fi = -1;
      for (int i = 0; i < static_cast<int>(faces_.size()); ++i) {
        if (faces_[i].alive && !faces_[i].outside.empty()) {
          fi = i;
          break;
        }
      }
      if (fi < 0) return;
      AddPoint(Farthest(faces_[fi]));
    }
  }

  const std::vector<Face>& faces() const { return faces_; }

 private:
  std::int64_t Side(const Face& f, int p) const { return Dot(f.n, pts_[p]) - f.off; }

  void AddFace(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    f.n = Cross(Sub(pts_[b], pts_[a]), Sub(pts_[c], pts_[a]));
    f.off = Dot(f.n, pts_[a]);
    // The interior reference point must be strictly below every face.
    const std::int64_t s = Dot(f.n, interior4_) - 4 * f.off;
    if (s > 0) {
      std::swap(f.v[1], f.v[2]);
      f.n = {-f.n[0], -f.n[1], -f.n[2]};
      f.off = -f.off;
    } else if (s == 0) {
      throw std::logic_error("quickhull produced a face through its interior point");
    }
    faces_.push_back(std::move(f));
  }

  void Assign(const std::vector<int>& points, std::size_t first_face) {
    for (int p : points) {
      for (std::size_t i = first_face; i < faces_.size(); ++i) {
        if (faces_[i].alive && Side(faces_[i], p) > 0) {
          faces_[i].outside.push_back(p);
          break;
        }
      }
    }
  }

  int Farthest(const Face& f) const {
    const double len = ToVec(f.n).norm();
    int best = f.outside.front();
    double best_d = -1;
    for (int p : f.outside) {
      const double d = static_cast<double>(Side(f, p)) / len;
      if (d > best_d || (d == best_d && p < best)) {
        best_d = d;
        best = p;
      }
    }
    return best;
  }

  void AddPoint(int eye) {
    std::set<std::pair<int, int>> edges;
    std::vector<int> orphans;
    std::vector<std::size_t> visible;
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      Face& f = faces_[i];
      if (!f.alive || Side(f, eye) <= 0) continue;
      visible.push_back(i);
      for (int k = 0; k < 3; ++k) edges.emplace(f.v[k], f.v[(k + 1) % 3]);
    }
    std::vector<std::pair<int, int>> horizon;
    for (std::size_t i : visible) {
      Face& f = faces_[i];
      for (int k = 0; k < 3; ++k) {
        const int a = f.v[k], b = f.v[(k + 1) % 3];
        if (!edges.count({b, a})) horizon.emplace_back(a, b);
      }
      for (int p : f.outside)
        if (p != eye) orphans.push_back(p);
      f.outside.clear();
      f.alive = false;
    }
    const std::size_t first_new = faces_.size();
    for (const auto& [a, b] : horizon) AddFace(a, b, eye);
    Assign(orphans, first_new);
  }

  const std::vector<P>& pts_;
  P interior4_;
  std::vector<Face> faces_;
};

Hull Hull3(const std::vector<P>& pts, const std::vector<ColorChip>& chips,
           std::array<int, 4> tetra) {
  Quickhull qh(pts, tetra);
  qh.Run();

  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t>, P> planes;
  std::set<int> candidates;
  for (const Face& f : qh.faces()) {
    if (!f.alive) continue;
    auto key = PlaneKey(f.n, f.off);
    planes.emplace(key, P{std::get<0>(key), std::get<1>(key), std::get<2>(key)});
    candidates.insert(f.v.begin(), f.v.end());
  }

  Hull h;
  h.dimension = 3;
  h.basis = Eigen::Matrix3d::Identity();
  for (const auto& [key, n] : planes) h.facets.push_back(ToHalfSpace(n, std::get<3>(key)));

  // A triangle corner is a polytope vertex only if three independent
  // supporting planes meet there.
  for (int c : candidates) {
    std::vector<P> through;
    for (const auto& [key, n] : planes)
      if (Dot(n, pts[c]) == std::get<3>(key)) through.push_back(n);
    bool extreme = false;
    for (std::size_t i = 0; i < through.size() && !extreme; ++i)
      for (std::size_t j = i + 1; j < through.size() && !extreme; ++j)
        for (std::size_t k = j + 1; k < through.size() && !extreme; ++k)
          extreme = Det(through[i], through[j], through[k]) != 0;
    if (extreme) h.vertices.push_back(chips[c]);
  }
  std::sort(h.vertices.begin(), h.vertices.end());
  h.origin = chips[tetra[0]].vec();
  return h;
}

Hull Hull2(const std::vector<P>& pts, const std::vector<ColorChip>& chips, int i0,
           int i1, const P& normal) {
  int drop = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(normal[k]) > std::abs(normal[drop])) drop = k;
  const int u = drop == 0 ? 1 : 0;
  const int v = drop == 2 ? 1 : 2;

  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::tie(pts[a][u], pts[a][v]) < std::tie(pts[b][u], pts[b][v]);
  });
  const auto cross2 = [&](int o, int a, int b) {
    return (pts[a][u] - pts[o][u]) * (pts[b][v] - pts[o][v]) -
           (pts[a][v] - pts[o][v]) * (pts[b][u] - pts[o][u]);
  };
  // Andrew's monotone chain, dropping collinear points.
  std::vector<int> ring(2 * order.size());
  std::size_t k = 0;
  for (int p : order) {
    while (k >= 2 && cross2(ring[k - 2], ring[k - 1], p) <= 0) --k;
    ring[k++] = p;
  }
  for (std::size_t i = order.size() - 1, lo = k + 1; i-- > 0;) {
    const int p = order[i];
    while (k >= lo && cross2(ring[k - 2], ring[k - 1], p) <= 0) --k;
    ring[k++] = p;
  }
  ring.resize(k - 1);

  Hull h;
  h.dimension = 2;
  const std::size_t m = ring.size();
  for (std::size_t i = 0; i < m; ++i) {
    const P& a = pts[ring[i]];
    const P& b = pts[ring[(i + 1) % m]];
    const P& c = pts[ring[(i + 2) % m]];
    P n = Cross(Sub(b, a), normal);
    if (Dot(n, Sub(c, a)) > 0) n = {-n[0], -n[1], -n[2]};
    h.facets.push_back(ToHalfSpace(n, Dot(n, a)));
    h.vertices.push_back(chips[ring[i]]);
  }
  std::sort(h.vertices.begin(), h.vertices.end());

  h.origin = chips[i0].vec();
  const Eigen::Vector3d e1 = (chips[i1].vec() - chips[i0].vec()).normalized();
  const Eigen::Vector3d e2 = ToVec(normal).normalized().cross(e1).normalized();
  h.basis.resize(3, 2);
  h.basis.col(0) = e1;
  h.basis.col(1) = e2;
  return h;
}

Hull Hull1(const std::vector<P>& pts, const std::vector<ColorChip>& chips, int i0, int i1) {
  const P dir = Sub(pts[i1], pts[i0]);
  int lo = 0, hi = 0;
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    if (Dot(dir, pts[i]) < Dot(dir, pts[lo])) lo = i;
    if (Dot(dir, pts[i]) > Dot(dir, pts[hi])) hi = i;
  }
  Hull h;
  h.dimension = 1;
  h.vertices = {chips[lo], chips[hi]};
  std::sort(h.vertices.begin(), h.vertices.end());
  h.facets.push_back(ToHalfSpace(dir, Dot(dir, pts[hi])));
  const P neg = {-dir[0], -dir[1], -dir[2]};
  h.facets.push_back(ToHalfSpace(neg, Dot(neg, pts[lo])));
  h.origin = chips[lo].vec();
  h.basis = ToVec(dir).normalized();
  return h;
}

}  // namespace

Hull convex_hull(std::span<const ColorChip> points) {
  if (points.empty()) throw std::invalid_argument("convex hull of an empty point set");
  std::vector<ColorChip> chips(points.begin(), points.end());
  std::sort(chips.begin(), chips.end());
  chips.erase(std::unique(chips.begin(), chips.end()), chips.end());
  std::vector<P> pts;
  pts.reserve(chips.size());
  for (const auto& c : chips) pts.push_back(ToLattice(c));

  const int n = static_cast<int>(pts.size());
  const int i0 = 0;
  if (n == 1) {
    Hull h;
    h.dimension = 0;
    h.vertices = {chips[0]};
    h.origin = chips[0].vec();
    h.basis.resize(3, 0);
    return h;
  }

  int i1 = 1;
  for (int i = 2; i < n; ++i) {
    const P d = Sub(pts[i], pts[i0]), best = Sub(pts[i1], pts[i0]);
    if (Dot(d, d) > Dot(best, best)) i1 = i;
  }
  const P e1 = Sub(pts[i1], pts[i0]);
  int i2 = -1;
  std::int64_t best_area = 0;
  for (int i = 0; i < n; ++i) {
    const P c = Cross(e1, Sub(pts[i], pts[i0]));
    if (Dot(c, c) > best_area) {
      best_area = Dot(c, c);
      i2 = i;
    }
  }
  if (i2 < 0) return Hull1(pts, chips, i0, i1);

  const P normal = Cross(e1, Sub(pts[i2], pts[i0]));
  int i3 = -1;
  std::int64_t best_height = 0;
  for (int i = 0; i < n; ++i) {
    const std::int64_t hgt = std::abs(Dot(normal, Sub(pts[i], pts[i0])));
    if (hgt > best_height) {
      best_height = hgt;
      i3 = i;
    }
  }
  if (i3 < 0) return Hull2(pts, chips, i0, i1, normal);
  return Hull3(pts, chips, {i0, i1, i2, i3});
}

bool contains(const Hull& h, const ColorChip& p, double eps) {
  const Eigen::Vector3d x = p.vec();
  if (h.dimension < 3) {
    const Eigen::Vector3d v = x - h.origin;
    const Eigen::Vector3d residual = v - h.basis * (h.basis.transpose() * v);
    if (residual.norm() > eps) return false;
  }
  for (const auto& f : h.facets)
    if (f.normal.dot(x) - f.offset > eps) return false;
  return true;
}

nlohmann::json hull_to_json(const Hull& h) {
  using nlohmann::json;
  json verts = json::array();
  for (const auto& v : h.vertices) verts.push_back({v.L(), v.a(), v.b()});
  json facets = json::array();
  for (const auto& f : h.facets) {
    facets.push_back(json{{"normal", {f.normal.x(), f.normal.y(), f.normal.z()}},
                          {"offset", f.offset}});
  }
  json basis = json::array();
  for (Eigen::Index c = 0; c < h.basis.cols(); ++c)
    basis.push_back({h.basis(0, c), h.basis(1, c), h.basis(2, c)});
  return json{{"dimension", h.dimension},
              {"vertices", std::move(verts)},
              {"facets", std::move(facets)},
              {"origin", {h.origin.x(), h.origin.y(), h.origin.z()}},
              {"basis", std::move(basis)}};
}

}  // namespace colorlex
