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

// Convex hulls of CIELAB chips. Chips live on a 0.1 lattice, so hull
// construction runs on integer tenths with exact orientation tests; only the
// exported half-spaces and the containment test use floating point.

#ifndef COLORLEX_GEOMETRY_HPP_
#define COLORLEX_GEOMETRY_HPP_

#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "colorlex/colorspace.hpp"

namespace colorlex {

inline constexpr double kHullEpsilon = 1e-6;

// normal . x <= offset, with a unit normal (CIELAB units).
struct HalfSpace {
  Eigen::Vector3d normal;
  double offset = 0;
};

struct Hull {
  int dimension = 0;  // affine rank of the input, 0..3
  std::vector<ColorChip> vertices;  // extreme points, sorted
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  // Orthonormal directions spanning the affine hull (3 x dimension).
  Eigen::Matrix<double, 3, Eigen::Dynamic> basis;
  // dim 3: one per supporting plane. dim 2: in-plane edge constraints.
  // dim 1: the two segment end caps. dim 0: none.
  std::vector<HalfSpace> facets;
};

// Throws std::invalid_argument on an empty input. Duplicate chips are
// ignored and the result does not depend on input order.
Hull convex_hull(std::span<const ColorChip> points);

// True iff p lies within eps of the hull's affine subspace and satisfies
// every facet shifted outward by eps. Boundary points are inside.
bool contains(const Hull& h, const ColorChip& p, double eps = kHullEpsilon);

// Debug export: {"dimension", "vertices": [[L,a,b]...], "facets":
// [{"normal": [x,y,z], "offset": d}...], "origin", "basis"}.
nlohmann::json hull_to_json(const Hull& h);

}  // namespace colorlex

#endif  // COLORLEX_GEOMETRY_HPP_
