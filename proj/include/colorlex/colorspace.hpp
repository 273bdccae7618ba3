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

#ifndef COLORLEX_COLORSPACE_HPP_
#define COLORLEX_COLORSPACE_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <Eigen/Core>

namespace colorlex {

// A CIELAB color quantized to one decimal place. Components are stored as
// integer tenths, so equality and ordering are exact and every downstream
// computation starts from the same values.
class ColorChip {
 public:
  ColorChip() = default;
  // Quantizes (round half away from zero) and validates the ranges
  // L in [0,100], a and b in [-128,128]. Throws std::invalid_argument.
  ColorChip(double L, double a, double b);

  static ColorChip FromTenths(std::int32_t L, std::int32_t a, std::int32_t b);

  double L() const { return L_ / 10.0; }
  double a() const { return a_ / 10.0; }
  double b() const { return b_ / 10.0; }

  std::int32_t L_tenths() const { return L_; }
  std::int32_t a_tenths() const { return a_; }
  std::int32_t b_tenths() const { return b_; }

  Eigen::Vector3d vec() const { return {L(), a(), b()}; }

  auto operator<=>(const ColorChip&) const = default;

  std::string ToString() const;

 private:
  std::int32_t L_ = 0;
  std::int32_t a_ = 0;
  std::int32_t b_ = 0;
};

// Rounds to the nearest tenth, half away from zero.
double Quantize(double x);

struct ColorChipHash {
  std::size_t operator()(const ColorChip& c) const noexcept {
    std::uint64_t k = (static_cast<std::uint64_t>(c.L_tenths() + 2048) << 32) ^
                      (static_cast<std::uint64_t>(c.a_tenths() + 2048) << 16) ^
                      static_cast<std::uint64_t>(c.b_tenths() + 2048);
    return std::hash<std::uint64_t>{}(k);
  }
};

// Hue in degrees (wrapped into [0,360)), saturation and lightness in [0,1].
struct HslColor {
  HslColor(double h, double s, double l);
  double h;
  double s;
  double l;
};

// HSL -> sRGB -> linear RGB -> XYZ (D65, 2 degree observer) -> CIELAB,
// quantized to 0.1.
ColorChip hsl_to_cielab(const HslColor& c);

// Unquantized variant of the same chain, useful for reference checks.
Eigen::Vector3d hsl_to_cielab_exact(const HslColor& c);

// Euclidean distance in CIELAB.
double delta_e(const ColorChip& x, const ColorChip& y);

// Distance from the target to the most similar distractor.
double context_ease(const ColorChip& target,
                    std::span<const ColorChip, 2> distractors);

}  // namespace colorlex

#endif  // COLORLEX_COLORSPACE_HPP_
