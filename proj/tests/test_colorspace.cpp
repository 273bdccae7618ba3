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

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "colorlex/colorspace.hpp"

using namespace colorlex;

namespace {

// Golden values from an independent conversion (scikit-image rgb2lab with
// colorsys hls_to_rgb, D65 / 2 degree), recorded once before the build.
struct Golden {
  double h, s, l, L, a, b;
};
constexpr std::array<Golden, 6> kGolden = {{
    {120, 1.0, 0.5, 87.7351, -86.1830, 83.1797},
    {0, 1.0, 0.5, 53.2406, 80.0923, 67.2028},
    {240, 1.0, 0.5, 32.2957, 79.1856, -107.8573},
    {30, 0.4, 0.7, 74.6650, 6.4895, 19.7444},
    {200, 0.25, 0.2, 22.0890, -4.3461, -7.4988},
    {300, 0.9, 0.85, 82.4373, 35.8386, -24.2179},
}};

ColorChip RandomChip(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> L(0, 1000), ab(-1280, 1280);
  return ColorChip::FromTenths(L(rng), ab(rng), ab(rng));
}

}  // namespace

TEST_CASE("hsl_to_cielab matches the golden conversions") {
  for (const auto& g : kGolden) {
    CAPTURE(g.h);
    const Eigen::Vector3d lab = hsl_to_cielab_exact(HslColor(g.h, g.s, g.l));
    CHECK(std::abs(lab.x() - g.L) < 2e-3);
    CHECK(std::abs(lab.y() - g.a) < 2e-3);
    CHECK(std::abs(lab.z() - g.b) < 2e-3);
    const ColorChip c = hsl_to_cielab(HslColor(g.h, g.s, g.l));
    CHECK(c == ColorChip(g.L, g.a, g.b));
  }
}

TEST_CASE("black, white and greys") {
  CHECK(hsl_to_cielab(HslColor(0, 0, 1)) == ColorChip(100, 0, 0));
  CHECK(hsl_to_cielab(HslColor(0, 0, 0)) == ColorChip(0, 0, 0));
  for (double h : {0.0, 77.0, 180.0, 359.0}) {
    for (double l : {0.1, 0.35, 0.5, 0.9}) {
      const ColorChip g = hsl_to_cielab(HslColor(h, 0, l));
      CHECK(std::abs(g.a()) <= 0.1);
      CHECK(std::abs(g.b()) <= 0.1);
      CHECK(g == hsl_to_cielab(HslColor(0, 0, l)));
    }
  }
}

TEST_CASE("hue wraps and ranges are enforced") {
  CHECK(hsl_to_cielab(HslColor(480, 0.5, 0.5)) == hsl_to_cielab(HslColor(120, 0.5, 0.5)));
  CHECK(hsl_to_cielab(HslColor(-90, 0.5, 0.5)) == hsl_to_cielab(HslColor(270, 0.5, 0.5)));
  CHECK_THROWS_AS(HslColor(0, 1.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(HslColor(0, 0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(ColorChip(100.1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(ColorChip(50, 128.2, 0), std::invalid_argument);
  CHECK_THROWS_AS(ColorChip(50, 0, -130), std::invalid_argument);
}

TEST_CASE("quantization") {
  const ColorChip c(12.34, -5.66, 0.04);
  CHECK(c.L_tenths() == 123);
  CHECK(c.a_tenths() == -57);
  CHECK(c.b_tenths() == 0);
  CHECK(ColorChip(c.L(), c.a(), c.b()) == c);
  CHECK(Quantize(Quantize(3.14159)) == Quantize(3.14159));
  CHECK(ColorChip(1.25, 0, 0).L_tenths() == 13);
  CHECK(ColorChip(50, -0.25, 0).a_tenths() == -3);
  CHECK(ColorChip(50, 1, 2) != ColorChip(50, 1, 2.1));
}

TEST_CASE("delta_e") {
  CHECK(delta_e(ColorChip(0, 0, 0), ColorChip(3, 4, 0)) == 5.0);
  CHECK(delta_e(ColorChip(50, 10, -10), ColorChip(60, -10, 10)) == doctest::Approx(30.0));
  const ColorChip x(20, 30, 40);
  CHECK(delta_e(x, x) == 0.0);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const ColorChip a = RandomChip(rng), b = RandomChip(rng), c = RandomChip(rng);
    CHECK(delta_e(a, b) == delta_e(b, a));
    CHECK(delta_e(a, c) <= delta_e(a, b) + delta_e(b, c) + 1e-12);
    CHECK((delta_e(a, b) == 0) == (a == b));
  }
}

TEST_CASE("context_ease is the hardest distractor") {
  const ColorChip t(50, 0, 0);
  const std::array<ColorChip, 2> d1 = {ColorChip(60, 0, 0), ColorChip(50, 50, 0)};
  CHECK(context_ease(t, d1) == 10.0);
  const std::array<ColorChip, 2> d2 = {ColorChip(50, 25, 0), ColorChip(50, 25, 0)};
  CHECK(context_ease(t, d2) == 25.0);
  const std::array<ColorChip, 2> d3 = {t, ColorChip(70, 0, 0)};
  CHECK(context_ease(t, d3) == 0.0);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const ColorChip x = RandomChip(rng);
    const std::array<ColorChip, 2> d = {RandomChip(rng), RandomChip(rng)};
    const double e = context_ease(x, d);
    CHECK(e <= delta_e(x, d[0]));
    CHECK(e <= delta_e(x, d[1]));
  }
}
