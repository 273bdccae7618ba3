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

#include "colorlex/colorspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace colorlex {

namespace {

std::int32_t ToTenths(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite color component");
  return static_cast<std::int32_t>(std::lround(x * 10.0));
}

void CheckRanges(std::int32_t L, std::int32_t a, std::int32_t b) {
  if (L < 0 || L > 1000 || a < -1280 || a > 1280 || b < -1280 || b > 1280) {
    throw std::invalid_argument(fmt::format(
        "CIELAB chip out of range: ({:.1f}, {:.1f}, {:.1f})", L / 10.0,
        a / 10.0, b / 10.0));
  }
}

// sRGB electro-optical transfer function.
double Linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double LabF(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double HueToChannel(double p, double q, double t) {
  if (t < 0) t += 1;
  if (t > 1) t -= 1;
  if (t < 1.0 / 6.0) return p + (q - p) * 6.0 * t;
  if (t < 0.5) return q;
  if (t < 2.0 / 3.0) return p + (q - p) * (2.0 / 3.0 - t) * 6.0;
  return p;
}

}  // namespace

double Quantize(double x) { return std::lround(x * 10.0) / 10.0; }

ColorChip::ColorChip(double L, double a, double b)
    : L_(ToTenths(L)), a_(ToTenths(a)), b_(ToTenths(b)) {
  CheckRanges(L_, a_, b_);
}

ColorChip ColorChip::FromTenths(std::int32_t L, std::int32_t a,
                                std::int32_t b) {
  CheckRanges(L, a, b);
  ColorChip c;
  c.L_ = L;
  c.a_ = a;
  c.b_ = b;
  return c;
}

std::string ColorChip::ToString() const {
  return fmt::format("({:.1f}, {:.1f}, {:.1f})", L(), a(), this->b());
}

HslColor::HslColor(double hue, double sat, double light) {
  if (!std::isfinite(hue) || !std::isfinite(sat) || !std::isfinite(light))
    throw std::invalid_argument("non-finite HSL component");
  if (sat < 0 || sat > 1 || light < 0 || light > 1)
    throw std::invalid_argument(
        fmt::format("HSL saturation/lightness out of [0,1]: s={} l={}", sat, light));
  h = std::fmod(hue, 360.0);
  if (h < 0) h += 360.0;
  s = sat;
  l = light;
}

Eigen::Vector3d hsl_to_cielab_exact(const HslColor& c) {
  Eigen::Vector3d rgb;
  if (c.s == 0) {
    rgb.setConstant(c.l);
  } else {
    const double q = c.l < 0.5 ? c.l * (1 + c.s) : c.l + c.s - c.l * c.s;
    const double p = 2 * c.l - q;
    const double hk = c.h / 360.0;
    rgb << HueToChannel(p, q, hk + 1.0 / 3.0), HueToChannel(p, q, hk),
        HueToChannel(p, q, hk - 1.0 / 3.0);
  }
  const Eigen::Vector3d linear = rgb.unaryExpr(&Linearize);

  // sRGB primaries, D65 white.
  Eigen::Matrix3d to_xyz;
  to_xyz << 0.412453, 0.357580, 0.180423,
            0.212671, 0.715160, 0.072169,
            0.019334, 0.119193, 0.950227;
  const Eigen::Vector3d xyz = to_xyz * linear;
  const Eigen::Vector3d white(0.95047, 1.0, 1.08883);

  const double fx = LabF(xyz.x() / white.x());
  const double fy = LabF(xyz.y() / white.y());
  const double fz = LabF(xyz.z() / white.z());
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ColorChip hsl_to_cielab(const HslColor& c) {
  const Eigen::Vector3d lab = hsl_to_cielab_exact(c);
  // Rounding noise can push white a hair above 100 or black below 0.
  return ColorChip(std::clamp(lab.x(), 0.0, 100.0), lab.y(), lab.z());
}

double delta_e(const ColorChip& x, const ColorChip& y) {
  const double dL = x.L() - y.L();
  const double da = x.a() - y.a();
  const double db = x.b() - y.b();
  return std::sqrt(dL * dL + da * da + db * db);
}

double context_ease(const ColorChip& target,
                    std::span<const ColorChip, 2> distractors) {
  return std::min(delta_e(target, distractors[0]),
                  delta_e(target, distractors[1]));
}

}  // namespace colorlex
