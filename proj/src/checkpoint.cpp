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

#include "colorlex/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace colorlex {

using nlohmann::json;

json meta_to_json(const CheckpointMeta& m) {
  return json{{"format_version", m.format_version},
              {"seed", m.seed},
              {"epoch", m.epoch},
              {"config_digest", m.config_digest}};
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kCheckpointFormatVersion) {
    throw std::runtime_error(
        fmt::format("unsupported checkpoint format version {}", m.format_version));
  }
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epoch = j.at("epoch").get<std::int64_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  return m;
}

std::string real_to_string(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("refusing to serialize a non-finite value");
  return fmt::format("{}", v);
}

double real_from_string(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error(fmt::format("malformed real '{}'", s));
  return v;
}

json matrix_to_json(const nn::Matrix<double>& m) {
  json values = json::array();
  for (nn::Index r = 0; r < m.rows(); ++r)
    for (nn::Index c = 0; c < m.cols(); ++c) values.push_back(real_to_string(m(r, c)));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

nn::Matrix<double> matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<nn::Index>();
  const auto cols = j.at("cols").get<nn::Index>();
  const auto& values = j.at("values");
  if (rows < 0 || cols < 0 || values.size() != static_cast<std::size_t>(rows * cols))
    throw std::runtime_error("matrix shape does not match its value count");
  nn::Matrix<double> m(rows, cols);
  std::size_t k = 0;
  for (nn::Index r = 0; r < rows; ++r)
    for (nn::Index c = 0; c < cols; ++c)
      m(r, c) = real_from_string(values[k++].get<std::string>());
  return m;
}

json mlp_to_json(const nn::Mlp<double>& m) {
  json layers = json::array();
  for (const auto& l : m.layers()) {
    json w = json::array();
    for (nn::Index r = 0; r < l.weights.rows(); ++r)
      for (nn::Index c = 0; c < l.weights.cols(); ++c)
        w.push_back(real_to_string(l.weights(r, c)));
    json b = json::array();
    for (nn::Index r = 0; r < l.bias.size(); ++r) b.push_back(real_to_string(l.bias(r)));
    layers.push_back(json{{"in", l.in()},
                          {"out", l.out()},
                          {"activation", std::string(nn::ToString(l.activation))},
                          {"weights", std::move(w)},
                          {"bias", std::move(b)}});
  }
  return json{{"layers", std::move(layers)}};
}

nn::Mlp<double> mlp_from_json(const json& j) {
  std::vector<nn::DenseLayer<double>> layers;
  for (const auto& lj : j.at("layers")) {
    const auto in = lj.at("in").get<nn::Index>();
    const auto out = lj.at("out").get<nn::Index>();
    const auto& w = lj.at("weights");
    const auto& b = lj.at("bias");
    if (in <= 0 || out <= 0 || w.size() != static_cast<std::size_t>(in * out) ||
        b.size() != static_cast<std::size_t>(out)) {
      throw std::runtime_error("layer descriptor does not match its arrays");
    }
    nn::DenseLayer<double> l;
    l.activation = nn::ParseActivation(lj.at("activation").get<std::string>());
    l.weights.resize(out, in);
    std::size_t k = 0;
    for (nn::Index r = 0; r < out; ++r)
      for (nn::Index c = 0; c < in; ++c)
        l.weights(r, c) = real_from_string(w[k++].get<std::string>());
    l.bias.resize(out);
    for (nn::Index r = 0; r < out; ++r) l.bias(r) = real_from_string(b[r].get<std::string>());
    layers.push_back(std::move(l));
  }
  return nn::Mlp<double>(std::move(layers));
}

std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace colorlex
