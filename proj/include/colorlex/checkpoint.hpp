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

// Versioned JSON checkpoints. Reals are stored as the shortest decimal
// string that parses back to the same double, so load -> save reproduces a
// checkpoint byte for byte.

#ifndef COLORLEX_CHECKPOINT_HPP_
#define COLORLEX_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "colorlex/neuralnet.hpp"

namespace colorlex {

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointMeta {
  int format_version = kCheckpointFormatVersion;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;
  std::string config_digest;
};

nlohmann::json meta_to_json(const CheckpointMeta& m);
CheckpointMeta meta_from_json(const nlohmann::json& j);

std::string real_to_string(double v);
double real_from_string(std::string_view s);

nlohmann::json matrix_to_json(const nn::Matrix<double>& m);
nn::Matrix<double> matrix_from_json(const nlohmann::json& j);

// {"layers": [{"in", "out", "activation", "weights" (row-major), "bias"}]}
nlohmann::json mlp_to_json(const nn::Mlp<double>& m);
nn::Mlp<double> mlp_from_json(const nlohmann::json& j);

// Canonical text form used for every persisted JSON document.
std::string dump_json(const nlohmann::json& j);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace colorlex

#endif  // COLORLEX_CHECKPOINT_HPP_
