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

// Experiment configuration. The file format is one `key = value` per line,
// `#` starts a comment, lists are comma separated. Unknown keys are errors.

#ifndef COLORLEX_CONFIG_HPP_
#define COLORLEX_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "colorlex/agents.hpp"
#include "colorlex/dataset.hpp"
#include "colorlex/metrics.hpp"
#include "colorlex/training.hpp"

namespace colorlex {

enum class UniverseMode { kEvalSet, kDenseGrid };

struct ExperimentConfig {
  std::filesystem::path colors_csv;
  SchemaMode schema_mode = SchemaMode::kHsl;
  std::filesystem::path out_dir = "out";

  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> listener_grid = {1, 5, 30};
  std::vector<std::int64_t> upsampling_grid = {0, 100, 200};

  // Split and generated data are shared by all seeds.
  std::uint64_t data_seed = 2024;
  std::size_t test_size = 3000;
  std::size_t gen_train_size = 12400;
  std::size_t gen_eval_size = 15400;
  TripletThresholds thresholds;
  bool calibrate_thresholds = true;

  AgentConfig agent;
  SlConfig sl;
  RlConfig rl;

  double informativeness_scale = 100.0;
  ChipGrouping chip_grouping = ChipGrouping::kExact;
  UniverseMode universe = UniverseMode::kEvalSet;
  double grid_step = 1.0;

  int workers = 1;

  // Throws std::invalid_argument naming the offending key.
  void Validate() const;

  // Applies one `key=value` assignment.
  void Set(std::string_view key, std::string_view value);

  // Every key in canonical order with its resolved value.
  std::vector<std::pair<std::string, std::string>> Entries() const;

  // Canonical text of the settings that affect results (paths to inputs,
  // grids, seeds, output location and worker count excluded).
  std::string CanonicalText() const;
  std::string Digest() const;  // sha256 of CanonicalText()
};

ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_text(ExperimentConfig& cfg, std::string_view text,
                       std::string_view origin = "<config>");

std::vector<std::uint64_t> ParseSeedList(std::string_view s);  // "0,1,2" or "0-9"
std::vector<int> ParseIntList(std::string_view s);

}  // namespace colorlex

#endif  // COLORLEX_CONFIG_HPP_
