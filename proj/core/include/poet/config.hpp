// Copyright 2026 The POET Authors.
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

// Experiment configuration and its JSON file form.
//
// Parsing is strict: an unknown key anywhere is a ConfigError. Missing keys
// take the defaults below.

#ifndef POET_CONFIG_HPP_
#define POET_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "poet/params.hpp"
#include "poet/randinit.hpp"
#include "poet/spo.hpp"

namespace poet {

enum class ModelKind { kMlp, kTinyLm };
enum class DataKind { kTwoMoons, kText };

struct ModelConfig {
  ModelKind kind = ModelKind::kMlp;
  std::vector<std::size_t> layers{2, 64, 64, 1};  // mlp widths, input first
  std::size_t hidden = 64;                        // tiny_lm
  std::size_t heads = 4;
  std::size_t context = 64;
  std::size_t blocks = 2;
  std::size_t ffn = 192;
};

struct SpoConfig {
  ProjectionMode mode = ProjectionMode::kPoet;
  SpoVariant variant = SpoVariant::kFullyStochastic;
  /// Absolute block size for both sides. Takes precedence over the fraction.
  std::optional<std::size_t> block_size;
  /// b_R = floor(m * f), b_P = floor(n * f).
  double block_fraction = 0.5;
  /// When set (FS only): the parameter budget implied by the block sizes above
  /// is re-split between R and P in this ratio.
  std::optional<double> budget_ratio;
  int neumann_k = NeumannOrder::kDefault;
  long merge_every = 400;
  bool exact_cayley = false;
};

struct OptimizerConfig {
  double lr_poet = 1e-3;
  double lr_direct = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 0.1;
  long post_merge_clip_steps = 10;
  double post_merge_clip_factor = 0.5;
};

struct ScheduleConfig {
  long steps = 2000;
  long warmup = 0;
  double min_lr_ratio = 0.01;
  std::size_t batch_size = 64;  // points (mlp) or sequences (tiny_lm)
  long eval_every = 100;
};

struct DataConfig {
  DataKind kind = DataKind::kTwoMoons;
  std::size_t train_size = 1024;
  std::size_t val_size = 512;
  double noise = 0.1;
  std::string path;  // text corpus, relative paths resolve against the config file
  double val_fraction = 0.1;
  std::size_t eval_windows = 32;
};

struct DiagnosticsConfig {
  bool energy = true;
  bool spectrum = true;
  bool probe = true;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  InitScheme init;
  SpoConfig spo;
  OptimizerConfig optimizer;
  ScheduleConfig schedule;
  DataConfig data;
  DiagnosticsConfig diagnostics;
};

std::string to_string(ModelKind k);
std::string to_string(DataKind k);
std::string to_string(ProjectionMode m);

/// Throws ConfigError naming the offending key.
TrainConfig parse_config(std::string_view json_text);
TrainConfig config_from_json(const nlohmann::json& doc);
/// Reads and parses a file. Relative data paths are resolved against the
/// file's directory. Throws IoError if unreadable.
TrainConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const TrainConfig& cfg);
/// Range and consistency checks shared by every entry point.
void validate_config(const TrainConfig& cfg);
/// FNV-1a of the canonical JSON dump.
std::uint64_t config_fingerprint(const TrainConfig& cfg);

/// Largest block sizes whose theta counts fit ratio * total (R) and
/// (1 - ratio) * total (P). A side with room for no parameter gets 0
/// (identity). Throws ArgumentError if neither side gets a parameter.
std::pair<std::size_t, std::size_t> budget_split(std::size_t total_budget, double ratio);

/// Block sizes for an m x n projection under `spo`.
std::pair<std::size_t, std::size_t> resolve_block_sizes(const SpoConfig& spo, std::size_t m,
                                                        std::size_t n);

}  // namespace poet

#endif  // POET_CONFIG_HPP_
