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

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectrum-preserving orthogonal reparameterized training"};
  app.require_subcommand(1);

  poet::cli::TrainArgs train_args;
  std::uint64_t seed = 0;
  std::string resume;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", train_args.config, "Experiment config (JSON)")->required();
  train->add_option("--out", train_args.out_dir, "Output directory for metrics and checkpoints");
  auto* seed_opt = train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--resume", resume, "Checkpoint to continue from");

  std::string count_config;
  auto* count = app.add_subcommand("count-params", "Per-matrix trainable parameter counts");
  count->add_option("--config", count_config, "Experiment config (JSON)")->required();

  std::string ck_path;
  std::string matrix;
  auto* probe = app.add_subcommand("probe", "Vector-probe trajectory from a checkpoint");
  probe->add_option("--checkpoint", ck_path, "Checkpoint file")->required();
  probe->add_option("--matrix", matrix, "Tracked factor, e.g. fc2.R")->required();

  std::size_t m = 8;
  std::size_t b = 3;
  double alpha = 4.0;
  std::uint64_t fseed = 0;
  std::size_t trials = 200;
  auto* fact = app.add_subcommand("factorize", "Monte-Carlo report of random-rotation factorization");
  fact->add_option("--m", m, "Dimension");
  fact->add_option("--b", b, "Block size");
  fact->add_option("--alpha", alpha, "Budget multiplier");
  fact->add_option("--seed", fseed, "Seed");
  fact->add_option("--trials", trials, "Number of random targets");

  std::string spec_ck;
  std::string spec_matrix;
  auto* spectrum = app.add_subcommand("spectrum", "Singular-value trajectory from a checkpoint");
  spectrum->add_option("--checkpoint", spec_ck, "Checkpoint file")->required();
  spectrum->add_option("--matrix", spec_matrix, "Projection name, e.g. fc2")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : poet::cli::kConfigError;
  }

  if (*train) {
    if (*seed_opt) train_args.seed = seed;
    if (!resume.empty()) train_args.resume = resume;
    return poet::cli::cmd_train(train_args, std::cout, std::cerr);
  }
  if (*count) return poet::cli::cmd_count_params(count_config, std::cout, std::cerr);
  if (*probe) return poet::cli::cmd_probe(ck_path, matrix, std::cout, std::cerr);
  if (*fact) return poet::cli::cmd_factorize(m, b, alpha, fseed, trials, std::cout, std::cerr);
  return poet::cli::cmd_spectrum(spec_ck, spec_matrix, std::cout, std::cerr);
}
