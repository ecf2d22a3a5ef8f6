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

// Subcommands of the poet tool. Each returns a process exit status and
// writes to the given streams, so tests can drive them in-process.

#ifndef POET_TOOLS_COMMANDS_HPP_
#define POET_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace poet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kDiverged = 4,
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir = "runs/latest";
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> resume;
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_count_params(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_probe(const std::filesystem::path& checkpoint, const std::string& matrix,
              std::ostream& out, std::ostream& err);
int cmd_factorize(std::size_t m, std::size_t b, double alpha, std::uint64_t seed,
                  std::size_t trials, std::ostream& out, std::ostream& err);
int cmd_spectrum(const std::filesystem::path& checkpoint, const std::string& matrix,
                 std::ostream& out, std::ostream& err);

}  // namespace poet::cli

#endif  // POET_TOOLS_COMMANDS_HPP_
