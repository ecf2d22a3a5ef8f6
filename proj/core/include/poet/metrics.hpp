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

// Per-evaluation metrics rows and their CSV form.
//
// Header: step,train_loss,val_loss,lr,he_total,svd_entropy_mean,e_orth_max
// followed by <matrix>.probe_R,<matrix>.probe_P,<matrix>.sigma_max,
// <matrix>.sigma_min for every tracked matrix. Floats use %.17g so a row
// round-trips exactly.

#ifndef POET_METRICS_HPP_
#define POET_METRICS_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace poet {

struct MatrixMetrics {
  double probe_r = 1.0;
  double probe_p = 1.0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

struct MetricsRecord {
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double he_total = 0.0;
  double svd_entropy_mean = 0.0;
  double e_orth_max = 0.0;
  std::vector<MatrixMetrics> matrices;
};

inline constexpr std::size_t kMetricsFixedColumns = 7;

std::string metrics_header(const std::vector<std::string>& matrix_names);
std::string metrics_row(const MetricsRecord& rec);
/// Inverse of metrics_row (no quoting is ever needed for these fields).
MetricsRecord parse_metrics_row(const std::string& line, std::size_t matrix_count);

/// Appends rows to a CSV file, flushing after each one.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const std::vector<std::string>& matrix_names);
  void append(const MetricsRecord& rec);

 private:
  std::ofstream out_;
};

}  // namespace poet

#endif  // POET_METRICS_HPP_
