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

#include "poet/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "poet/error.hpp"

namespace poet {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string metrics_header(const std::vector<std::string>& matrix_names) {
  std::string h = "step,train_loss,val_loss,lr,he_total,svd_entropy_mean,e_orth_max";
  for (const auto& n : matrix_names) {
    if (n.find_first_of(",\"\r\n") != std::string::npos) {
      throw ArgumentError("metrics column name needs quoting: '" + n + "'");
    }
    h += "," + n + ".probe_R," + n + ".probe_P," + n + ".sigma_max," + n + ".sigma_min";
  }
  return h;
}

std::string metrics_row(const MetricsRecord& r) {
  std::string s = std::to_string(r.step);
  for (double v : {r.train_loss, r.val_loss, r.lr, r.he_total, r.svd_entropy_mean, r.e_orth_max}) {
    s += "," + fmt(v);
  }
  for (const auto& m : r.matrices) {
    s += "," + fmt(m.probe_r) + "," + fmt(m.probe_p) + "," + fmt(m.sigma_max) + "," +
         fmt(m.sigma_min);
  }
  return s;
}

MetricsRecord parse_metrics_row(const std::string& line, std::size_t matrix_count) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != kMetricsFixedColumns + 4 * matrix_count) {
    throw FormatError("metrics row has " + std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(kMetricsFixedColumns + 4 * matrix_count));
  }
  auto num = [&](std::size_t i) { return std::strtod(cells[i].c_str(), nullptr); };
  MetricsRecord r;
  r.step = std::stol(cells[0]);
  r.train_loss = num(1);
  r.val_loss = num(2);
  r.lr = num(3);
  r.he_total = num(4);
  r.svd_entropy_mean = num(5);
  r.e_orth_max = num(6);
  for (std::size_t k = 0; k < matrix_count; ++k) {
    const std::size_t b = kMetricsFixedColumns + 4 * k;
    r.matrices.push_back({num(b), num(b + 1), num(b + 2), num(b + 3)});
  }
  return r;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path,
                             const std::vector<std::string>& matrix_names)
    : out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot write metrics file '" + path.string() + "'");
  out_ << metrics_header(matrix_names) << '\n';
  out_.flush();
}

void MetricsWriter::append(const MetricsRecord& rec) {
  out_ << metrics_row(rec) << '\n';
  out_.flush();
  if (!out_) throw IoError("metrics write failed");
}

}  // namespace poet
