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

#include "poet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "poet/error.hpp"

namespace poet {

LabeledPoints make_two_moons(std::size_t n, double noise, RngKey key) {
  if (n < 2) throw ArgumentError("make_two_moons: need at least 2 points");
  if (!(noise >= 0.0)) throw ArgumentError("make_two_moons: noise must be >= 0");
  RngStream rng(key);
  LabeledPoints out{Matrix(n, 2), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    const bool lower = (i % 2) == 1;
    double px = lower ? 1.0 - std::cos(t) : std::cos(t);
    double py = lower ? 0.5 - std::sin(t) : std::sin(t);
    px += noise * rng.normal() - 0.5;
    py += noise * rng.normal() - 0.25;
    out.x(i, 0) = px;
    out.x(i, 1) = py;
    out.y[i] = lower ? 1.0 : 0.0;
  }
  return out;
}

Batch sample_points(const LabeledPoints& data, std::size_t batch_size, RngKey key) {
  RngStream rng(key);
  Batch b;
  b.features = Matrix(batch_size, data.x.cols());
  b.labels.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t r = rng.below(data.x.rows());
    for (std::size_t j = 0; j < data.x.cols(); ++j) b.features(i, j) = data.x(r, j);
    b.labels[i] = data.y[r];
  }
  return b;
}

Batch all_points(const LabeledPoints& data) {
  Batch b;
  b.features = data.x;
  b.labels = data.y;
  return b;
}

CharCorpus::CharCorpus(const std::string& text, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ArgumentError("CharCorpus: val_fraction must lie in (0, 1)");
  }
  if (text.size() < 16) throw ArgumentError("CharCorpus: corpus is too small");
  lookup_.assign(256, -1);
  for (unsigned char c : text) lookup_[c] = 0;
  for (int c = 0; c < 256; ++c) {
    if (lookup_[static_cast<std::size_t>(c)] == 0) {
      lookup_[static_cast<std::size_t>(c)] = static_cast<int>(vocab_.size());
      vocab_.push_back(static_cast<unsigned char>(c));
    }
  }
  const std::size_t split =
      text.size() - static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(text.size())));
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int id = lookup_[static_cast<unsigned char>(text[i])];
    (i < split ? train_ : val_).push_back(id);
  }
}

CharCorpus CharCorpus::load(const std::filesystem::path& path, double val_fraction) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return CharCorpus(ss.str(), val_fraction);
}

std::string CharCorpus::decode(const std::vector<int>& ids) const {
  std::string s;
  for (int id : ids) s.push_back(static_cast<char>(vocab_.at(static_cast<std::size_t>(id))));
  return s;
}

Batch CharCorpus::sample(std::size_t sequences, std::size_t seq_len, RngKey key) const {
  if (train_.size() <= seq_len + 1) throw ArgumentError("CharCorpus::sample: split too short");
  RngStream rng(key);
  Batch b;
  b.sequences = sequences;
  b.seq_len = seq_len;
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t off = rng.below(train_.size() - seq_len);
    b.tokens.insert(b.tokens.end(), train_.begin() + static_cast<std::ptrdiff_t>(off),
                    train_.begin() + static_cast<std::ptrdiff_t>(off + seq_len));
    b.targets.insert(b.targets.end(), train_.begin() + static_cast<std::ptrdiff_t>(off + 1),
                     train_.begin() + static_cast<std::ptrdiff_t>(off + seq_len + 1));
  }
  return b;
}

Batch CharCorpus::windows(bool validation, std::size_t count, std::size_t seq_len) const {
  const std::vector<int>& src = validation ? val_ : train_;
  if (src.size() <= seq_len + 1) throw ArgumentError("CharCorpus::windows: split too short");
  const std::size_t available = (src.size() - 1) / seq_len;
  const std::size_t n = std::min(count, available);
  const std::size_t stride = (src.size() - 1 - seq_len) / std::max<std::size_t>(n - 1, 1);
  Batch b;
  b.sequences = n;
  b.seq_len = seq_len;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t off = n == 1 ? 0 : s * stride;
    b.tokens.insert(b.tokens.end(), src.begin() + static_cast<std::ptrdiff_t>(off),
                    src.begin() + static_cast<std::ptrdiff_t>(off + seq_len));
    b.targets.insert(b.targets.end(), src.begin() + static_cast<std::ptrdiff_t>(off + 1),
                     src.begin() + static_cast<std::ptrdiff_t>(off + seq_len + 1));
  }
  return b;
}

}  // namespace poet
