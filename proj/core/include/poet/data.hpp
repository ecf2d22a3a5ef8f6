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

// Desk-scale tasks: two-moons binary classification and a character-level
// corpus. Batches are pure functions of (seed, step) so a resumed run sees
// the same data as an uninterrupted one.

#ifndef POET_DATA_HPP_
#define POET_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/rng.hpp"

namespace poet {

/// Inputs for one forward pass. Classification uses features/labels;
/// language modelling uses tokens/targets laid out as sequences x seq_len.
struct Batch {
  Matrix features;
  std::vector<double> labels;
  std::vector<int> tokens;
  std::vector<int> targets;
  std::size_t sequences = 0;
  std::size_t seq_len = 0;
};

struct LabeledPoints {
  Matrix x;  // n x 2
  std::vector<double> y;
};

/// Two interleaved half circles with Gaussian noise, centred at the origin.
/// Label 0 for the upper moon, 1 for the lower one; classes alternate.
LabeledPoints make_two_moons(std::size_t n, double noise, RngKey key);

/// Rows of `data` drawn with replacement.
Batch sample_points(const LabeledPoints& data, std::size_t batch_size, RngKey key);
Batch all_points(const LabeledPoints& data);

class CharCorpus {
 public:
  /// Byte-level vocabulary over the sorted distinct bytes of `text`.
  /// The last `val_fraction` of the text is held out.
  CharCorpus(const std::string& text, double val_fraction);
  /// Reads a UTF-8 file; throws IoError if it cannot be opened.
  static CharCorpus load(const std::filesystem::path& path, double val_fraction);

  std::size_t vocab_size() const { return vocab_.size(); }
  const std::vector<int>& train() const { return train_; }
  const std::vector<int>& val() const { return val_; }
  std::string decode(const std::vector<int>& ids) const;

  /// Random windows from the training split.
  Batch sample(std::size_t sequences, std::size_t seq_len, RngKey key) const;
  /// Up to `count` evenly spaced windows of a split; deterministic.
  Batch windows(bool validation, std::size_t count, std::size_t seq_len) const;

 private:
  std::vector<unsigned char> vocab_;
  std::vector<int> lookup_;
  std::vector<int> train_;
  std::vector<int> val_;
};

}  // namespace poet

#endif  // POET_DATA_HPP_
