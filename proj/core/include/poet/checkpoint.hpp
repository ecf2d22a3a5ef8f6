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

// Binary checkpoint files.
//
// Layout (little-endian):
//   "POET"  u32 version  u32 record_count
//   per record: u32 name_len, name bytes (UTF-8), u32 rows, u32 cols,
//               rows*cols f64 payload (row-major), u64 FNV-1a of the payload bytes

#ifndef POET_CHECKPOINT_HPP_
#define POET_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "poet/linalg.hpp"

namespace poet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Ordered name -> matrix records.
class Checkpoint {
 public:
  void put(const std::string& name, Matrix m);
  void put_vector(const std::string& name, const std::vector<double>& v);
  void put_scalar(const std::string& name, double v);

  bool contains(const std::string& name) const { return records_.count(name) != 0; }
  /// Throws FormatError naming the record if absent.
  const Matrix& get(const std::string& name) const;
  std::vector<double> get_vector(const std::string& name) const;
  double get_scalar(const std::string& name) const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::size_t size() const { return records_.size(); }

  std::vector<unsigned char> serialize() const;
  static Checkpoint deserialize(const std::vector<unsigned char>& bytes);

  /// Writes to a temporary sibling and renames it into place.
  void write(const std::filesystem::path& path) const;
  static Checkpoint read(const std::filesystem::path& path);

 private:
  std::map<std::string, Matrix> records_;
};

/// FNV-1a 64 over raw bytes.
std::uint64_t fnv1a64(const unsigned char* data, std::size_t len);

}  // namespace poet

#endif  // POET_CHECKPOINT_HPP_
