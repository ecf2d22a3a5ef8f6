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

#include "poet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "poet/error.hpp"

namespace poet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Checkpoint::put(const std::string& name, Matrix m) {
  if (name.empty()) throw ArgumentError("Checkpoint::put: empty record name");
  records_.insert_or_assign(name, std::move(m));
}

void Checkpoint::put_vector(const std::string& name, const std::vector<double>& v) {
  put(name, Matrix::row(v));
}

void Checkpoint::put_scalar(const std::string& name, double v) { put(name, Matrix(1, 1, v)); }

const Matrix& Checkpoint::get(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw FormatError("checkpoint has no record '" + name + "'");
  return it->second;
}

std::vector<double> Checkpoint::get_vector(const std::string& name) const {
  return get(name).values();
}

double Checkpoint::get_scalar(const std::string& name) const {
  const Matrix& m = get(name);
  if (m.size() != 1) throw FormatError("checkpoint record '" + name + "' is not a scalar");
  return m(0, 0);
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : records_) out.push_back(k);
  return out;
}

std::vector<std::string> Checkpoint::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = records_.lower_bound(prefix); it != records_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

namespace {

template <typename T>
void put_raw(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}

  template <typename T>
  T take(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  const unsigned char* take_bytes(std::size_t n, const char* what) {
    need(n, what);
    const unsigned char* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError(std::string("checkpoint: ") + what + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<unsigned char> Checkpoint::serialize() const {
  std::vector<unsigned char> out = {'P', 'O', 'E', 'T'};
  put_raw(out, kCheckpointVersion);
  put_raw(out, checked_u32(records_.size(), "record count"));
  for (const auto& [name, m] : records_) {
    put_raw(out, checked_u32(name.size(), "name length"));
    out.insert(out.end(), name.begin(), name.end());
    put_raw(out, checked_u32(m.rows(), "rows"));
    put_raw(out, checked_u32(m.cols(), "cols"));
    const std::size_t start = out.size();
    for (double x : m.data()) put_raw(out, x);
    put_raw(out, fnv1a64(out.data() + start, out.size() - start));
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  const unsigned char* magic = r.take_bytes(4, "magic");
  if (std::memcmp(magic, "POET", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.take<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.take<std::uint32_t>("record count");
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.take<std::uint32_t>("name length");
    const unsigned char* name_bytes = r.take_bytes(len, "record name");
    std::string name(reinterpret_cast<const char*>(name_bytes), len);
    const auto rows = r.take<std::uint32_t>("rows");
    const auto cols = r.take<std::uint32_t>("cols");
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    if (n > (std::numeric_limits<std::size_t>::max() / sizeof(double))) {
      throw FormatError("checkpoint record '" + name + "' is too large");
    }
    const unsigned char* payload = r.take_bytes(n * sizeof(double), ("payload of " + name).c_str());
    const auto stored = r.take<std::uint64_t>("checksum");
    if (fnv1a64(payload, n * sizeof(double)) != stored) {
      throw FormatError("checksum mismatch in checkpoint record '" + name + "'");
    }
    std::vector<double> data(n);
    if (n > 0) std::memcpy(data.data(), payload, n * sizeof(double));
    ck.records_.insert_or_assign(std::move(name), Matrix(rows, cols, std::move(data)));
  }
  if (!r.done()) throw FormatError("trailing bytes after the last checkpoint record");
  return ck;
}

void Checkpoint::write(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for checkpoint '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace poet
