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


// Helpers shared by the unit tests: random inputs and naive reference
// implementations that do not go through the library's fast paths.

#ifndef POET_TESTS_TEST_UTIL_HPP_
#define POET_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/ortho.hpp"
#include "poet/rng.hpp"
#include "poet/spo.hpp"

namespace poet::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  RngStream rng(RngKey(seed).derive("test-matrix"));
  Matrix out(rows, cols);
  for (double& x : out.data()) x = scale * rng.normal();
  return out;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  RngStream rng(RngKey(seed).derive("test-vector"));
  std::vector<double> out(n);
  for (double& x : out) x = rng.normal();
  return out;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t p = 0; p < a.cols(); ++p) acc += static_cast<long double>(a(i, p)) * b(p, j);
      c(i, j) = static_cast<double>(acc);
    }
  }
  return c;
}

inline Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Skew matrix with random entries rescaled to the requested spectral norm.
inline Matrix random_skew(std::size_t b, std::uint64_t seed, double norm) {
  Matrix a = random_matrix(b, b, seed);
  Matrix q(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) q(i, j) = a(i, j) - a(j, i);
  return scale(q, norm / spectral_norm(q));
}

/// Fills every theta of a primitive with N(0, scale^2) draws.
inline void randomize_theta(PrimitiveSpec& p, std::uint64_t seed, double scale) {
  RngStream rng(RngKey(seed).derive("test-theta"));
  for (auto view : theta_views(p))
    for (double& t : view) t = scale * rng.normal();
}

/// Dense m x m matrix of a primitive built from its definition: the
/// identity with the b x b block of group j written at rows/columns
/// groups[j]. Blocks come from the given map (exact or truncated).
inline Matrix explicit_primitive(const PrimitiveSpec& p, bool exact, NeumannOrder order = NeumannOrder()) {
  const std::size_t m = ambient_dim(p);
  Matrix r = Matrix::identity(m);
  PrimitiveSpec copy = p;
  const auto groups = index_groups(p);
  const auto views = theta_views(copy);
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const std::size_t b = groups[j].size();
    SkewParams sp(b, std::vector<double>(views[j].begin(), views[j].end()));
    const Matrix q = skew_materialize(sp);
    const Matrix g = exact ? cayley_exact(q) : cayley_neumann(q, order);
    for (std::size_t t = 0; t < b; ++t)
      for (std::size_t u = 0; u < b; ++u) r(groups[j][t], groups[j][u]) = g(t, u);
  }
  return r;
}

inline double max_abs(const Matrix& a) {
  double out = 0.0;
  for (double x : a.data()) out = std::max(out, std::fabs(x));
  return out;
}

}  // namespace poet::testing

#endif  // POET_TESTS_TEST_UTIL_HPP_
