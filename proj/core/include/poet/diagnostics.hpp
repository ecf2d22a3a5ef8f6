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

// Measurements on weights and orthogonal factors: hyperspherical energy,
// SVD entropy, spectral complexity, vector probes, update coverage and
// singular-value tracking.

#ifndef POET_DIAGNOSTICS_HPP_
#define POET_DIAGNOSTICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/poet_layer.hpp"
#include "poet/spo.hpp"

namespace poet {

/// sum over ordered pairs i != j of 1 / ||w_i - w_j|| for the unit-normalized
/// columns w_i. Throws ArgumentError for fewer than 2 columns, a zero column
/// or two coincident normalized columns.
double hyperspherical_energy(const Matrix& w);

/// -(1 / log r) sum p_i log p_i with p_i = sigma_i^2 / sum sigma_j^2.
/// Returns 0 for r == 1. Throws ArgumentError if all sigma are zero or any is
/// negative.
double svd_entropy(std::span<const double> sigma);

/// (prod ||W_i||_2) * (sum (sqrt(d) ||W_i||_F)^{2/3} / ||W_i||_2^{2/3})^{3/2},
/// d the largest dimension across the list.
double spectral_complexity(const std::vector<Matrix>& weights);

/// v^T (R v) / v^T v.
double vector_probe(const OrthogonalAction& r, std::span<const double> v);
double vector_probe(const Matrix& r, std::span<const double> v);

/// Per-element count of steps in which the element could change.
class CoverageMap {
 public:
  CoverageMap(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), counts_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  long at(std::size_t i, std::size_t j) const { return counts_[i * cols_ + j]; }
  long& at(std::size_t i, std::size_t j) { return counts_[i * cols_ + j]; }
  const std::vector<long>& counts() const { return counts_; }
  long max() const;
  long min() const;
  double mean() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<long> counts_;
};

/// One step of updates through the layer's live primitives: element (i, j)
/// gains one count if row i is in the support of R and one if column j is in
/// the support of P. BS supports cover every coordinate; identity sides none.
void coverage_accumulate(CoverageMap& map, const PoetLayer& layer);

/// Descending singular values of the layer's merged weight.
std::vector<double> spectrum_track(const PoetLayer& layer);

/// max_i |a_i - b_i| / b_0 for two descending spectra of equal length.
double max_relative_sigma_drift(std::span<const double> now, std::span<const double> initial);
/// max_i |a_i - b_i| / b_i, each singular value against its own initial value.
double max_per_sigma_drift(std::span<const double> now, std::span<const double> initial);

}  // namespace poet

#endif  // POET_DIAGNOSTICS_HPP_
