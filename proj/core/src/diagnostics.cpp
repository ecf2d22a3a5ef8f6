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

#include "poet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "poet/error.hpp"

namespace poet {

double hyperspherical_energy(const Matrix& w) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  if (n < 2) throw ArgumentError("hyperspherical_energy: need at least 2 neurons (columns)");
  // Columns normalized into contiguous rows of `u`.
  Matrix u = transpose(w);
  for (std::size_t j = 0; j < n; ++j) {
    auto col = u.row_span(j);
    const double norm = std::sqrt(dot(col, col));
    if (norm == 0.0) {
      throw ArgumentError("hyperspherical_energy: neuron " + std::to_string(j) + " has zero norm");
    }
    for (double& x : col) x /= norm;
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = u.row_span(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto b = u.row_span(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < m; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
      if (d2 == 0.0) {
        throw ArgumentError("hyperspherical_energy: neurons " + std::to_string(i) + " and " +
                            std::to_string(j) + " coincide (infinite energy)");
      }
      energy += 2.0 / std::sqrt(d2);
    }
  }
  return energy;
}

double svd_entropy(std::span<const double> sigma) {
  if (sigma.empty()) throw ArgumentError("svd_entropy: empty spectrum");
  double total = 0.0;
  for (double s : sigma) {
    if (s < 0.0 || !std::isfinite(s)) throw ArgumentError("svd_entropy: invalid singular value");
    total += s * s;
  }
  if (total == 0.0) throw ArgumentError("svd_entropy: all singular values are zero");
  if (sigma.size() == 1) return 0.0;
  double h = 0.0;
  for (double s : sigma) {
    const double p = s * s / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(sigma.size()));
}

double spectral_complexity(const std::vector<Matrix>& weights) {
  if (weights.empty()) throw ArgumentError("spectral_complexity: empty weight list");
  std::size_t d = 0;
  for (const Matrix& w : weights) d = std::max({d, w.rows(), w.cols()});
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  double prod = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double s = spectral_norm(weights[i]);
    if (s == 0.0) {
      throw ArgumentError("spectral_complexity: weight " + std::to_string(i) +
                          " has zero spectral norm");
    }
    prod *= s;
    sum += std::pow(sqrt_d * frobenius_norm(weights[i]) / s, 2.0 / 3.0);
  }
  return prod * std::pow(sum, 1.5);
}

double vector_probe(const OrthogonalAction& r, std::span<const double> v) {
  const Matrix rv = r.apply(Matrix::column(v), Side::kLeft);
  return dot(v, rv.data()) / dot(v, v);
}

double vector_probe(const Matrix& r, std::span<const double> v) {
  if (!r.is_square() || r.rows() != v.size()) {
    throw DimensionError("vector_probe: matrix " + r.shape_string() + " and vector of length " +
                         std::to_string(v.size()));
  }
  const Matrix rv = matmul(r, Matrix::column(v));
  return dot(v, rv.data()) / dot(v, v);
}

long CoverageMap::max() const { return *std::max_element(counts_.begin(), counts_.end()); }
long CoverageMap::min() const { return *std::min_element(counts_.begin(), counts_.end()); }
double CoverageMap::mean() const {
  return static_cast<double>(std::accumulate(counts_.begin(), counts_.end(), 0L)) /
         static_cast<double>(counts_.size());
}

namespace {

std::vector<bool> support_mask(const PrimitiveSpec& spec) {
  std::vector<bool> mask(ambient_dim(spec), false);
  for (const auto& g : index_groups(spec))
    for (std::size_t i : g) mask[i] = true;
  return mask;
}

}  // namespace

void coverage_accumulate(CoverageMap& map, const PoetLayer& layer) {
  if (map.rows() != layer.rows() || map.cols() != layer.cols()) {
    throw DimensionError("coverage_accumulate: map " + std::to_string(map.rows()) + "x" +
                         std::to_string(map.cols()) + " for layer " +
                         layer.weight().shape_string());
  }
  const auto rows = support_mask(layer.primitive(Side::kLeft));
  const auto cols = support_mask(layer.primitive(Side::kRight));
  for (std::size_t i = 0; i < map.rows(); ++i) {
    for (std::size_t j = 0; j < map.cols(); ++j) {
      map.at(i, j) += (rows[i] ? 1 : 0) + (cols[j] ? 1 : 0);
    }
  }
}

std::vector<double> spectrum_track(const PoetLayer& layer) {
  return singular_values(layer.merged_weight());
}

double max_relative_sigma_drift(std::span<const double> now, std::span<const double> initial) {
  if (now.size() != initial.size() || initial.empty()) {
    throw DimensionError("max_relative_sigma_drift: spectra of different lengths");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    worst = std::max(worst, std::fabs(now[i] - initial[i]));
  }
  return worst / initial[0];
}

double max_per_sigma_drift(std::span<const double> now, std::span<const double> initial) {
  if (now.size() != initial.size() || initial.empty()) {
    throw DimensionError("max_per_sigma_drift: spectra of different lengths");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (initial[i] == 0.0) {
      if (now[i] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::fabs(now[i] - initial[i]) / initial[i]);
  }
  return worst;
}

}  // namespace poet
