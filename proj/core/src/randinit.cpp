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

#include "poet/randinit.hpp"

#include <algorithm>
#include <cmath>

#include "poet/error.hpp"

namespace poet {

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::kStandard:
      return "standard";
    case InitKind::kXavier:
      return "xavier";
    case InitKind::kNormalizedGaussian:
      return "normalized_gaussian";
    case InitKind::kUniformSpectrum:
      return "uniform_spectrum";
  }
  return "unknown";
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "standard") return InitKind::kStandard;
  if (name == "xavier") return InitKind::kXavier;
  if (name == "normalized_gaussian") return InitKind::kNormalizedGaussian;
  if (name == "uniform_spectrum") return InitKind::kUniformSpectrum;
  throw ArgumentError("unknown init scheme '" + std::string(name) +
                      "' (expected standard, xavier, normalized_gaussian or uniform_spectrum)");
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double sd, RngStream& rng) {
  Matrix w(rows, cols);
  for (double& x : w.data()) x = sd * rng.normal();
  return w;
}

}  // namespace

Matrix init_matrix(const InitScheme& scheme, std::size_t rows, std::size_t cols,
                   std::uint64_t layer_id) {
  if (rows == 0 || cols == 0) throw ArgumentError("init_matrix: rows and cols must be >= 1");
  if ((scheme.kind == InitKind::kStandard || scheme.kind == InitKind::kUniformSpectrum) &&
      !(scheme.std_dev > 0.0 && std::isfinite(scheme.std_dev))) {
    throw ArgumentError("init_matrix: std_dev must be positive for " + to_string(scheme.kind));
  }
  RngStream rng(RngKey(scheme.seed).derive("init").derive(layer_id));

  switch (scheme.kind) {
    case InitKind::kStandard:
      return gaussian(rows, cols, scheme.std_dev, rng);
    case InitKind::kXavier:
      return gaussian(rows, cols, std::sqrt(2.0 / static_cast<double>(rows + cols)), rng);
    case InitKind::kNormalizedGaussian: {
      Matrix w = gaussian(rows, cols, 1.0, rng);
      for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += w(i, j) * w(i, j);
        const double inv = 1.0 / std::sqrt(s);
        for (std::size_t i = 0; i < rows; ++i) w(i, j) *= inv;
      }
      return w;
    }
    case InitKind::kUniformSpectrum: {
      const SvdResult f = svd(gaussian(rows, cols, scheme.std_dev, rng));
      return matmul(f.u, f.vt);
    }
  }
  throw ArgumentError("init_matrix: unhandled scheme");
}

SpectrumEdges spectrum_edges(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ArgumentError("spectrum_edges: lambda must lie in (0, 1], got " + std::to_string(lambda));
  }
  const double r = std::sqrt(lambda);
  return {lambda, 1.0 + r, 1.0 - r};
}

EdgeCheck check_edges(const Matrix& w, double scale) {
  const auto sigma = singular_values(w);
  const double lambda = static_cast<double>(std::min(w.rows(), w.cols())) /
                        static_cast<double>(std::max(w.rows(), w.cols()));
  EdgeCheck out{};
  out.predicted = spectrum_edges(lambda);
  out.sigma_max_obs = sigma.front() / scale;
  out.sigma_min_obs = sigma.back() / scale;
  out.rel_dev_max = std::fabs(out.sigma_max_obs - out.predicted.sigma_max_pred) /
                    out.predicted.sigma_max_pred;
  // The lower edge is 0 for square matrices; fall back to absolute deviation.
  const double denom = out.predicted.sigma_min_pred > 0.0 ? out.predicted.sigma_min_pred : 1.0;
  out.rel_dev_min = std::fabs(out.sigma_min_obs - out.predicted.sigma_min_pred) / denom;
  return out;
}

}  // namespace poet
