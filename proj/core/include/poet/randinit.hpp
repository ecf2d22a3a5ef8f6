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

#ifndef POET_RANDINIT_HPP_
#define POET_RANDINIT_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "poet/linalg.hpp"
#include "poet/rng.hpp"

namespace poet {

enum class InitKind { kStandard, kXavier, kNormalizedGaussian, kUniformSpectrum };

std::string to_string(InitKind kind);
InitKind parse_init_kind(std::string_view name);

struct InitScheme {
  InitKind kind = InitKind::kNormalizedGaussian;
  double std_dev = 0.02;  // kStandard and the base draw of kUniformSpectrum
  std::uint64_t seed = 0;
};

/// Draws a rows x cols weight matrix. Columns are neurons.
///
/// Entries come from the stream keyed by (seed, layer_id), so each layer's
/// draw is independent of the order layers are built in.
///   standard            i.i.d. N(0, std_dev^2)
///   xavier              i.i.d. N(0, 2 / (rows + cols))
///   normalized_gaussian N(0, 1) columns rescaled to unit norm
///   uniform_spectrum    U * V^T from the thin SVD of a standard draw
Matrix init_matrix(const InitScheme& scheme, std::size_t rows, std::size_t cols,
                   std::uint64_t layer_id = 0);

/// Asymptotic singular-value edges 1 +- sqrt(lambda) for a d x n matrix with
/// unit-norm Gaussian columns and aspect ratio lambda = n / d.
struct SpectrumEdges {
  double lambda;
  double sigma_max_pred;
  double sigma_min_pred;
};

SpectrumEdges spectrum_edges(double lambda);

struct EdgeCheck {
  double sigma_max_obs;
  double sigma_min_obs;
  double rel_dev_max;
  double rel_dev_min;
  SpectrumEdges predicted;
};

/// Compares the extreme singular values of `w / scale` against the edges for
/// lambda = min(rows, cols) / max(rows, cols). Pass scale = sqrt(rows) for a
/// standard N(0, 1) draw.
EdgeCheck check_edges(const Matrix& w, double scale = 1.0);

}  // namespace poet

#endif  // POET_RANDINIT_HPP_
