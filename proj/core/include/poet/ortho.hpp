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

// Learnable orthogonality: skew-symmetric parameters, the exact Cayley
// transform and its truncated Neumann-series approximation.

#ifndef POET_ORTHO_HPP_
#define POET_ORTHO_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "poet/linalg.hpp"

namespace poet {

/// Strict upper triangle of a b x b skew-symmetric Q, row-major:
/// theta = (Q01, Q02, ..., Q0(b-1), Q12, ...).
class SkewParams {
 public:
  SkewParams() = default;
  explicit SkewParams(std::size_t dim);
  SkewParams(std::size_t dim, std::vector<double> theta);

  static std::size_t count_for(std::size_t dim) { return dim < 2 ? 0 : dim * (dim - 1) / 2; }
  /// Reads the strict upper triangle of `q` (does not check skewness).
  static SkewParams from_upper(const Matrix& q);

  std::size_t dim() const { return dim_; }
  std::span<double> theta() { return theta_; }
  std::span<const double> theta() const { return theta_; }
  bool is_zero() const;
  void reset();

 private:
  std::size_t dim_ = 0;
  std::vector<double> theta_;
};

/// Number of Neumann terms k >= 1 in (I + Q)(I + Q + ... + Q^k).
class NeumannOrder {
 public:
  static constexpr int kDefault = 5;
  static constexpr int kMax = 8;
  explicit NeumannOrder(int k = kDefault);
  int k() const { return k_; }

 private:
  int k_;
};

Matrix skew_materialize(const SkewParams& p);

/// (I + Q)(I - Q)^{-1}. Test oracle only; never used on the training path.
/// Throws ArgumentError if q is not skew to 1e-12.
Matrix cayley_exact(const Matrix& q);

/// (I + Q)(I + sum_{i=1..k} Q^i).
Matrix cayley_neumann(const Matrix& q, NeumannOrder order);

/// ||R R^T - I||_F / ||I||_F. Throws DimensionError for non-square input.
double orth_error(const Matrix& r);

/// ||Q||^{k+1} / (1 - ||Q||): bound on the truncated tail of the Neumann
/// series when ||Q|| < 1 (returns +inf otherwise).
double neumann_remainder_bound(double q_norm, NeumannOrder order);

/// Forward/backward through the Cayley-Neumann polynomial for one block.
/// Keeps the powers of Q from the forward pass for the backward.
class CayleyNeumann {
 public:
  CayleyNeumann(const SkewParams& p, NeumannOrder order);

  const Matrix& value() const { return g_; }
  /// True when theta is all zero; value() is then exactly the identity.
  bool is_identity() const { return identity_; }

  /// dL/dQ given dL/dG, treating Q as an unconstrained matrix.
  Matrix grad_q(const Matrix& grad_g) const;
  /// dL/dtheta given dL/dG, accumulated into `out` (length b(b-1)/2).
  void accumulate_theta_grad(const Matrix& grad_g, std::span<double> out) const;

 private:
  int k_;
  bool identity_;
  Matrix q_;
  std::vector<Matrix> powers_;  // Q^1 .. Q^k
  Matrix series_;               // I + Q + ... + Q^k
  Matrix g_;
};

/// Folds dL/dQ of a skew matrix into dL/dtheta: dtheta_(i,j) = dQ_ij - dQ_ji.
void skew_grad_to_theta(const Matrix& grad_q, std::span<double> out);

}  // namespace poet

#endif  // POET_ORTHO_HPP_
