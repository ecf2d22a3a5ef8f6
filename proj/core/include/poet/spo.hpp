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

// Stochastic primitive optimization.
//
// A primitive is a large m x m orthogonal matrix with few degrees of freedom:
//   FS  I_m + D(S) (G - I_b) D(S)^T            one random index set S, |S| = b
//   BS  Psi^T Diag(G_1, ..., G_{m/b}) Psi      a random permutation, m/b blocks
// Both reduce to "index groups with a dense b x b block each": block j acts on
// coordinates groups[j], R(groups[j][t], groups[j][u]) = G_j(t, u), and every
// coordinate outside the groups is left alone. Primitives are never
// materialized as m x m matrices on the training path.

#ifndef POET_SPO_HPP_
#define POET_SPO_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/ortho.hpp"
#include "poet/rng.hpp"

namespace poet {

/// Sorted subset of [0, m) without duplicates.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::size_t m, std::vector<std::size_t> indices);

  std::size_t ambient() const { return m_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<std::size_t>& indices() const { return indices_; }
  bool contains(std::size_t i) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::size_t m_ = 0;
  std::vector<std::size_t> indices_;
};

/// Uniform b-subset of [0, m), sorted. Same key gives the same set.
IndexSet sample_index_set(std::size_t m, std::size_t b, RngKey key);

enum class SpoVariant { kFullyStochastic, kBlockStochastic };

std::string to_string(SpoVariant v);
SpoVariant parse_spo_variant(std::string_view name);

/// A side that is fixed at the identity (block budget below 2).
struct IdentityPrimitive {
  std::size_t m = 0;
};

struct FsPrimitive {
  IndexSet set;
  SkewParams block;
};

struct BsPrimitive {
  Permutation perm;
  std::size_t block_size = 0;
  std::vector<SkewParams> blocks;
};

using PrimitiveSpec = std::variant<IdentityPrimitive, FsPrimitive, BsPrimitive>;

/// Throws ArgumentError unless m is divisible by b.
BsPrimitive make_bs_primitive(Permutation perm, std::size_t block_size);
FsPrimitive make_fs_primitive(IndexSet set);

/// Fresh primitive with theta = 0, support drawn from `key`. A block size
/// below 2 has no degrees of freedom and yields an IdentityPrimitive.
PrimitiveSpec sample_primitive(SpoVariant variant, std::size_t m, std::size_t b, RngKey key);

std::size_t ambient_dim(const PrimitiveSpec& p);
std::size_t block_size(const PrimitiveSpec& p);
std::size_t trainable_count(const PrimitiveSpec& p);
bool theta_is_zero(const PrimitiveSpec& p);
void reset_theta(PrimitiveSpec& p);
/// Views over every theta vector in block order.
std::vector<std::span<double>> theta_views(PrimitiveSpec& p);
/// The index groups the blocks act on, in block order.
std::vector<std::vector<std::size_t>> index_groups(const PrimitiveSpec& p);

/// Concrete orthogonal action: index groups plus one dense block per group.
class OrthogonalAction {
 public:
  /// Runs the Cayley-Neumann map on every block; keeps what the backward needs.
  OrthogonalAction(const PrimitiveSpec& p, NeumannOrder order);
  /// Fixed blocks (e.g. exactly orthogonal ones from a factorization).
  OrthogonalAction(std::size_t m, std::vector<std::vector<std::size_t>> groups,
                   std::vector<Matrix> blocks);
  /// Blocks from the exact Cayley transform. Test and diagnostic use; has no
  /// backward.
  static OrthogonalAction exact(const PrimitiveSpec& p);

  std::size_t ambient() const { return m_; }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  /// kLeft: R * w (mixes rows). kRight: w * R (mixes columns).
  Matrix apply(const Matrix& w, Side side) const;
  /// kLeft: R^T * w. kRight: w * R^T.
  Matrix apply_transpose(const Matrix& w, Side side) const;
  /// For y = R x (kLeft) or y = x R (kRight): adds dL/dG_j into grads[j].
  void accumulate_block_grads(const Matrix& x, const Matrix& dy, Side side,
                              std::vector<Matrix>& grads) const;
  std::vector<Matrix> zero_block_grads() const;
  /// Pushes block gradients through the Cayley-Neumann map into theta
  /// gradients (one span per block, as from theta_views()).
  void accumulate_theta_grads(const std::vector<Matrix>& block_grads,
                              std::vector<std::span<double>> theta_grads) const;

  /// Dense m x m matrix. Diagnostics and tests only.
  Matrix materialize() const;
  /// ||R R^T - I||_F / sqrt(m), computed blockwise.
  double orth_error() const;

 private:
  std::size_t m_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<Matrix> blocks_;
  std::vector<bool> identity_;
  std::vector<std::optional<CayleyNeumann>> maps_;
};

/// (I_m + D(S)(G - I)D(S)^T) w for kLeft, w (...) for kRight.
Matrix fs_apply(const FsPrimitive& prim, NeumannOrder order, const Matrix& w, Side side);
/// Psi^T Diag(G_1..) Psi applied to w.
Matrix bs_apply(const BsPrimitive& prim, NeumannOrder order, const Matrix& w, Side side);

// ---------------------------------------------------------------------------
// Constructive factorization of a rotation into FS primitives.

struct FactorPrimitive {
  IndexSet set;
  Matrix block;  // exactly orthogonal, det +1
};

struct Factorization {
  /// In application order: the target equals G_c * ... * G_2 * G_1.
  std::vector<FactorPrimitive> primitives;
  std::size_t draws = 0;
};

/// ceil(alpha * m * ln(m) * (m / b)^2)
std::size_t factorization_budget(std::size_t m, std::size_t b, double alpha);

/// Writes r_target as a product of FS primitives on random index sets by
/// zeroing R^T below the diagonal one column at a time. Each primitive whose
/// set contains the current column k aligns the in-set tail of column k with
/// e_k and leaves the finished columns untouched. Throws BudgetExhaustedError
/// (with the remaining sub-diagonal mass) when the draw budget runs out.
Factorization factorize_target(const Matrix& r_target, std::size_t b, double alpha, RngKey key);

/// Orthogonal with determinant +1, from the polar factor of a Gaussian draw.
Matrix random_rotation(std::size_t m, RngKey key);

/// G_c * ... * G_1 as a dense matrix.
Matrix compose(const std::vector<FactorPrimitive>& primitives, std::size_t m);

}  // namespace poet

#endif  // POET_SPO_HPP_
