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

// A linear layer whose effective weight is R * W * P with R, P orthogonal.
//
// Activations are row vectors: y = x * (R W P) for x of shape batch x m.
// R acts on the m input coordinates and P on the n output coordinates; both
// are represented by a single live primitive that is periodically folded into
// W and replaced by a fresh identity-initialized one.

#ifndef POET_POET_LAYER_HPP_
#define POET_POET_LAYER_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/ortho.hpp"
#include "poet/rng.hpp"
#include "poet/spo.hpp"

namespace poet {

struct PoetLayerOptions {
  SpoVariant variant = SpoVariant::kFullyStochastic;
  std::size_t block_r = 0;  // below 2: R fixed at identity
  std::size_t block_p = 0;  // below 2: P fixed at identity
  NeumannOrder order{};
  /// Use the exact Cayley transform for the blocks (no backward available).
  bool exact_cayley = false;
};

/// State saved by forward() for backward().
struct PoetCache {
  Matrix x;  // layer input
  Matrix v;  // x * R * W, the input of the P action
  std::shared_ptr<const OrthogonalAction> r;
  std::shared_ptr<const OrthogonalAction> p;
};

class PoetLayer {
 public:
  PoetLayer(Matrix w0, const PoetLayerOptions& opts, RngKey key);

  std::size_t rows() const { return w_.rows(); }
  std::size_t cols() const { return w_.cols(); }
  const Matrix& weight() const { return w_; }
  const PrimitiveSpec& primitive(Side side) const { return side == Side::kLeft ? r_ : p_; }
  const PoetLayerOptions& options() const { return opts_; }
  std::uint64_t cycle() const { return cycle_; }
  long steps_since_merge() const { return steps_since_merge_; }
  void count_step() { ++steps_since_merge_; }

  /// Current orthogonal factor of one side (R for kLeft, P for kRight).
  OrthogonalAction action(Side side) const;

  /// y = ((x R) W) P. If `cache` is non-null it is filled for backward().
  Matrix forward(const Matrix& x, PoetCache* cache = nullptr) const;
  /// Adds dL/dtheta into the gradient accumulators and returns dL/dx.
  Matrix backward(const PoetCache& cache, const Matrix& dy);

  /// R * W * P as a dense matrix.
  Matrix merged_weight() const;

  /// W <- R W P, theta <- 0, fresh supports for the next cycle. Also folds the
  /// current factors into the probe accumulators.
  void merge_reinit();

  // Flat theta access in block order, per side.
  std::size_t theta_count(Side side) const;
  std::vector<double> theta(Side side) const;
  void set_theta(Side side, std::span<const double> values);
  std::span<double> theta_grad(Side side) { return side == Side::kLeft ? grad_r_ : grad_p_; }
  std::span<const double> theta_grad(Side side) const {
    return side == Side::kLeft ? grad_r_ : grad_p_;
  }
  void zero_grad();

  /// Max of the blockwise orthogonality errors of R and P.
  double orth_error() const;
  /// orth_error() of the factors folded in by the most recent merge.
  double merged_orth_error() const { return merged_orth_error_; }

  // Vector probe: v^T (R_total v) / v^T v with R_total the product of every
  // factor applied since construction (merged ones included).
  void set_probe(std::vector<double> v_r, std::vector<double> v_p);
  bool has_probe() const { return !probe_v_r_.empty(); }
  double probe(Side side) const;
  // Raw probe state, for checkpointing.
  struct ProbeState {
    std::vector<double> v_r, acc_r, v_p, acc_p;
  };
  const ProbeState& probe_state() const { return probe_; }
  void restore_probe_state(ProbeState s);
  const std::vector<double>& probe_vector(Side side) const {
    return side == Side::kLeft ? probe_v_r_ : probe_v_p_;
  }

  /// Checkpoint restore: replaces W, supports, cycle and step counter.
  void restore(Matrix w, PrimitiveSpec r, PrimitiveSpec p, std::uint64_t cycle,
               long steps_since_merge);

 private:
  PrimitiveSpec sample_side(Side side) const;
  OrthogonalAction make_action(const PrimitiveSpec& spec) const;

  Matrix w_;
  PoetLayerOptions opts_;
  RngKey key_;
  PrimitiveSpec r_;
  PrimitiveSpec p_;
  std::vector<double> grad_r_;
  std::vector<double> grad_p_;
  std::uint64_t cycle_ = 0;
  long steps_since_merge_ = 0;
  double merged_orth_error_ = 0.0;
  std::vector<double> probe_v_r_;
  std::vector<double> probe_v_p_;
  ProbeState probe_;
};

struct PoetGrads {
  std::vector<double> theta_r;
  std::vector<double> theta_p;
  Matrix dx;
};

/// Gradients of a scalar loss with upstream gradient dy = dL/dy at input x,
/// without touching the layer's accumulators.
PoetGrads poet_backward(const PoetLayer& layer, const Matrix& x, const Matrix& dy);

struct ParamCount {
  std::size_t trainable = 0;
  std::size_t memory_units = 0;  // weight + trainable + two optimizer moments
};

/// Trainable orthogonal parameters of one m x n layer.
///   FS: b_R(b_R-1)/2 + b_P(b_P-1)/2
///   BS: (m/b_R) b_R(b_R-1)/2 + (n/b_P) b_P(b_P-1)/2
/// A block size below 2 contributes nothing. memory_units = mn + 3 trainable.
ParamCount count_params(SpoVariant variant, std::size_t m, std::size_t n, std::size_t b_r,
                        std::size_t b_p);
inline ParamCount count_params(SpoVariant variant, std::size_t m, std::size_t n, std::size_t b) {
  return count_params(variant, m, n, b, b);
}

}  // namespace poet

#endif  // POET_POET_LAYER_HPP_
