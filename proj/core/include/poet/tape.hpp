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

// Minimal reverse-mode differentiation over row-major activations.
//
// Every op appends a node holding its value and a closure that pushes the
// node's gradient to its inputs. Parameters receive gradients in place
// (Parameter::grad, PoetLayer theta accumulators).

#ifndef POET_TAPE_HPP_
#define POET_TAPE_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "poet/linalg.hpp"
#include "poet/params.hpp"

namespace poet {

class Tape {
 public:
  using Var = std::size_t;

  Var input(Matrix value);

  /// x W (direct) or x R W P (POET).
  Var project(Var x, Projection& proj);
  /// x W for a directly trained matrix parameter.
  Var project_param(Var x, Parameter& w);
  /// Adds the 1 x n row `bias` to every row.
  Var add_bias(Var x, Parameter& bias);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var relu(Var x);
  Var silu(Var x);
  /// Row-wise x / sqrt(mean(x^2) + eps) * gain, gain is 1 x n.
  Var rmsnorm(Var x, Parameter& gain, double eps = 1e-6);
  /// Rows of `table` selected by `ids`.
  Var embed(std::span<const int> ids, Parameter& table);
  /// Adds row (r mod seq_len) of `table` to row r.
  Var add_positional(Var x, Parameter& table, std::size_t seq_len);
  /// Multi-head causal self-attention on stacked sequences of length
  /// seq_len; q, k, v are (sequences * seq_len) x d.
  Var causal_attention(Var q, Var k, Var v, std::size_t seq_len, std::size_t heads);
  /// Mean softmax cross-entropy of rows of `logits` against class ids.
  Var cross_entropy(Var logits, std::span<const int> targets);
  /// Mean binary cross-entropy of an N x 1 logit column against 0/1 labels.
  Var bce_with_logits(Var logits, std::span<const double> labels);

  const Matrix& value(Var v) const { return nodes_[v].value; }
  double scalar(Var v) const { return nodes_[v].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and runs every closure in reverse order.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Matrix&)> back;
  };

  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> back = {});
  Matrix& grad_of(Var v);

  std::vector<Node> nodes_;
};

}  // namespace poet

#endif  // POET_TAPE_HPP_
