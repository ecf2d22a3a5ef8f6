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

// Desk-scale models built on the tape.
//
//   mlp      ReLU MLP, every weight a Projection, biases trained directly.
//   tiny_lm  Pre-norm decoder: learned token and position embeddings,
//            RMSNorm, causal multi-head attention (q, k, v, o) and a SwiGLU
//            feed-forward (gate, up, down). The seven projections per block
//            are Projections; embeddings, gains and the output head are
//            trained directly.

#ifndef POET_MODELS_HPP_
#define POET_MODELS_HPP_

#include <cstddef>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "poet/config.hpp"
#include "poet/data.hpp"
#include "poet/params.hpp"
#include "poet/tape.hpp"

namespace poet {

class Model {
 public:
  virtual ~Model() = default;

  /// Builds the forward graph for `batch` and returns the scalar loss node.
  virtual Tape::Var loss(Tape& tape, const Batch& batch) = 0;

  std::deque<Projection>& projections() { return projections_; }
  const std::deque<Projection>& projections() const { return projections_; }
  std::deque<Parameter>& parameters() { return params_; }
  const std::deque<Parameter>& parameters() const { return params_; }

  void zero_grad();
  /// Forward only; returns the loss value.
  double evaluate(const Batch& batch);

 protected:
  // Deques keep element addresses stable; the tape holds references.
  std::deque<Projection> projections_;
  std::deque<Parameter> params_;
};

/// Builds a projection per the config: init from `cfg.init` with its own
/// layer id, POET or direct per `cfg.spo.mode`.
Projection make_projection(const TrainConfig& cfg, std::string name, std::size_t rows,
                           std::size_t cols, std::uint64_t layer_id);

struct ProjectionShape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

/// The projections a config would build, in construction order, without
/// allocating any weights.
std::vector<ProjectionShape> projection_shapes(const TrainConfig& cfg);

std::unique_ptr<Model> make_mlp(const TrainConfig& cfg);
std::unique_ptr<Model> make_tiny_lm(const TrainConfig& cfg, std::size_t vocab_size);

}  // namespace poet

#endif  // POET_MODELS_HPP_
