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

// Trainable state of a model: directly trained tensors and projection
// weights that are either POET-reparameterized or trained directly.

#ifndef POET_PARAMS_HPP_
#define POET_PARAMS_HPP_

#include <optional>
#include <string>

#include "poet/linalg.hpp"
#include "poet/optim.hpp"
#include "poet/poet_layer.hpp"

namespace poet {

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value, bool decay);

  std::string name;
  Matrix value;
  Matrix grad;
  bool decay = true;
  AdamState adam;

  void zero_grad() { grad.fill(0.0); }
};

enum class ProjectionMode { kPoet, kDirect };

/// A weight matrix used as y = x W.
class Projection {
 public:
  /// POET: W0 is frozen and only the orthogonal factors train.
  Projection(std::string name, PoetLayer layer);
  /// Direct: W itself trains.
  Projection(std::string name, Matrix w0);

  const std::string& name() const { return name_; }
  ProjectionMode mode() const { return poet_ ? ProjectionMode::kPoet : ProjectionMode::kDirect; }
  bool is_poet() const { return poet_.has_value(); }
  std::size_t rows() const;
  std::size_t cols() const;

  PoetLayer& poet() { return *poet_; }
  const PoetLayer& poet() const { return *poet_; }
  Parameter& direct() { return direct_; }
  const Parameter& direct() const { return direct_; }

  /// R W P for POET, W for direct.
  Matrix effective_weight() const;
  void zero_grad();

  AdamState adam_r;
  AdamState adam_p;

 private:
  std::string name_;
  std::optional<PoetLayer> poet_;
  Parameter direct_;
};

}  // namespace poet

#endif  // POET_PARAMS_HPP_
