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

#include "poet/params.hpp"

namespace poet {

Parameter::Parameter(std::string name_in, Matrix value_in, bool decay_in)
    : name(std::move(name_in)),
      value(std::move(value_in)),
      grad(value.rows(), value.cols()),
      decay(decay_in) {}

Projection::Projection(std::string name, PoetLayer layer)
    : name_(std::move(name)), poet_(std::move(layer)) {}

Projection::Projection(std::string name, Matrix w0)
    : name_(name), direct_(std::move(name), std::move(w0), true) {}

std::size_t Projection::rows() const { return poet_ ? poet_->rows() : direct_.value.rows(); }
std::size_t Projection::cols() const { return poet_ ? poet_->cols() : direct_.value.cols(); }

Matrix Projection::effective_weight() const {
  return poet_ ? poet_->merged_weight() : direct_.value;
}

void Projection::zero_grad() {
  if (poet_) {
    poet_->zero_grad();
  } else {
    direct_.zero_grad();
  }
}

}  // namespace poet
