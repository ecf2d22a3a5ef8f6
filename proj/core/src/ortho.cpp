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

#include "poet/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poet/error.hpp"

namespace poet {

SkewParams::SkewParams(std::size_t dim) : dim_(dim), theta_(count_for(dim), 0.0) {}

SkewParams::SkewParams(std::size_t dim, std::vector<double> theta)
    : dim_(dim), theta_(std::move(theta)) {
  if (theta_.size() != count_for(dim)) {
    throw DimensionError("SkewParams: dim " + std::to_string(dim) + " needs " +
                         std::to_string(count_for(dim)) + " parameters, got " +
                         std::to_string(theta_.size()));
  }
}

SkewParams SkewParams::from_upper(const Matrix& q) {
  if (!q.is_square()) throw DimensionError("SkewParams::from_upper: non-square " + q.shape_string());
  SkewParams p(q.rows());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = i + 1; j < q.cols(); ++j) p.theta_[idx++] = q(i, j);
  return p;
}

bool SkewParams::is_zero() const {
  return std::all_of(theta_.begin(), theta_.end(), [](double t) { return t == 0.0; });
}

void SkewParams::reset() { std::fill(theta_.begin(), theta_.end(), 0.0); }

NeumannOrder::NeumannOrder(int k) : k_(k) {
  if (k < 1 || k > kMax) {
    throw ArgumentError("NeumannOrder: k must be in [1, " + std::to_string(kMax) + "], got " +
                        std::to_string(k));
  }
}

Matrix skew_materialize(const SkewParams& p) {
  const std::size_t b = p.dim();
  Matrix q(b, b);
  auto theta = p.theta();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      q(i, j) = theta[idx];
      q(j, i) = -theta[idx];
      ++idx;
    }
  }
  return q;
}

namespace {

void require_skew(const Matrix& q, const char* op) {
  if (!q.is_square()) throw DimensionError(std::string(op) + ": non-square " + q.shape_string());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = i; j < q.cols(); ++j) {
      if (std::fabs(q(i, j) + q(j, i)) > 1e-12) {
        throw ArgumentError(std::string(op) + ": input is not skew-symmetric at (" +
                            std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

Matrix identity_plus(const Matrix& q) {
  Matrix out = q;
  for (std::size_t i = 0; i < q.rows(); ++i) out(i, i) += 1.0;
  return out;
}

}  // namespace

Matrix cayley_exact(const Matrix& q) {
  require_skew(q, "cayley_exact");
  Matrix i_minus_q = scale(q, -1.0);
  for (std::size_t i = 0; i < q.rows(); ++i) i_minus_q(i, i) += 1.0;
  // (I+Q) and (I-Q)^{-1} commute, so solve (I-Q) X = (I+Q).
  return solve(i_minus_q, identity_plus(q));
}

Matrix cayley_neumann(const Matrix& q, NeumannOrder order) {
  require_skew(q, "cayley_neumann");
  return CayleyNeumann(SkewParams::from_upper(q), order).value();
}

double orth_error(const Matrix& r) {
  if (!r.is_square()) throw DimensionError("orth_error: non-square " + r.shape_string());
  Matrix rrt = matmul_nt(r, r);
  for (std::size_t i = 0; i < r.rows(); ++i) rrt(i, i) -= 1.0;
  return frobenius_norm(rrt) / std::sqrt(static_cast<double>(r.rows()));
}

double neumann_remainder_bound(double q_norm, NeumannOrder order) {
  if (q_norm >= 1.0) return std::numeric_limits<double>::infinity();
  return std::pow(q_norm, order.k() + 1) / (1.0 - q_norm);
}

CayleyNeumann::CayleyNeumann(const SkewParams& p, NeumannOrder order)
    : k_(order.k()), identity_(p.is_zero()), q_(skew_materialize(p)) {
  const std::size_t b = p.dim();
  if (identity_) {
    g_ = Matrix::identity(b);
    series_ = Matrix::identity(b);
    return;
  }
  powers_.reserve(static_cast<std::size_t>(k_));
  powers_.push_back(q_);
  for (int i = 1; i < k_; ++i) powers_.push_back(matmul(powers_.back(), q_));
  series_ = Matrix::identity(b);
  for (const Matrix& pw : powers_) axpy(1.0, pw, series_);
  g_ = matmul(identity_plus(q_), series_);
}

Matrix CayleyNeumann::grad_q(const Matrix& grad_g) const {
  const std::size_t b = q_.rows();
  if (grad_g.rows() != b || grad_g.cols() != b) {
    throw DimensionError("CayleyNeumann::grad_q: expected " + q_.shape_string() + ", got " +
                         grad_g.shape_string());
  }
  // G = (I + Q) S with S = I + sum_{i=1..k} Q^i.
  // dQ = dG S^T + sum_{a + c <= k-1} (Q^T)^a M (Q^T)^c,  M = (I + Q)^T dG,
  // with the double sum built level by level:
  //   T_l = M (I + Q + ... + Q^{l-1})^T + Q^T T_{l-1}.
  Matrix out = matmul_nt(grad_g, series_);
  if (identity_) {
    // Q = 0: every power vanishes and the sum collapses to M = dG.
    axpy(1.0, grad_g, out);
    return out;
  }
  const Matrix m = matmul_tn(identity_plus(q_), grad_g);
  Matrix partial = Matrix::identity(b);
  Matrix t = m;  // T_1 = M
  for (int level = 2; level <= k_; ++level) {
    axpy(1.0, powers_[static_cast<std::size_t>(level - 2)], partial);
    Matrix next = matmul_nt(m, partial);
    matmul_accumulate(transpose(q_), t, next);
    t = std::move(next);
  }
  axpy(1.0, t, out);
  return out;
}

void CayleyNeumann::accumulate_theta_grad(const Matrix& grad_g, std::span<double> out) const {
  skew_grad_to_theta(grad_q(grad_g), out);
}

void skew_grad_to_theta(const Matrix& grad_q, std::span<double> out) {
  const std::size_t b = grad_q.rows();
  if (out.size() != SkewParams::count_for(b)) {
    throw DimensionError("skew_grad_to_theta: output length mismatch");
  }
  std::size_t idx = 0;
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = i + 1; j < b; ++j) out[idx++] += grad_q(i, j) - grad_q(j, i);
}

}  // namespace poet
