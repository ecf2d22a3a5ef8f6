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

#include "poet/poet_layer.hpp"

#include <algorithm>
#include <cmath>

#include "poet/error.hpp"

namespace poet {

namespace {

RngKey side_key(RngKey key, Side side) { return key.derive(side == Side::kLeft ? "R" : "P"); }

}  // namespace

PoetLayer::PoetLayer(Matrix w0, const PoetLayerOptions& opts, RngKey key)
    : w_(std::move(w0)), opts_(opts), key_(key) {
  if (w_.empty()) throw ArgumentError("PoetLayer: empty weight");
  r_ = sample_side(Side::kLeft);
  p_ = sample_side(Side::kRight);
  grad_r_.assign(trainable_count(r_), 0.0);
  grad_p_.assign(trainable_count(p_), 0.0);
}

PrimitiveSpec PoetLayer::sample_side(Side side) const {
  const std::size_t dim = side == Side::kLeft ? w_.rows() : w_.cols();
  const std::size_t b = side == Side::kLeft ? opts_.block_r : opts_.block_p;
  if (b < 2) return IdentityPrimitive{dim};
  return sample_primitive(opts_.variant, dim, b, side_key(key_, side).derive(cycle_));
}

OrthogonalAction PoetLayer::make_action(const PrimitiveSpec& spec) const {
  return opts_.exact_cayley ? OrthogonalAction::exact(spec) : OrthogonalAction(spec, opts_.order);
}

OrthogonalAction PoetLayer::action(Side side) const {
  return make_action(side == Side::kLeft ? r_ : p_);
}

Matrix PoetLayer::forward(const Matrix& x, PoetCache* cache) const {
  if (x.cols() != w_.rows()) {
    throw DimensionError("PoetLayer::forward: input " + x.shape_string() + " vs weight " +
                         w_.shape_string());
  }
  auto r = std::make_shared<const OrthogonalAction>(action(Side::kLeft));
  auto p = std::make_shared<const OrthogonalAction>(action(Side::kRight));
  Matrix v = matmul(r->apply(x, Side::kRight), w_);
  Matrix y = p->apply(v, Side::kRight);
  if (cache != nullptr) {
    cache->x = x;
    cache->v = std::move(v);
    cache->r = std::move(r);
    cache->p = std::move(p);
  }
  return y;
}

Matrix PoetLayer::backward(const PoetCache& cache, const Matrix& dy) {
  if (opts_.exact_cayley) throw Error("PoetLayer::backward: exact-Cayley layers have no backward");
  if (dy.rows() != cache.v.rows() || dy.cols() != w_.cols()) {
    throw DimensionError("PoetLayer::backward: upstream gradient " + dy.shape_string() +
                         " does not match output " + cache.v.shape_string());
  }
  // y = v P, v = u W, u = x R.
  auto grads_p = cache.p->zero_block_grads();
  cache.p->accumulate_block_grads(cache.v, dy, Side::kRight, grads_p);
  const Matrix dv = cache.p->apply_transpose(dy, Side::kRight);
  const Matrix du = matmul_nt(dv, w_);
  auto grads_r = cache.r->zero_block_grads();
  cache.r->accumulate_block_grads(cache.x, du, Side::kRight, grads_r);

  auto scatter = [](const OrthogonalAction& a, const std::vector<Matrix>& block_grads,
                    std::vector<double>& flat) {
    std::vector<std::span<double>> views;
    std::size_t offset = 0;
    for (const Matrix& g : block_grads) {
      const std::size_t len = SkewParams::count_for(g.rows());
      views.emplace_back(flat.data() + offset, len);
      offset += len;
    }
    a.accumulate_theta_grads(block_grads, views);
  };
  scatter(*cache.p, grads_p, grad_p_);
  scatter(*cache.r, grads_r, grad_r_);
  return cache.r->apply_transpose(du, Side::kRight);
}

Matrix PoetLayer::merged_weight() const {
  return action(Side::kRight).apply(action(Side::kLeft).apply(w_, Side::kLeft), Side::kRight);
}

void PoetLayer::merge_reinit() {
  const OrthogonalAction r = action(Side::kLeft);
  const OrthogonalAction p = action(Side::kRight);
  if (has_probe()) {
    // acc_r is a column vector (left action), acc_p a row vector (right action).
    probe_.acc_r = r.apply(Matrix::column(probe_.acc_r), Side::kLeft).values();
    probe_.acc_p = p.apply(Matrix::row(probe_.acc_p), Side::kRight).values();
  }
  merged_orth_error_ = std::max(r.orth_error(), p.orth_error());
  w_ = p.apply(r.apply(w_, Side::kLeft), Side::kRight);
  ++cycle_;
  steps_since_merge_ = 0;
  r_ = sample_side(Side::kLeft);
  p_ = sample_side(Side::kRight);
  zero_grad();
}

std::size_t PoetLayer::theta_count(Side side) const {
  return trainable_count(side == Side::kLeft ? r_ : p_);
}

std::vector<double> PoetLayer::theta(Side side) const {
  PrimitiveSpec copy = side == Side::kLeft ? r_ : p_;
  std::vector<double> out;
  for (auto view : theta_views(copy)) out.insert(out.end(), view.begin(), view.end());
  return out;
}

void PoetLayer::set_theta(Side side, std::span<const double> values) {
  PrimitiveSpec& spec = side == Side::kLeft ? r_ : p_;
  if (values.size() != trainable_count(spec)) {
    throw DimensionError("PoetLayer::set_theta: expected " +
                         std::to_string(trainable_count(spec)) + " values, got " +
                         std::to_string(values.size()));
  }
  std::size_t offset = 0;
  for (auto view : theta_views(spec)) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), view.size(), view.begin());
    offset += view.size();
  }
}

void PoetLayer::zero_grad() {
  std::fill(grad_r_.begin(), grad_r_.end(), 0.0);
  std::fill(grad_p_.begin(), grad_p_.end(), 0.0);
  grad_r_.resize(trainable_count(r_), 0.0);
  grad_p_.resize(trainable_count(p_), 0.0);
}

double PoetLayer::orth_error() const {
  return std::max(action(Side::kLeft).orth_error(), action(Side::kRight).orth_error());
}

void PoetLayer::set_probe(std::vector<double> v_r, std::vector<double> v_p) {
  if (v_r.size() != w_.rows() || v_p.size() != w_.cols()) {
    throw DimensionError("PoetLayer::set_probe: probe lengths must match the weight shape " +
                         w_.shape_string());
  }
  probe_v_r_ = v_r;
  probe_v_p_ = v_p;
  probe_ = {std::move(v_r), probe_v_r_, std::move(v_p), probe_v_p_};
}

double PoetLayer::probe(Side side) const {
  if (!has_probe()) throw Error("PoetLayer::probe: no probe vectors set");
  if (side == Side::kLeft) {
    const Matrix rv = action(Side::kLeft).apply(Matrix::column(probe_.acc_r), Side::kLeft);
    return dot(probe_.v_r, rv.data()) / dot(probe_.v_r, probe_.v_r);
  }
  const Matrix vp = action(Side::kRight).apply(Matrix::row(probe_.acc_p), Side::kRight);
  return dot(vp.data(), probe_.v_p) / dot(probe_.v_p, probe_.v_p);
}

void PoetLayer::restore_probe_state(ProbeState s) {
  if (s.v_r.size() != w_.rows() || s.acc_r.size() != w_.rows() || s.v_p.size() != w_.cols() ||
      s.acc_p.size() != w_.cols()) {
    throw DimensionError("PoetLayer::restore_probe_state: length mismatch");
  }
  probe_v_r_ = s.v_r;
  probe_v_p_ = s.v_p;
  probe_ = std::move(s);
}

void PoetLayer::restore(Matrix w, PrimitiveSpec r, PrimitiveSpec p, std::uint64_t cycle,
                        long steps_since_merge) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) {
    throw DimensionError("PoetLayer::restore: weight shape " + w.shape_string() + " vs " +
                         w_.shape_string());
  }
  if (ambient_dim(r) != w.rows() || ambient_dim(p) != w.cols()) {
    throw DimensionError("PoetLayer::restore: primitive dimension mismatch");
  }
  w_ = std::move(w);
  r_ = std::move(r);
  p_ = std::move(p);
  cycle_ = cycle;
  steps_since_merge_ = steps_since_merge;
  grad_r_.assign(trainable_count(r_), 0.0);
  grad_p_.assign(trainable_count(p_), 0.0);
}

PoetGrads poet_backward(const PoetLayer& layer, const Matrix& x, const Matrix& dy) {
  PoetLayer scratch = layer;
  scratch.zero_grad();
  PoetCache cache;
  scratch.forward(x, &cache);
  PoetGrads out;
  out.dx = scratch.backward(cache, dy);
  const auto gr = scratch.theta_grad(Side::kLeft);
  const auto gp = scratch.theta_grad(Side::kRight);
  out.theta_r.assign(gr.begin(), gr.end());
  out.theta_p.assign(gp.begin(), gp.end());
  return out;
}

ParamCount count_params(SpoVariant variant, std::size_t m, std::size_t n, std::size_t b_r,
                        std::size_t b_p) {
  if (m == 0 || n == 0) throw ArgumentError("count_params: dimensions must be positive");
  auto side = [variant](std::size_t dim, std::size_t b) -> std::size_t {
    if (b > dim) {
      throw ArgumentError("count_params: block size " + std::to_string(b) +
                          " exceeds dimension " + std::to_string(dim));
    }
    if (b < 2) return 0;
    if (variant == SpoVariant::kBlockStochastic) {
      if (dim % b != 0) {
        throw ArgumentError("count_params: dimension " + std::to_string(dim) +
                            " is not divisible by block size " + std::to_string(b));
      }
      return (dim / b) * SkewParams::count_for(b);
    }
    return SkewParams::count_for(b);
  };
  ParamCount c;
  c.trainable = side(m, b_r) + side(n, b_p);
  c.memory_units = m * n + 3 * c.trainable;
  return c;
}

}  // namespace poet
