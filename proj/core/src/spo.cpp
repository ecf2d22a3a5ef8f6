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

#include "poet/spo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poet/error.hpp"

namespace poet {

IndexSet::IndexSet(std::size_t m, std::vector<std::size_t> indices)
    : m_(m), indices_(std::move(indices)) {
  if (indices_.size() > m_) throw ArgumentError("IndexSet: more indices than the ambient dimension");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] >= m_) throw ArgumentError("IndexSet: index out of range");
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw ArgumentError("IndexSet: indices must be strictly increasing");
    }
  }
}

bool IndexSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

IndexSet sample_index_set(std::size_t m, std::size_t b, RngKey key) {
  if (b < 1 || b > m) {
    throw ArgumentError("sample_index_set: need 1 <= b <= m, got b=" + std::to_string(b) +
                        ", m=" + std::to_string(m));
  }
  RngStream rng(key);
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  // Partial Fisher-Yates: the first b slots are a uniform b-subset.
  for (std::size_t i = 0; i < b; ++i) std::swap(pool[i], pool[i + rng.below(m - i)]);
  pool.resize(b);
  std::sort(pool.begin(), pool.end());
  return IndexSet(m, std::move(pool));
}

std::string to_string(SpoVariant v) {
  return v == SpoVariant::kFullyStochastic ? "fs" : "bs";
}

SpoVariant parse_spo_variant(std::string_view name) {
  if (name == "fs") return SpoVariant::kFullyStochastic;
  if (name == "bs") return SpoVariant::kBlockStochastic;
  throw ArgumentError("unknown SPO variant '" + std::string(name) + "' (expected fs or bs)");
}

BsPrimitive make_bs_primitive(Permutation perm, std::size_t block_size) {
  const std::size_t m = perm.size();
  if (block_size == 0 || m % block_size != 0) {
    throw ArgumentError("block-stochastic SPO needs the dimension " + std::to_string(m) +
                        " to be divisible by the block size " + std::to_string(block_size));
  }
  BsPrimitive p;
  p.perm = std::move(perm);
  p.block_size = block_size;
  p.blocks.assign(m / block_size, SkewParams(block_size));
  return p;
}

FsPrimitive make_fs_primitive(IndexSet set) {
  FsPrimitive p;
  p.block = SkewParams(set.size());
  p.set = std::move(set);
  return p;
}

PrimitiveSpec sample_primitive(SpoVariant variant, std::size_t m, std::size_t b, RngKey key) {
  if (b > m) {
    throw ArgumentError("block size " + std::to_string(b) + " exceeds dimension " +
                        std::to_string(m));
  }
  if (variant == SpoVariant::kBlockStochastic) {
    if (b == 0 || m % b != 0) {
      throw ArgumentError("block-stochastic SPO needs the dimension " + std::to_string(m) +
                          " to be divisible by the block size " + std::to_string(b));
    }
    if (b < 2) return IdentityPrimitive{m};
    RngStream rng(key);
    return make_bs_primitive(Permutation(random_permutation(m, rng)), b);
  }
  if (b < 2) return IdentityPrimitive{m};
  return make_fs_primitive(sample_index_set(m, b, key));
}

std::size_t ambient_dim(const PrimitiveSpec& p) {
  struct {
    std::size_t operator()(const IdentityPrimitive& x) const { return x.m; }
    std::size_t operator()(const FsPrimitive& x) const { return x.set.ambient(); }
    std::size_t operator()(const BsPrimitive& x) const { return x.perm.size(); }
  } visitor;
  return std::visit(visitor, p);
}

std::size_t block_size(const PrimitiveSpec& p) {
  struct {
    std::size_t operator()(const IdentityPrimitive&) const { return 0; }
    std::size_t operator()(const FsPrimitive& x) const { return x.set.size(); }
    std::size_t operator()(const BsPrimitive& x) const { return x.block_size; }
  } visitor;
  return std::visit(visitor, p);
}

std::size_t trainable_count(const PrimitiveSpec& p) {
  struct {
    std::size_t operator()(const IdentityPrimitive&) const { return 0; }
    std::size_t operator()(const FsPrimitive& x) const { return x.block.theta().size(); }
    std::size_t operator()(const BsPrimitive& x) const {
      return x.blocks.size() * SkewParams::count_for(x.block_size);
    }
  } visitor;
  return std::visit(visitor, p);
}

bool theta_is_zero(const PrimitiveSpec& p) {
  if (const auto* fs = std::get_if<FsPrimitive>(&p)) return fs->block.is_zero();
  if (const auto* bs = std::get_if<BsPrimitive>(&p)) {
    return std::all_of(bs->blocks.begin(), bs->blocks.end(),
                       [](const SkewParams& s) { return s.is_zero(); });
  }
  return true;
}

void reset_theta(PrimitiveSpec& p) {
  if (auto* fs = std::get_if<FsPrimitive>(&p)) fs->block.reset();
  if (auto* bs = std::get_if<BsPrimitive>(&p))
    for (auto& s : bs->blocks) s.reset();
}

std::vector<std::span<double>> theta_views(PrimitiveSpec& p) {
  std::vector<std::span<double>> out;
  if (auto* fs = std::get_if<FsPrimitive>(&p)) out.push_back(fs->block.theta());
  if (auto* bs = std::get_if<BsPrimitive>(&p))
    for (auto& s : bs->blocks) out.push_back(s.theta());
  return out;
}

std::vector<std::vector<std::size_t>> index_groups(const PrimitiveSpec& p) {
  std::vector<std::vector<std::size_t>> groups;
  if (const auto* fs = std::get_if<FsPrimitive>(&p)) groups.push_back(fs->set.indices());
  if (const auto* bs = std::get_if<BsPrimitive>(&p)) {
    const auto& perm = bs->perm.indices();
    for (std::size_t j = 0; j < bs->blocks.size(); ++j) {
      groups.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(j * bs->block_size),
                          perm.begin() + static_cast<std::ptrdiff_t>((j + 1) * bs->block_size));
    }
  }
  return groups;
}

// ---------------------------------------------------------------------------

namespace {

Matrix gather_rows(const Matrix& w, const std::vector<std::size_t>& g) {
  Matrix out(g.size(), w.cols());
  for (std::size_t t = 0; t < g.size(); ++t) {
    auto src = w.row_span(g[t]);
    std::copy(src.begin(), src.end(), out.row_span(t).begin());
  }
  return out;
}

void scatter_rows(const Matrix& src, const std::vector<std::size_t>& g, Matrix& out) {
  for (std::size_t t = 0; t < g.size(); ++t) {
    auto s = src.row_span(t);
    std::copy(s.begin(), s.end(), out.row_span(g[t]).begin());
  }
}

Matrix gather_cols(const Matrix& w, const std::vector<std::size_t>& g) {
  Matrix out(w.rows(), g.size());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t t = 0; t < g.size(); ++t) out(i, t) = w(i, g[t]);
  return out;
}

void scatter_cols(const Matrix& src, const std::vector<std::size_t>& g, Matrix& out) {
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t t = 0; t < g.size(); ++t) out(i, g[t]) = src(i, t);
}

void check_side(const Matrix& w, std::size_t m, Side side, const char* op) {
  const std::size_t dim = side == Side::kLeft ? w.rows() : w.cols();
  if (dim != m) {
    throw DimensionError(std::string(op) + ": primitive of dimension " + std::to_string(m) +
                         " cannot act on the " + (side == Side::kLeft ? "rows" : "columns") +
                         " of " + w.shape_string());
  }
}

}  // namespace

OrthogonalAction::OrthogonalAction(const PrimitiveSpec& p, NeumannOrder order)
    : m_(ambient_dim(p)), groups_(index_groups(p)) {
  std::vector<const SkewParams*> params;
  if (const auto* fs = std::get_if<FsPrimitive>(&p)) params.push_back(&fs->block);
  if (const auto* bs = std::get_if<BsPrimitive>(&p))
    for (const auto& s : bs->blocks) params.push_back(&s);
  for (const SkewParams* s : params) {
    maps_.emplace_back(CayleyNeumann(*s, order));
    blocks_.push_back(maps_.back()->value());
    identity_.push_back(maps_.back()->is_identity());
  }
}

OrthogonalAction::OrthogonalAction(std::size_t m, std::vector<std::vector<std::size_t>> groups,
                                   std::vector<Matrix> blocks)
    : m_(m), groups_(std::move(groups)), blocks_(std::move(blocks)) {
  if (groups_.size() != blocks_.size()) throw DimensionError("OrthogonalAction: groups/blocks count");
  for (std::size_t j = 0; j < groups_.size(); ++j) {
    if (blocks_[j].rows() != groups_[j].size() || !blocks_[j].is_square()) {
      throw DimensionError("OrthogonalAction: block " + std::to_string(j) + " has shape " +
                           blocks_[j].shape_string());
    }
    for (std::size_t i : groups_[j])
      if (i >= m_) throw ArgumentError("OrthogonalAction: group index out of range");
    identity_.push_back(blocks_[j] == Matrix::identity(groups_[j].size()));
    maps_.emplace_back(std::nullopt);
  }
}

OrthogonalAction OrthogonalAction::exact(const PrimitiveSpec& p) {
  std::vector<Matrix> blocks;
  if (const auto* fs = std::get_if<FsPrimitive>(&p)) {
    blocks.push_back(cayley_exact(skew_materialize(fs->block)));
  }
  if (const auto* bs = std::get_if<BsPrimitive>(&p)) {
    for (const auto& s : bs->blocks) blocks.push_back(cayley_exact(skew_materialize(s)));
  }
  return OrthogonalAction(ambient_dim(p), index_groups(p), std::move(blocks));
}

Matrix OrthogonalAction::apply(const Matrix& w, Side side) const {
  check_side(w, m_, side, "OrthogonalAction::apply");
  Matrix out = w;
  for (std::size_t j = 0; j < groups_.size(); ++j) {
    if (identity_[j]) continue;  // rows/cols are copied bit-exactly
    if (side == Side::kLeft) {
      scatter_rows(matmul(blocks_[j], gather_rows(w, groups_[j])), groups_[j], out);
    } else {
      scatter_cols(matmul(gather_cols(w, groups_[j]), blocks_[j]), groups_[j], out);
    }
  }
  return out;
}

Matrix OrthogonalAction::apply_transpose(const Matrix& w, Side side) const {
  check_side(w, m_, side, "OrthogonalAction::apply_transpose");
  Matrix out = w;
  for (std::size_t j = 0; j < groups_.size(); ++j) {
    if (identity_[j]) continue;
    if (side == Side::kLeft) {
      scatter_rows(matmul_tn(blocks_[j], gather_rows(w, groups_[j])), groups_[j], out);
    } else {
      scatter_cols(matmul_nt(gather_cols(w, groups_[j]), blocks_[j]), groups_[j], out);
    }
  }
  return out;
}

std::vector<Matrix> OrthogonalAction::zero_block_grads() const {
  std::vector<Matrix> grads;
  grads.reserve(blocks_.size());
  for (const auto& b : blocks_) grads.emplace_back(b.rows(), b.cols());
  return grads;
}

void OrthogonalAction::accumulate_block_grads(const Matrix& x, const Matrix& dy, Side side,
                                              std::vector<Matrix>& grads) const {
  check_side(x, m_, side, "OrthogonalAction::accumulate_block_grads");
  if (x.rows() != dy.rows() || x.cols() != dy.cols()) {
    throw DimensionError("accumulate_block_grads: x " + x.shape_string() + " vs dy " +
                         dy.shape_string());
  }
  if (grads.size() != blocks_.size()) throw DimensionError("accumulate_block_grads: grads count");
  for (std::size_t j = 0; j < groups_.size(); ++j) {
    if (side == Side::kLeft) {
      // y_g = G x_g  =>  dG = dy_g x_g^T
      axpy(1.0, matmul_nt(gather_rows(dy, groups_[j]), gather_rows(x, groups_[j])), grads[j]);
    } else {
      // y_g = x_g G  =>  dG = x_g^T dy_g
      axpy(1.0, matmul_tn(gather_cols(x, groups_[j]), gather_cols(dy, groups_[j])), grads[j]);
    }
  }
}

void OrthogonalAction::accumulate_theta_grads(const std::vector<Matrix>& block_grads,
                                              std::vector<std::span<double>> theta_grads) const {
  if (block_grads.size() != blocks_.size() || theta_grads.size() != blocks_.size()) {
    throw DimensionError("accumulate_theta_grads: block count mismatch");
  }
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (!maps_[j]) throw Error("accumulate_theta_grads: action was built from fixed blocks");
    maps_[j]->accumulate_theta_grad(block_grads[j], theta_grads[j]);
  }
}

Matrix OrthogonalAction::materialize() const { return apply(Matrix::identity(m_), Side::kLeft); }

double OrthogonalAction::orth_error() const {
  // R R^T - I is zero outside the groups and G G^T - I on each group.
  double ssq = 0.0;
  for (const auto& g : blocks_) {
    Matrix ggt = matmul_nt(g, g);
    for (std::size_t i = 0; i < ggt.rows(); ++i) ggt(i, i) -= 1.0;
    const double f = frobenius_norm(ggt);
    ssq += f * f;
  }
  return m_ == 0 ? 0.0 : std::sqrt(ssq / static_cast<double>(m_));
}

Matrix fs_apply(const FsPrimitive& prim, NeumannOrder order, const Matrix& w, Side side) {
  if (prim.block.dim() != prim.set.size()) {
    throw DimensionError("fs_apply: block dimension does not match the index set");
  }
  return OrthogonalAction(PrimitiveSpec(prim), order).apply(w, side);
}

Matrix bs_apply(const BsPrimitive& prim, NeumannOrder order, const Matrix& w, Side side) {
  return OrthogonalAction(PrimitiveSpec(prim), order).apply(w, side);
}

// ---------------------------------------------------------------------------

std::size_t factorization_budget(std::size_t m, std::size_t b, double alpha) {
  const double md = static_cast<double>(m);
  const double ratio = md / static_cast<double>(b);
  return static_cast<std::size_t>(std::ceil(alpha * md * std::log(md) * ratio * ratio));
}

namespace {

constexpr double kZeroTol = 1e-12;

bool column_done(const Matrix& p, std::size_t k) {
  if (!(p(k, k) > 0.0)) return false;
  for (std::size_t l = k + 1; l < p.rows(); ++l)
    if (std::fabs(p(l, k)) > kZeroTol) return false;
  return true;
}

double subdiagonal_mass(const Matrix& p) {
  double s = 0.0;
  for (std::size_t c = 0; c < p.cols(); ++c)
    for (std::size_t l = c + 1; l < p.rows(); ++l) s += p(l, c) * p(l, c);
  return std::sqrt(s);
}

// Rotation (det +1) taking x to ||x|| e_1. Needs x.size() >= 2; a Householder
// reflection with its last row negated.
Matrix align_to_first_axis(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double tail = 0.0;
  for (std::size_t i = 1; i < n; ++i) tail += x[i] * x[i];
  const double norm = std::sqrt(x[0] * x[0] + tail);
  Matrix h = Matrix::identity(n);
  if (norm == 0.0 || (tail == 0.0 && x[0] >= 0.0)) return h;
  std::vector<double> v = x;
  v[0] = x[0] > 0.0 ? -tail / (x[0] + norm) : x[0] - norm;
  double vv = 0.0;
  for (double e : v) vv += e * e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) -= 2.0 * v[i] * v[j] / vv;
  for (std::size_t j = 0; j < n; ++j) h(n - 1, j) = -h(n - 1, j);
  return h;
}

}  // namespace

Factorization factorize_target(const Matrix& r_target, std::size_t b, double alpha, RngKey key) {
  if (!r_target.is_square()) {
    throw DimensionError("factorize_target: non-square target " + r_target.shape_string());
  }
  const std::size_t m = r_target.rows();
  if (b < 2 || b > m) {
    throw ArgumentError("factorize_target: need 2 <= b <= m, got b=" + std::to_string(b) +
                        ", m=" + std::to_string(m));
  }
  if (!(alpha > 0.0)) throw ArgumentError("factorize_target: alpha must be positive");
  if (orth_error(r_target) > 1e-8) throw ArgumentError("factorize_target: target is not orthogonal");
  if (determinant(r_target) < 0.0) {
    throw ArgumentError("factorize_target: target has determinant -1; primitives are rotations");
  }

  Factorization out;
  if (b == m) {
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), 0);
    out.primitives.push_back({IndexSet(m, std::move(all)), r_target});
    out.draws = 1;
    return out;
  }

  const std::size_t budget = factorization_budget(m, b, alpha);
  Matrix p = transpose(r_target);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    while (!column_done(p, k)) {
      if (out.draws >= budget) {
        const double mass = subdiagonal_mass(p);
        throw BudgetExhaustedError(
            "factorize_target: budget of " + std::to_string(budget) +
                " primitives exhausted at column " + std::to_string(k) +
                " (remaining sub-diagonal mass " + std::to_string(mass) + ")",
            mass, out.draws);
      }
      IndexSet set = sample_index_set(m, b, key.derive(out.draws));
      ++out.draws;
      const auto& idx = set.indices();
      Matrix block = Matrix::identity(b);
      const auto pos = std::find(idx.begin(), idx.end(), k);
      if (pos != idx.end()) {
        // Entries of the set below k are finished coordinates: identity there.
        const std::size_t first = static_cast<std::size_t>(pos - idx.begin());
        const std::size_t tail_len = b - first;
        if (tail_len >= 2) {
          std::vector<double> x(tail_len);
          for (std::size_t t = 0; t < tail_len; ++t) x[t] = p(idx[first + t], k);
          const Matrix q = align_to_first_axis(x);
          for (std::size_t t = 0; t < tail_len; ++t)
            for (std::size_t u = 0; u < tail_len; ++u) block(first + t, first + u) = q(t, u);
        }
      }
      OrthogonalAction g(m, {idx}, {block});
      p = g.apply(p, Side::kLeft);
      out.primitives.push_back({std::move(set), std::move(block)});
    }
  }
  return out;
}

Matrix random_rotation(std::size_t m, RngKey key) {
  if (m == 0) throw ArgumentError("random_rotation: dimension must be positive");
  RngStream rng(key);
  Matrix g(m, m);
  for (double& x : g.data()) x = rng.normal();
  const SvdResult f = svd(g);
  Matrix q = matmul(f.u, f.vt);
  if (determinant(q) < 0.0) {
    for (std::size_t i = 0; i < m; ++i) q(i, 0) = -q(i, 0);
  }
  return q;
}

Matrix compose(const std::vector<FactorPrimitive>& primitives, std::size_t m) {
  Matrix acc = Matrix::identity(m);
  for (const auto& prim : primitives) {
    OrthogonalAction g(m, {prim.set.indices()}, {prim.block});
    acc = g.apply(acc, Side::kLeft);
  }
  return acc;
}

}  // namespace poet
