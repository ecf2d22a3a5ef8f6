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

#include "poet/models.hpp"

#include "poet/error.hpp"

namespace poet {

void Model::zero_grad() {
  for (auto& p : projections_) p.zero_grad();
  for (auto& p : params_) p.zero_grad();
}

double Model::evaluate(const Batch& batch) {
  Tape tape;
  return tape.scalar(loss(tape, batch));
}

Projection make_projection(const TrainConfig& cfg, std::string name, std::size_t rows,
                           std::size_t cols, std::uint64_t layer_id) {
  Matrix w0 = init_matrix(cfg.init, rows, cols, layer_id);
  if (cfg.spo.mode == ProjectionMode::kDirect) return Projection(std::move(name), std::move(w0));
  const auto [b_r, b_p] = resolve_block_sizes(cfg.spo, rows, cols);
  PoetLayerOptions opts;
  opts.variant = cfg.spo.variant;
  opts.block_r = b_r;
  opts.block_p = b_p;
  opts.order = NeumannOrder(cfg.spo.neumann_k);
  opts.exact_cayley = cfg.spo.exact_cayley;
  const RngKey key = RngKey(cfg.seed).derive("spo").derive(layer_id);
  return Projection(std::move(name), PoetLayer(std::move(w0), opts, key));
}

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, double sd, RngKey key) {
  RngStream rng(key);
  Matrix w(rows, cols);
  for (double& x : w.data()) x = sd * rng.normal();
  return w;
}

class Mlp : public Model {
 public:
  explicit Mlp(const TrainConfig& cfg) {
    const auto& widths = cfg.model.layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::string name = "fc" + std::to_string(l + 1);
      projections_.push_back(make_projection(cfg, name, widths[l], widths[l + 1], l));
      params_.emplace_back(name + ".bias", Matrix(1, widths[l + 1]), false);
    }
  }

  Tape::Var loss(Tape& tape, const Batch& batch) override {
    Tape::Var h = tape.input(batch.features);
    for (std::size_t l = 0; l < projections_.size(); ++l) {
      h = tape.add_bias(tape.project(h, projections_[l]), params_[l]);
      if (l + 1 < projections_.size()) h = tape.relu(h);
    }
    return tape.bce_with_logits(h, batch.labels);
  }
};

class TinyLm : public Model {
 public:
  TinyLm(const TrainConfig& cfg, std::size_t vocab)
      : d_(cfg.model.hidden), heads_(cfg.model.heads), context_(cfg.model.context) {
    const RngKey key = RngKey(cfg.seed).derive("direct");
    const double sd = 0.02;
    params_.emplace_back("tok_emb", gaussian(vocab, d_, sd, key.derive("tok_emb")), true);
    params_.emplace_back("pos_emb", gaussian(context_, d_, sd, key.derive("pos_emb")), true);
    std::uint64_t layer_id = 0;
    for (std::size_t b = 0; b < cfg.model.blocks; ++b) {
      const std::string p = "blocks." + std::to_string(b) + ".";
      BlockRefs refs;
      refs.norm1 = add_gain(p + "attn_norm");
      refs.q = add_proj(cfg, p + "attn.q", d_, d_, layer_id++);
      refs.k = add_proj(cfg, p + "attn.k", d_, d_, layer_id++);
      refs.v = add_proj(cfg, p + "attn.v", d_, d_, layer_id++);
      refs.o = add_proj(cfg, p + "attn.o", d_, d_, layer_id++);
      refs.norm2 = add_gain(p + "mlp_norm");
      refs.gate = add_proj(cfg, p + "mlp.gate", d_, cfg.model.ffn, layer_id++);
      refs.up = add_proj(cfg, p + "mlp.up", d_, cfg.model.ffn, layer_id++);
      refs.down = add_proj(cfg, p + "mlp.down", cfg.model.ffn, d_, layer_id++);
      blocks_.push_back(refs);
    }
    final_norm_ = add_gain("final_norm");
    params_.emplace_back("lm_head", gaussian(d_, vocab, sd, key.derive("lm_head")), true);
  }

  Tape::Var loss(Tape& tape, const Batch& batch) override {
    if (batch.seq_len == 0 || batch.seq_len > context_) {
      throw DimensionError("tiny_lm: sequence length " + std::to_string(batch.seq_len) +
                           " exceeds context " + std::to_string(context_));
    }
    Tape::Var x = tape.embed(batch.tokens, params_[0]);
    x = tape.add_positional(x, params_[1], batch.seq_len);
    for (const BlockRefs& b : blocks_) {
      Tape::Var h = tape.rmsnorm(x, params_[b.norm1]);
      Tape::Var q = tape.project(h, projections_[b.q]);
      Tape::Var k = tape.project(h, projections_[b.k]);
      Tape::Var v = tape.project(h, projections_[b.v]);
      Tape::Var a = tape.causal_attention(q, k, v, batch.seq_len, heads_);
      x = tape.add(x, tape.project(a, projections_[b.o]));
      h = tape.rmsnorm(x, params_[b.norm2]);
      Tape::Var gate = tape.silu(tape.project(h, projections_[b.gate]));
      Tape::Var up = tape.project(h, projections_[b.up]);
      x = tape.add(x, tape.project(tape.mul(gate, up), projections_[b.down]));
    }
    x = tape.rmsnorm(x, params_[final_norm_]);
    Tape::Var logits = tape.project_param(x, params_.back());
    return tape.cross_entropy(logits, batch.targets);
  }

 private:
  struct BlockRefs {
    std::size_t norm1, norm2, q, k, v, o, gate, up, down;
  };

  std::size_t add_gain(const std::string& name) {
    params_.emplace_back(name, Matrix(1, d_, 1.0), false);
    return params_.size() - 1;
  }

  std::size_t add_proj(const TrainConfig& cfg, const std::string& name, std::size_t rows,
                       std::size_t cols, std::uint64_t layer_id) {
    projections_.push_back(make_projection(cfg, name, rows, cols, layer_id));
    return projections_.size() - 1;
  }

  std::size_t d_;
  std::size_t heads_;
  std::size_t context_;
  std::vector<BlockRefs> blocks_;
  std::size_t final_norm_ = 0;
};

}  // namespace

std::vector<ProjectionShape> projection_shapes(const TrainConfig& cfg) {
  std::vector<ProjectionShape> out;
  if (cfg.model.kind == ModelKind::kMlp) {
    const auto& w = cfg.model.layers;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      out.push_back({"fc" + std::to_string(l + 1), w[l], w[l + 1]});
    }
    return out;
  }
  const std::size_t d = cfg.model.hidden;
  const std::size_t f = cfg.model.ffn;
  for (std::size_t b = 0; b < cfg.model.blocks; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    for (const char* n : {"attn.q", "attn.k", "attn.v", "attn.o"}) out.push_back({p + n, d, d});
    out.push_back({p + "mlp.gate", d, f});
    out.push_back({p + "mlp.up", d, f});
    out.push_back({p + "mlp.down", f, d});
  }
  return out;
}

std::unique_ptr<Model> make_mlp(const TrainConfig& cfg) { return std::make_unique<Mlp>(cfg); }

std::unique_ptr<Model> make_tiny_lm(const TrainConfig& cfg, std::size_t vocab_size) {
  if (vocab_size < 2) throw ArgumentError("make_tiny_lm: vocabulary must have >= 2 symbols");
  return std::make_unique<TinyLm>(cfg, vocab_size);
}

}  // namespace poet
