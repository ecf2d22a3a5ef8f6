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

#include "poet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poet/diagnostics.hpp"
#include "poet/error.hpp"
#include "poet/optim.hpp"
#include "poet/parallel.hpp"

namespace poet {

namespace {

std::vector<double> unit_gaussian(std::size_t n, RngKey key) {
  RngStream rng(key);
  std::vector<double> v(n);
  double ss = 0.0;
  for (double& x : v) {
    x = rng.normal();
    ss += x * x;
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> support_of(const PrimitiveSpec& spec) {
  std::vector<double> out;
  if (const auto* fs = std::get_if<FsPrimitive>(&spec)) {
    for (std::size_t i : fs->set.indices()) out.push_back(static_cast<double>(i));
  }
  if (const auto* bs = std::get_if<BsPrimitive>(&spec)) {
    for (std::size_t i : bs->perm.indices()) out.push_back(static_cast<double>(i));
  }
  return out;
}

std::vector<std::size_t> to_indices(const std::vector<double>& v) {
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (double x : v) {
    if (!(x >= 0.0) || x != std::floor(x)) throw FormatError("checkpoint: invalid support index");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

PrimitiveSpec rebuild_primitive(SpoVariant variant, std::size_t dim, std::size_t block,
                                const std::vector<double>& support,
                                const std::vector<double>& theta) {
  if (support.empty()) return IdentityPrimitive{dim};
  PrimitiveSpec spec;
  if (variant == SpoVariant::kFullyStochastic) {
    spec = make_fs_primitive(IndexSet(dim, to_indices(support)));
  } else {
    spec = make_bs_primitive(Permutation(to_indices(support)), block);
  }
  std::size_t offset = 0;
  for (auto view : theta_views(spec)) {
    if (offset + view.size() > theta.size()) throw FormatError("checkpoint: theta too short");
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(offset), view.size(), view.begin());
    offset += view.size();
  }
  if (offset != theta.size()) throw FormatError("checkpoint: theta length mismatch");
  return spec;
}

void save_adam(Checkpoint& ck, const std::string& prefix, const AdamState& s) {
  ck.put_vector(prefix + ".m", s.m);
  ck.put_vector(prefix + ".v", s.v);
  ck.put_scalar(prefix + ".step", static_cast<double>(s.step));
}

void load_adam(const Checkpoint& ck, const std::string& prefix, AdamState& s) {
  s.m = ck.get_vector(prefix + ".m");
  s.v = ck.get_vector(prefix + ".v");
  s.step = static_cast<long>(ck.get_scalar(prefix + ".step"));
}

Matrix rows_to_matrix(const std::vector<double>& flat, std::size_t width) {
  if (width == 0) return Matrix(0, 0);
  return Matrix(flat.size() / width, width, flat);
}

}  // namespace

TrainSession::TrainSession(TrainConfig cfg) : cfg_(std::move(cfg)) {
  validate_config(cfg_);
  cfg_.init.seed = cfg_.seed;
  const RngKey root(cfg_.seed);
  if (cfg_.data.kind == DataKind::kTwoMoons) {
    points_train_ = make_two_moons(cfg_.data.train_size, cfg_.data.noise, root.derive("train_data"));
    points_val_ = make_two_moons(cfg_.data.val_size, cfg_.data.noise, root.derive("val_data"));
    train_eval_ = all_points(*points_train_);
    val_eval_ = all_points(*points_val_);
    model_ = make_mlp(cfg_);
  } else {
    corpus_ = CharCorpus::load(cfg_.data.path, cfg_.data.val_fraction);
    train_eval_ = corpus_->windows(false, cfg_.data.eval_windows, cfg_.model.context);
    val_eval_ = corpus_->windows(true, cfg_.data.eval_windows, cfg_.model.context);
    model_ = make_tiny_lm(cfg_, corpus_->vocab_size());
  }
  const RngKey probe_key = root.derive("probe");
  std::uint64_t idx = 0;
  for (auto& proj : model_->projections()) {
    names_.push_back(proj.name());
    if (proj.is_poet() && cfg_.diagnostics.probe) {
      proj.poet().set_probe(unit_gaussian(proj.rows(), probe_key.derive(idx).derive("R")),
                            unit_gaussian(proj.cols(), probe_key.derive(idx).derive("P")));
    }
    ++idx;
  }
  initial_ = effective_weights();
  probe_traj_r_.resize(names_.size());
  probe_traj_p_.resize(names_.size());
  sigma_traj_.resize(names_.size());
}

std::vector<Matrix> TrainSession::effective_weights() const {
  std::vector<Matrix> out;
  for (const auto& p : model_->projections()) out.push_back(p.effective_weight());
  return out;
}

Batch TrainSession::train_batch(long step) const {
  const RngKey key = RngKey(cfg_.seed).derive("batch").derive(static_cast<std::uint64_t>(step));
  if (points_train_) return sample_points(*points_train_, cfg_.schedule.batch_size, key);
  return corpus_->sample(cfg_.schedule.batch_size, cfg_.model.context, key);
}

double TrainSession::learning_rate(long step) const {
  return cosine_lr(step, cfg_.schedule.steps, 1.0, cfg_.schedule.warmup, cfg_.schedule.min_lr_ratio);
}

void TrainSession::advance() {
  const long t = step_ + 1;
  model_->zero_grad();
  {
    Tape tape;
    const Tape::Var loss = model_->loss(tape, train_batch(t));
    if (!std::isfinite(tape.scalar(loss))) {
      throw DivergenceError("non-finite training loss at step " + std::to_string(t), t);
    }
    tape.backward(loss);
  }

  std::vector<std::span<double>> grads;
  for (auto& proj : model_->projections()) {
    if (proj.is_poet()) {
      grads.push_back(proj.poet().theta_grad(Side::kLeft));
      grads.push_back(proj.poet().theta_grad(Side::kRight));
    } else {
      grads.push_back(proj.direct().grad.data());
    }
  }
  for (auto& p : model_->parameters()) grads.push_back(p.grad.data());
  ClipPolicy policy;
  policy.threshold = cfg_.optimizer.clip;
  policy.post_merge_steps = cfg_.optimizer.post_merge_clip_steps;
  policy.post_merge_factor = cfg_.optimizer.post_merge_clip_factor;
  clip_gradients(grads, policy, since_merge_);

  const double mult = learning_rate(t - 1);
  const double lr_poet = cfg_.optimizer.lr_poet * mult;
  const double lr_direct = cfg_.optimizer.lr_direct * mult;
  const double wd = cfg_.optimizer.weight_decay;
  AdamHyper hyper{cfg_.optimizer.beta1, cfg_.optimizer.beta2, cfg_.optimizer.eps};
  for (auto& proj : model_->projections()) {
    if (proj.is_poet()) {
      PoetLayer& layer = proj.poet();
      for (Side side : {Side::kLeft, Side::kRight}) {
        if (layer.theta_count(side) == 0) continue;
        std::vector<double> theta = layer.theta(side);
        adamw_step(theta, layer.theta_grad(side), side == Side::kLeft ? proj.adam_r : proj.adam_p,
                   lr_poet, wd, hyper, t);
        layer.set_theta(side, theta);
      }
      layer.count_step();
    } else {
      Parameter& w = proj.direct();
      adamw_step(w.value.data(), w.grad.data(), w.adam, lr_direct, wd, hyper, t);
    }
  }
  for (auto& p : model_->parameters()) {
    adamw_step(p.value.data(), p.grad.data(), p.adam, lr_direct, p.decay ? wd : 0.0, hyper, t);
  }
  if (since_merge_ >= 0) ++since_merge_;
  step_ = t;
  if (t % cfg_.spo.merge_every == 0) merge_all();
}

void TrainSession::merge_all() {
  bool any = false;
  for (auto& proj : model_->projections()) {
    if (!proj.is_poet()) continue;
    proj.poet().merge_reinit();
    merged_orth_peak_ = std::max(merged_orth_peak_, proj.poet().merged_orth_error());
    proj.adam_r.reset();
    proj.adam_p.reset();
    any = true;
  }
  if (any) since_merge_ = 0;
}

bool TrainSession::eval_due() const {
  return step_ == 0 || step_ % cfg_.schedule.eval_every == 0 || step_ == cfg_.schedule.steps;
}

double TrainSession::train_loss() { return model_->evaluate(train_eval_); }
double TrainSession::val_loss() { return model_->evaluate(val_eval_); }

const MetricsRecord& TrainSession::evaluate() {
  MetricsRecord rec;
  rec.step = step_;
  rec.train_loss = train_loss();
  rec.val_loss = val_loss();
  rec.lr = (cfg_.spo.mode == ProjectionMode::kPoet ? cfg_.optimizer.lr_poet
                                                   : cfg_.optimizer.lr_direct) *
           learning_rate(std::max(step_ - 1, 0L));

  auto& projs = model_->projections();
  const std::size_t n = projs.size();
  std::vector<std::vector<double>> sigmas(n);
  std::vector<double> energy(n, 0.0);
  std::vector<double> orth(n, 0.0);
  rec.matrices.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const Projection& proj = projs[i];
    const Matrix w = proj.effective_weight();
    sigmas[i] = singular_values(w);
    if (cfg_.diagnostics.energy && w.cols() >= 2) energy[i] = hyperspherical_energy(w);
    MatrixMetrics& mm = rec.matrices[i];
    mm.sigma_max = sigmas[i].front();
    mm.sigma_min = sigmas[i].back();
    if (proj.is_poet()) {
      orth[i] = proj.poet().orth_error();
      if (proj.poet().has_probe()) {
        mm.probe_r = proj.poet().probe(Side::kLeft);
        mm.probe_p = proj.poet().probe(Side::kRight);
      }
    }
  });
  double entropy_sum = 0.0;
  std::size_t entropy_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rec.he_total += energy[i];
    rec.e_orth_max = std::max(rec.e_orth_max, orth[i]);
    if (sigmas[i].size() >= 2) {
      entropy_sum += svd_entropy(sigmas[i]);
      ++entropy_count;
    }
    const double s = static_cast<double>(step_);
    probe_traj_r_[i].insert(probe_traj_r_[i].end(), {s, rec.matrices[i].probe_r});
    probe_traj_p_[i].insert(probe_traj_p_[i].end(), {s, rec.matrices[i].probe_p});
    if (cfg_.diagnostics.spectrum) {
      sigma_traj_[i].push_back(s);
      sigma_traj_[i].insert(sigma_traj_[i].end(), sigmas[i].begin(), sigmas[i].end());
    }
  }
  // A merge folds the current factors into W, so their error would be lost
  // to the next row unless it is carried here.
  rec.e_orth_max = std::max(rec.e_orth_max, merged_orth_peak_);
  merged_orth_peak_ = 0.0;
  rec.svd_entropy_mean = entropy_count ? entropy_sum / static_cast<double>(entropy_count) : 0.0;
  if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
    throw DivergenceError("non-finite evaluation loss at step " + std::to_string(step_), step_);
  }
  metrics_.push_back(std::move(rec));
  return metrics_.back();
}

Checkpoint TrainSession::save() const {
  Checkpoint ck;
  const std::uint64_t fp = config_fingerprint(cfg_);
  ck.put_vector("meta/fingerprint", {static_cast<double>(fp >> 32), static_cast<double>(fp & 0xffffffffULL)});
  ck.put_scalar("meta/step", static_cast<double>(step_));
  ck.put_scalar("meta/since_merge", static_cast<double>(since_merge_));
  ck.put_scalar("meta/merged_orth_peak", merged_orth_peak_);

  const auto& projs = model_->projections();
  for (std::size_t i = 0; i < projs.size(); ++i) {
    const Projection& proj = projs[i];
    const std::string p = "layer/" + proj.name() + "/";
    ck.put("init/" + proj.name(), initial_[i]);
    if (proj.is_poet()) {
      const PoetLayer& layer = proj.poet();
      ck.put(p + "W", layer.weight());
      ck.put_vector(p + "theta_R", layer.theta(Side::kLeft));
      ck.put_vector(p + "theta_P", layer.theta(Side::kRight));
      ck.put_vector(p + "support_R", support_of(layer.primitive(Side::kLeft)));
      ck.put_vector(p + "support_P", support_of(layer.primitive(Side::kRight)));
      ck.put_scalar(p + "cycle", static_cast<double>(layer.cycle()));
      ck.put_scalar(p + "steps_since_merge", static_cast<double>(layer.steps_since_merge()));
      save_adam(ck, p + "adam_R", proj.adam_r);
      save_adam(ck, p + "adam_P", proj.adam_p);
      if (layer.has_probe()) {
        const auto& ps = layer.probe_state();
        ck.put_vector(p + "probe_v_R", ps.v_r);
        ck.put_vector(p + "probe_acc_R", ps.acc_r);
        ck.put_vector(p + "probe_v_P", ps.v_p);
        ck.put_vector(p + "probe_acc_P", ps.acc_p);
      }
    } else {
      ck.put(p + "W", proj.direct().value);
      save_adam(ck, p + "adam", proj.direct().adam);
    }
    ck.put("probe/" + proj.name() + ".R", rows_to_matrix(probe_traj_r_[i], 2));
    ck.put("probe/" + proj.name() + ".P", rows_to_matrix(probe_traj_p_[i], 2));
    if (cfg_.diagnostics.spectrum) {
      const std::size_t width = 1 + std::min(proj.rows(), proj.cols());
      ck.put("sigma/" + proj.name(), rows_to_matrix(sigma_traj_[i], width));
    }
  }
  for (const auto& param : model_->parameters()) {
    ck.put("param/" + param.name, param.value);
    save_adam(ck, "param/" + param.name + "/adam", param.adam);
  }

  const std::size_t width = kMetricsFixedColumns + 4 * names_.size();
  std::vector<double> flat;
  for (const auto& r : metrics_) {
    flat.insert(flat.end(), {static_cast<double>(r.step), r.train_loss, r.val_loss, r.lr,
                             r.he_total, r.svd_entropy_mean, r.e_orth_max});
    for (const auto& m : r.matrices) {
      flat.insert(flat.end(), {m.probe_r, m.probe_p, m.sigma_max, m.sigma_min});
    }
  }
  ck.put("metrics", Matrix(metrics_.size(), width, std::move(flat)));
  return ck;
}

void TrainSession::load(const Checkpoint& ck) {
  const std::uint64_t fp = config_fingerprint(cfg_);
  const auto stored = ck.get_vector("meta/fingerprint");
  if (stored.size() != 2 ||
      ((static_cast<std::uint64_t>(stored[0]) << 32) | static_cast<std::uint64_t>(stored[1])) != fp) {
    throw ConfigError("checkpoint was written for a different configuration");
  }
  step_ = static_cast<long>(ck.get_scalar("meta/step"));
  since_merge_ = static_cast<long>(ck.get_scalar("meta/since_merge"));
  merged_orth_peak_ = ck.get_scalar("meta/merged_orth_peak");

  auto& projs = model_->projections();
  for (std::size_t i = 0; i < projs.size(); ++i) {
    Projection& proj = projs[i];
    const std::string p = "layer/" + proj.name() + "/";
    initial_[i] = ck.get("init/" + proj.name());
    if (proj.is_poet()) {
      PoetLayer& layer = proj.poet();
      const auto& o = layer.options();
      PrimitiveSpec r = rebuild_primitive(o.variant, layer.rows(), o.block_r,
                                          ck.get_vector(p + "support_R"), ck.get_vector(p + "theta_R"));
      PrimitiveSpec q = rebuild_primitive(o.variant, layer.cols(), o.block_p,
                                          ck.get_vector(p + "support_P"), ck.get_vector(p + "theta_P"));
      layer.restore(ck.get(p + "W"), std::move(r), std::move(q),
                    static_cast<std::uint64_t>(ck.get_scalar(p + "cycle")),
                    static_cast<long>(ck.get_scalar(p + "steps_since_merge")));
      load_adam(ck, p + "adam_R", proj.adam_r);
      load_adam(ck, p + "adam_P", proj.adam_p);
      if (layer.has_probe()) {
        layer.restore_probe_state({ck.get_vector(p + "probe_v_R"), ck.get_vector(p + "probe_acc_R"),
                                   ck.get_vector(p + "probe_v_P"), ck.get_vector(p + "probe_acc_P")});
      }
    } else {
      const Matrix& w = ck.get(p + "W");
      if (w.rows() != proj.rows() || w.cols() != proj.cols()) {
        throw FormatError("checkpoint record '" + p + "W' has the wrong shape");
      }
      proj.direct().value = w;
      load_adam(ck, p + "adam", proj.direct().adam);
    }
    probe_traj_r_[i] = ck.get_vector("probe/" + proj.name() + ".R");
    probe_traj_p_[i] = ck.get_vector("probe/" + proj.name() + ".P");
    if (cfg_.diagnostics.spectrum) sigma_traj_[i] = ck.get_vector("sigma/" + proj.name());
  }
  for (auto& param : model_->parameters()) {
    const Matrix& v = ck.get("param/" + param.name);
    if (v.rows() != param.value.rows() || v.cols() != param.value.cols()) {
      throw FormatError("checkpoint record 'param/" + param.name + "' has the wrong shape");
    }
    param.value = v;
    load_adam(ck, "param/" + param.name + "/adam", param.adam);
  }

  const Matrix& m = ck.get("metrics");
  metrics_.clear();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    MetricsRecord rec;
    rec.step = static_cast<long>(m(r, 0));
    rec.train_loss = m(r, 1);
    rec.val_loss = m(r, 2);
    rec.lr = m(r, 3);
    rec.he_total = m(r, 4);
    rec.svd_entropy_mean = m(r, 5);
    rec.e_orth_max = m(r, 6);
    for (std::size_t k = 0; k < names_.size(); ++k) {
      const std::size_t b = kMetricsFixedColumns + 4 * k;
      rec.matrices.push_back({m(r, b), m(r, b + 1), m(r, b + 2), m(r, b + 3)});
    }
    metrics_.push_back(std::move(rec));
  }
}

TrainResult train(const TrainConfig& cfg, const TrainOptions& opts) {
  TrainSession session(cfg);
  if (opts.resume) session.load(Checkpoint::read(*opts.resume));

  std::optional<MetricsWriter> writer;
  std::filesystem::path ck_path;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    writer.emplace(opts.out_dir / "metrics.csv", session.matrix_names());
    for (const auto& rec : session.metrics()) writer->append(rec);
    ck_path = opts.out_dir / "checkpoint.poet";
  }
  auto record = [&](const MetricsRecord& rec) {
    if (writer) {
      writer->append(rec);
      session.save().write(ck_path);
    }
    if (opts.on_eval) opts.on_eval(rec);
  };

  if (session.step() == 0 && session.metrics().empty()) record(session.evaluate());
  while (session.step() < cfg.schedule.steps) {
    if (opts.stop_after >= 0 && session.step() >= opts.stop_after) break;
    session.advance();
    if (session.eval_due()) record(session.evaluate());
  }
  if (writer) session.save().write(ck_path);

  TrainResult out;
  out.matrix_names = session.matrix_names();
  out.metrics = session.metrics();
  out.initial_weights = session.initial_weights();
  out.final_weights = session.effective_weights();
  out.steps_completed = session.step();
  return out;
}

double finite_diff_check(const PoetLayer& layer, const Matrix& x, const OutputLoss& loss,
                         double h) {
  if (!(h > 0.0)) throw ArgumentError("finite_diff_check: h must be positive");
  const Matrix y = layer.forward(x);
  Matrix dy(y.rows(), y.cols());
  loss(y, &dy);
  const PoetGrads analytic = poet_backward(layer, x, dy);

  double worst = 0.0;
  PoetLayer probe = layer;
  for (Side side : {Side::kLeft, Side::kRight}) {
    const std::vector<double> theta = layer.theta(side);
    const std::vector<double>& grad = side == Side::kLeft ? analytic.theta_r : analytic.theta_p;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      std::vector<double> t = theta;
      t[i] = theta[i] + h;
      probe.set_theta(side, t);
      const double up = loss(probe.forward(x), nullptr);
      t[i] = theta[i] - h;
      probe.set_theta(side, t);
      const double down = loss(probe.forward(x), nullptr);
      probe.set_theta(side, theta);
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::fabs(grad[i] - numeric) / (std::fabs(grad[i]) + 1e-12));
    }
  }
  return worst;
}

}  // namespace poet
